"""Command line entry point.

    sharegame run <config.json> [--seed N] [--mode M] [--out DIR] [--visiting-prob P] [--players N]
    sharegame verify <config.json> [same flags]
    sharegame oracle <config.json> [--trials T]

Results are printed as one JSON object on stdout.  Failures exit nonzero with
a JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .allocation import ConfigurationError
from .experiment import (
    ExperimentConfig,
    check_output_dir,
    emit_outputs,
    run_experiment,
    verify_invariants,
)
from .lp import SolverError

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SOLVER = 4
EXIT_CHECK = 1


def _parser():
    p = argparse.ArgumentParser(prog="sharegame", description="Strategic inter-operator sharing of a unit resource.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run a Monte-Carlo experiment"), ("verify", "check invariants on every realization")):
        q = sub.add_parser(name, help=text)
        q.add_argument("config")
        q.add_argument("--seed", type=int)
        q.add_argument("--mode", choices=("MDSG", "SDSG", "MDSG+SDSG"))
        q.add_argument("--out", dest="output_dir")
        q.add_argument("--visiting-prob", dest="visiting_prob", type=float)
        q.add_argument("--players", type=int)
        q.add_argument("--workers", type=int)
    q = sub.add_parser("oracle", help="brute-force cross-checks on small instances")
    q.add_argument("config")
    q.add_argument("--trials", type=int, default=200)
    q.add_argument("--seed", type=int)
    return p


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config)
    over = {k: getattr(args, k, None) for k in ("seed", "output_dir", "visiting_prob", "players", "workers")}
    mode = getattr(args, "mode", None)
    if mode is not None:
        over["modes"] = (mode,)
    return cfg.with_overrides(**over)


def cmd_run(args) -> dict:
    cfg = _load(args)
    check_output_dir(cfg.output_dir)

    def progress(k, total):
        print(f"realization {k}/{total}", file=sys.stderr, flush=True)

    report = run_experiment(cfg, progress=progress)
    paths = emit_outputs(report, cfg.output_dir)
    return {"status": "ok", "outputs": {k: str(v) for k, v in paths.items()}, "realizations": len(report.results)}


def cmd_verify(args) -> dict:
    return verify_invariants(_load(args))


def cmd_oracle(args) -> dict:
    from .oracle import run_oracle_checks, schedule_by_slsqp
    from .scenario import generate_scenario
    from .scheduler import build_tables, evaluate_utility

    cfg = _load(args)
    recs = run_oracle_checks(args.trials, cfg.seed)
    res_gap = max(abs(a - b) for _, a, b, _ in recs)
    res_ok = res_gap <= 2e-3 and all(r[3] for r in recs)

    rng = np.random.default_rng(cfg.seed)
    scenario = generate_scenario(cfg.scenario_config(), rng, seed=cfg.seed)
    if scenario.n_players > 3:
        raise ConfigurationError("oracle checks need a scenario with at most 3 players")
    alpha = cfg.game_config(cfg.modes[0]).alphas(scenario.n_players)
    from .allocation import default_pattern, random_bid
    from .resolution import resolve

    sched_gap = 0.0
    for t in range(10):
        b0 = default_pattern(cfg.kind, scenario.n_players)
        b = resolve([random_bid(p, scenario.n_players, rng) for p in range(scenario.n_players)], b0).pattern
        for n, table in enumerate(build_tables(scenario)):
            if table.n_users == 0:
                continue
            ours = evaluate_utility(n, b, table, alpha[n]).value
            ref = schedule_by_slsqp(table.mu, b.values[list(table.subsets)], alpha[n], table.serving)
            if np.isfinite(ours) and np.isfinite(ref):
                sched_gap = max(sched_gap, (ref - ours) / max(1.0, abs(ours)))
    sched_ok = sched_gap <= 1e-4
    return {
        "status": "ok" if res_ok and sched_ok else "violations",
        "resolution": {"trials": len(recs), "max_objective_gap": res_gap, "all_feasible": all(r[3] for r in recs)},
        "scheduler": {"max_relative_shortfall": sched_gap},
    }


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "oracle": cmd_oracle}


def _error(kind: str, exc: Exception, code: int) -> int:
    print(json.dumps({"status": "error", "error": kind, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        out = COMMANDS[args.command](args)
    except (ConfigurationError, TypeError) as exc:
        return _error("configuration", exc, EXIT_CONFIG)
    except OSError as exc:
        return _error("io", exc, EXIT_IO)
    except (SolverError, RuntimeError) as exc:
        return _error("solver", exc, EXIT_SOLVER)
    print(json.dumps(out, indent=1, sort_keys=True))
    return 0 if out.get("status") == "ok" else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())

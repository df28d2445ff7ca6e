"""Monte-Carlo experiments: games against Default and centralized baselines.

Seeding scheme.  The master seed feeds ``numpy.random.SeedSequence``.  User
realization ``r`` gets child ``r`` of ``SeedSequence(seed).spawn(R)``; that
child spawns ``F + 1`` streams, the first for user counts and positions, the
next ``F`` for the fading realizations.  Each fading stream spawns two
generators: one for the channel draw and one for subset voting.

Rates are written in Mbit/s: spectral efficiency times the shared band of
``N x 20 MHz``.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .allocation import MRG, ConfigurationError, bid_box, default_pattern, is_feasible
from .centralized import solve_centralized
from .dynamics import MDSG, MODES, SDSG, GameConfig, GameTrace, play, verify_nash
from .scenario import ScenarioConfig, generate_scenario, redraw_fading
from .scheduler import build_tables, evaluate_utility, evaluate_utility_comp

BAND_HZ = 20e6
PLAYERS_TO_PRESET = {2: "two-player", 4: "four-player"}
RATES_HEADER = ("realization", "fading", "player", "user")
CONVERGENCE_HEADER = ("realization", "fading", "mode", "iterations", "converged", "rounds")
BASELINES = ("default", "cs_sr", "cs_lr")


def curve_name(mode: str) -> str:
    return "game_" + mode.lower().replace("+", "_")


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "two-player"
    visiting_prob: float = 0.0
    kind: str = MRG
    modes: tuple = (MDSG,)
    user_realizations: int = 100
    fading_realizations: int = 20
    seed: int = 0
    alpha: float | tuple = 1.0
    mean_users: float = 5.0
    tx_power_dbm_hz: float = -53.0
    noise_dbm_hz: float = -195.0
    # thermal floor (-174 dBm/Hz) plus a 9 dB receiver noise figure
    background_dbm_hz: float | None = -165.0
    layout_overrides: dict = field(default_factory=dict)
    comp_mode: bool = False
    epsilon: float = 1e-6
    max_iterations: int = 100
    max_sweeps: int = 50
    nash_check: bool = True
    nash_eps: float = 1e-3
    workers: int = 1
    output_dir: str = "out"

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple([self.modes] if isinstance(self.modes, str) else self.modes))
        if isinstance(self.alpha, list):
            object.__setattr__(self, "alpha", tuple(self.alpha))
        if self.user_realizations < 1 or self.fading_realizations < 1:
            raise ConfigurationError("repetition counts must be at least 1")
        if not self.modes:
            raise ConfigurationError("at least one game mode is required")
        for m in self.modes:
            if m not in MODES:
                raise ConfigurationError(f"unknown mode {m!r}; choose from {MODES}")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if not 0.0 <= self.visiting_prob <= 1.0:
            raise ConfigurationError("visiting probability must lie in [0, 1]")
        self.scenario_config().layout()
        for m in self.modes:
            self.game_config(m)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {unknown}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        players = kw.pop("players", None)
        if players is not None:
            if players not in PLAYERS_TO_PRESET:
                raise ConfigurationError(f"no preset for {players} players")
            kw["preset"] = PLAYERS_TO_PRESET[players]
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["modes"] = list(self.modes)
        if isinstance(self.alpha, tuple):
            d["alpha"] = list(self.alpha)
        return d

    def scenario_config(self) -> ScenarioConfig:
        return ScenarioConfig(
            preset=self.preset,
            mean_users=self.mean_users,
            visiting_prob=self.visiting_prob,
            tx_power_dbm_hz=self.tx_power_dbm_hz,
            noise_dbm_hz=self.noise_dbm_hz,
            background_dbm_hz=self.background_dbm_hz,
            layout_overrides=dict(self.layout_overrides),
        )

    def game_config(self, mode: str) -> GameConfig:
        return GameConfig(
            kind=self.kind,
            mode=mode,
            epsilon=self.epsilon,
            max_iterations=self.max_iterations,
            max_sweeps=self.max_sweeps,
            alpha=self.alpha,
            comp_mode=self.comp_mode,
            seed=self.seed,
        )


@dataclass
class RealizationResult:
    realization: int
    fading: int
    players: np.ndarray
    users: np.ndarray
    rates: dict
    utilities: dict
    convergence: list
    nash_gains: list = field(default_factory=list)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    results: list

    @property
    def curves(self) -> tuple:
        return BASELINES[:1] + tuple(curve_name(m) for m in self.config.modes) + BASELINES[1:]


def realization_seeds(seed: int, user_realizations: int, fading_realizations: int):
    """``(geometry, [(fading, vote), ...])`` seed sequences per realization."""
    out = []
    for child in np.random.SeedSequence(seed).spawn(user_realizations):
        geo, *fad = child.spawn(fading_realizations + 1)
        out.append((geo, [tuple(f.spawn(2)) for f in fad]))
    return out


def _check_trace(trace: GameTrace):
    prev = trace.initial
    for rec in trace.iterations:
        if not is_feasible(rec.pattern):
            raise RuntimeError(f"{trace.mode} produced an infeasible pattern")
        for bid in rec.bids:
            if not bid_box(bid, prev).contains(rec.pattern, tol=1e-9):
                raise RuntimeError(f"{trace.mode} outcome left the box of player {bid.player}")
        prev = rec.pattern


def _schedule(tables, pattern, alphas):
    """Per-user rates (table order) and utilities of every operator on ``pattern``."""
    rates, utils = [], np.zeros(len(tables))
    for n, t in enumerate(tables):
        f = evaluate_utility_comp if t.comp_mode else evaluate_utility
        res = f(n, pattern, t, alphas[n])
        rates.append(np.asarray(res.rates, dtype=float))
        utils[n] = res.value
    return rates, utils


def _user_rates(tables, rates, scale):
    return np.concatenate([r * scale for r in rates]) if rates else np.zeros(0)


def run_realization(config: ExperimentConfig, r: int, f: int, scenario, vote_seed) -> RealizationResult:
    n = scenario.n_players
    alphas = config.game_config(config.modes[0]).alphas(n)
    tables = build_tables(scenario, config.comp_mode)
    scale = n * BAND_HZ / 1e6
    players = np.concatenate([np.full(t.n_users, t.player) for t in tables]).astype(int)
    users = np.concatenate([t.users for t in tables]).astype(int)
    rates, utilities, convergence, nash = {}, {}, [], []

    b0 = default_pattern(config.kind, n)
    rr, uu = _schedule(tables, b0, alphas)
    rates["default"], utilities["default"] = _user_rates(tables, rr, scale), uu

    for mode in config.modes:
        gc = config.game_config(mode)
        outcome = play(gc, tables, rng=np.random.default_rng(vote_seed))
        for name, trace in outcome.traces.items():
            _check_trace(trace)
            rounds = len(trace.iterations)
            convergence.append((mode if len(outcome.traces) == 1 else f"{mode}:{name}", trace.iterations_count, trace.converged, rounds))
        rr, uu = _schedule(tables, outcome.pattern, alphas)
        rates[curve_name(mode)], utilities[curve_name(mode)] = _user_rates(tables, rr, scale), uu
        if config.nash_check and MDSG in outcome.traces and mode == MDSG:
            trace = outcome.traces[MDSG]
            gains = verify_nash(trace.iterations[-1].bids, trace.final, tables, alphas)
            nash.append(max(gains.values()))

    for name, long_term in (("cs_sr", False), ("cs_lr", True)):
        cs = solve_centralized(tables, alphas, long_term=long_term)
        rr, uu = _schedule(tables, cs.pattern, alphas)
        rates[name], utilities[name] = _user_rates(tables, rr, scale), uu
    return RealizationResult(r, f, players, users, rates, utilities, convergence, nash)


def _run_user_realization(args):
    config, r = args
    geo, fading = realization_seeds(config.seed, config.user_realizations, config.fading_realizations)[r]
    base = generate_scenario(config.scenario_config(), np.random.default_rng(geo), seed=config.seed)
    out = []
    for f, (fade_seq, vote_seq) in enumerate(fading):
        scenario = redraw_fading(base, np.random.default_rng(fade_seq))
        out.append(run_realization(config, r, f, scenario, vote_seq))
    return out


def run_experiment(config: ExperimentConfig, progress=None) -> ExperimentReport:
    """Run every realization; results are ordered by realization index."""
    jobs = [(config, r) for r in range(config.user_realizations)]
    results = []
    if config.workers == 1:
        for k, job in enumerate(jobs):
            results.extend(_run_user_realization(job))
            if progress:
                progress(k + 1, len(jobs))
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for k, chunk in enumerate(pool.map(_run_user_realization, jobs)):
                results.extend(chunk)
                if progress:
                    progress(k + 1, len(jobs))
    return ExperimentReport(config, results)


def _fmt(x) -> str:
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.10g}"


def _stat(values, fn):
    v = np.asarray(values, dtype=float)
    return None if v.size == 0 else float(fn(v))


def summarize(report: ExperimentReport) -> dict:
    curves = report.curves
    rates = {c: np.concatenate([res.rates[c] for res in report.results]) if report.results else np.zeros(0) for c in curves}
    summary = {
        "config": report.config.to_dict(),
        "realizations": len(report.results),
        "rate_unit": "Mbit/s",
        "curves": {},
        "convergence": {},
        "nash": None,
    }
    for c in curves:
        utils = np.array([res.utilities[c] for res in report.results]) if report.results else np.zeros((0, 0))
        finite = utils[np.isfinite(utils).all(axis=1)] if utils.size else utils
        summary["curves"][c] = {
            "median_rate": _stat(rates[c], np.median),
            "mean_rate": _stat(rates[c], np.mean),
            "mean_player_utility": [float(x) for x in finite.mean(axis=0)] if finite.size else [],
            "mean_sum_utility": _stat(finite.sum(axis=1), np.mean) if finite.size else None,
        }
    modes = sorted({row[0] for res in report.results for row in res.convergence})
    for m in modes:
        its = [row[1] for res in report.results for row in res.convergence if row[0] == m]
        conv = [row[2] for res in report.results for row in res.convergence if row[0] == m]
        values, counts = np.unique(its, return_counts=True)
        summary["convergence"][m] = {
            "converged_fraction": float(np.mean(conv)),
            "histogram": {str(int(v)): int(c) for v, c in zip(values, counts)},
        }
    gains = [g for res in report.results for g in res.nash_gains]
    if gains:
        eps = report.config.nash_eps
        summary["nash"] = {
            "eps": eps,
            "checked": len(gains),
            "passed": int(sum(g <= eps for g in gains)),
            "max_gain": float(max(gains)),
        }
    return summary


def emit_outputs(report: ExperimentReport, out_dir) -> dict:
    """Write ``rates.csv``, ``convergence.csv`` and ``summary.json``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    curves = report.curves

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RATES_HEADER + curves)
    for res in report.results:
        for k in range(res.users.size):
            w.writerow([res.realization, res.fading, int(res.players[k]) + 1, int(res.users[k])] + [_fmt(res.rates[c][k]) for c in curves])
    files = {"rates.csv": buf.getvalue()}

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CONVERGENCE_HEADER)
    for res in report.results:
        for mode, its, conv, rounds in res.convergence:
            w.writerow([res.realization, res.fading, mode, its, int(conv), rounds])
    files["convergence.csv"] = buf.getvalue()
    files["summary.json"] = json.dumps(summarize(report), indent=1, sort_keys=True) + "\n"

    paths = {}
    for name, text in files.items():
        path = out / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        paths[name] = path
    return paths


def check_output_dir(path) -> None:
    """Fail early when the output directory cannot be created or written."""
    p = Path(path)
    probe = p
    while not probe.exists():
        probe = probe.parent
    if not probe.is_dir() or not os.access(probe, os.W_OK):
        raise ConfigurationError(f"output directory {p} is not writable")


INVARIANT_TOL = {"payoff_monotone": 1e-7, "baseline_order": 1e-4}


def verify_invariants(config: ExperimentConfig) -> dict:
    """Re-run the configured realizations and count invariant violations.

    Checked per realization: feasibility and box containment of every
    resolved pattern, non-decreasing payoffs along SDSG, one-round MDSG
    convergence for two players, the ordering CS-LR >= CS-SR >= game sum
    utility, and best-response gains at two-player MDSG fixed points (with more players a
    fixed point of greedy bidding need not be an equilibrium).
    """
    checks = {}

    def record(name, ok):
        c = checks.setdefault(name, {"passed": 0, "failed": 0})
        c["passed" if ok else "failed"] += 1

    seeds = realization_seeds(config.seed, config.user_realizations, config.fading_realizations)
    for r, (geo, fading) in enumerate(seeds):
        base = generate_scenario(config.scenario_config(), np.random.default_rng(geo), seed=config.seed)
        for fade_seq, vote_seq in fading:
            scenario = redraw_fading(base, np.random.default_rng(fade_seq))
            n = scenario.n_players
            tables = build_tables(scenario, config.comp_mode)
            alphas = config.game_config(config.modes[0]).alphas(n)
            sr = solve_centralized(tables, alphas).total
            lr = solve_centralized(tables, alphas, long_term=True).total
            tol = INVARIANT_TOL["baseline_order"]
            record("cs_lr >= cs_sr", lr >= sr - tol * max(1.0, abs(sr)))
            for mode in config.modes:
                outcome = play(config.game_config(mode), tables, rng=np.random.default_rng(vote_seq))
                for name, trace in outcome.traces.items():
                    try:
                        _check_trace(trace)
                        record("feasible and box-contained", True)
                    except RuntimeError:
                        record("feasible and box-contained", False)
                    record(f"{name} converged", trace.converged)
                    if name == SDSG and trace.iterations:
                        pay = np.vstack([_schedule(tables, trace.initial, alphas)[1], trace.payoffs()])
                        step = np.diff(pay, axis=0)
                        finite = np.isfinite(pay[:-1]) & np.isfinite(pay[1:])
                        ok = bool((step[finite] >= -INVARIANT_TOL["payoff_monotone"] * np.maximum(1.0, np.abs(pay[:-1][finite]))).all())
                        record("sdsg payoffs non-decreasing", ok)
                    if name == MDSG and n == 2:
                        record("two-player mdsg one round", trace.iterations_count == 1)
                    if name == MDSG and n == 2 and config.nash_check:
                        gains = verify_nash(trace.iterations[-1].bids, trace.final, tables, alphas)
                        record("mdsg fixed point is eps-nash", max(gains.values()) <= config.nash_eps)
                total = float(_schedule(tables, outcome.pattern, alphas)[1].sum())
                record("cs_sr >= game", sr >= total - tol * max(1.0, abs(total)))
    ok = all(c["failed"] == 0 for c in checks.values())
    return {"status": "ok" if ok else "violations", "checks": checks}

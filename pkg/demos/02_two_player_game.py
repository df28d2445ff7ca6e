"""A two-player office: greedy bids, one resolution step, no regret."""

import numpy as np

from sharegame import GameConfig, build_tables, run_mdsg, verify_nash
from sharegame.scenario import ScenarioConfig, generate_scenario
from sharegame.scheduler import utility_value

rng = np.random.default_rng(7)
scenario = generate_scenario(ScenarioConfig(preset="two-player", background_dbm_hz=-165.0), rng, seed=7)
tables = build_tables(scenario)
for t in tables:
    print(f"operator {t.player + 1}: {t.n_users} users")

for kind in ("MRG", "RPG"):
    trace = run_mdsg(GameConfig(kind=kind), tables)
    final = trace.final
    print(f"\n{kind}: converged={trace.converged} after {trace.iterations_count} iteration(s)")
    print("  bids   ", *trace.iterations[-1].bids, sep="\n    ")
    print("  outcome", final)
    before = [utility_value(n, trace.initial, t, 1.0) for n, t in enumerate(tables)]
    after = [utility_value(n, final, t, 1.0) for n, t in enumerate(tables)]
    print("  log-utility at default", np.round(before, 3), "-> game", np.round(after, 3))
    gains = verify_nash(trace.iterations[-1].bids, final, tables, (1.0, 1.0))
    print("  best unilateral improvement:", {p + 1: f"{g:.1e}" for p, g in gains.items()})

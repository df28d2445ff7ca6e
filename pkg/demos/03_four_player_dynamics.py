"""Four operators: the multi-dimensional game, then subset-by-subset refinement."""

import numpy as np

from sharegame import GameConfig, build_tables, run_mdsg, run_sdsg
from sharegame.allocation import subset_label
from sharegame.centralized import solve_centralized
from sharegame.scenario import ScenarioConfig, generate_scenario
from sharegame.scheduler import utility_value

rng = np.random.default_rng(4)
scenario = generate_scenario(ScenarioConfig(preset="four-player", background_dbm_hz=-165.0), rng, seed=4)
tables = build_tables(scenario)
print("users per operator:", [t.n_users for t in tables])


def total(b):
    return sum(utility_value(n, b, t, 1.0) for n, t in enumerate(tables))


cfg = GameConfig(kind="MRG")
mdsg = run_mdsg(cfg, tables)
print(f"\nMDSG: {len(mdsg.iterations)} rounds, movements {np.round(mdsg.movements, 4)}")

sdsg = run_sdsg(cfg, tables, initial_b0=mdsg.final, rng=np.random.default_rng(0))
print(f"SDSG from there: {sdsg.iterations_count} sweep(s), subsets played in order")
for rec in sdsg.iterations:
    if rec.sweep == 1:
        print(f"  {subset_label(rec.subset):>12}  moved {rec.movement:.4f}")

sr = solve_centralized(tables, (1.0,) * 4)
lr = solve_centralized(tables, (1.0,) * 4, long_term=True)
print("\nsum of log-utilities")
for name, value in (("default", total(mdsg.initial)), ("MDSG", total(mdsg.final)),
                    ("MDSG+SDSG", total(sdsg.final)), ("CS-SR", sr.total), ("CS-LR", lr.total)):
    print(f"  {name:>10}  {value:9.3f}")

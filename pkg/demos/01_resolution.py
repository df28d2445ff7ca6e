"""Resolving a bid profile into an agreed allocation pattern."""

import numpy as np

from sharegame import Bid, default_pattern, resolve
from sharegame.allocation import random_bid, subset_label

spacer = "-" * 60

b0 = default_pattern("MRG", 2)
print("Mutual renting starts from private halves:")
print(" ", b0)

print(spacer)
print("Both players want more sharing, by different amounts.")
bids = [Bid.from_dict(0, 2, {0b01: 0.3, 0b11: 0.4}), Bid.from_dict(1, 2, {0b10: 0.1, 0b11: 0.8})]
for b in bids:
    print(" ", b)
out = resolve(bids, b0)
print("The outcome moves as far as the tighter bid allows:")
print(" ", out.pattern, " l1 movement", round(out.objective, 12))

print(spacer)
print("Now the players disagree on the direction of the shared coordinate.")
bids = [Bid.from_dict(0, 2, {0b01: 0.0, 0b11: 1.0}), Bid.from_dict(1, 2, {0b10: 0.5, 0b11: 0.0})]
out = resolve(bids, b0)
print("Nobody gets their way, the default stands:")
print(" ", out.pattern)

print(spacer)
print("Three players, random bids against the resource pool default.")
rng = np.random.default_rng(1)
b0 = default_pattern("RPG", 3)
bids = [random_bid(p, 3, rng) for p in range(3)]
out = resolve(bids, b0)
for S in range(1, 8):
    print(f"  {subset_label(S):>9}  default {b0[S]:.3f}  outcome {out.pattern[S]:.3f}  box [{out.lo[S]:.3f}, {out.hi[S]:.3f}]")
print("  unique optimum:", out.unique)

"""
Why median needs memory
=======================

A set-disjointness instance turned into a braid: every stream starts with
p low items, and each player then adds p high items to the streams in its
set and p low items to the rest. The largest median is high only if some
stream was picked by every player. A coarse synopsis cannot tell the two
cases apart; a fine one can.
"""

from __future__ import annotations

from braidsketch import MEDIAN, GenSpec, MaterializedBraid, generate
from braidsketch.experiments import disj_median_trial

# The small worked instance: stream 2 is in every player's set.
sets = ((2,), (2, 4), (1, 2, 5), (2, 6))
braid = generate(GenSpec(kind="adv-median", m=6, t=4, p=1, U=2, sets=sets))
print("label:", braid.label, " shared stream:", braid.intersection)
print("rows per player (1 = high item):")
print(braid.player_rows)
print("top stream by median:", MaterializedBraid.from_braid(braid).topk(MEDIAN, 1))

# Random instances at two resolutions.
for eps in (0.001, 0.2):
    right = 0
    for seed in range(10):
        trial = disj_median_trial(m=200, t=9, p=100, eps=eps, rho=eps, seed=seed,
                                  instance="yes" if seed % 2 == 0 else "no")
        right += trial.sketch_correct
    print(f"eps = rho = {eps}: {right}/10 instances classified correctly")

"""Veronese and Segre lifts, composition and conjugacy."""

import numpy as np

from dftoric import (check_lift, compose_lifts, conjugacy_check, permutation_lift, rescaled, segre, veronese,
                     veronese_multinomial, verify_kahler_immersion)

rng = np.random.default_rng(4)

v = veronese(3)
print(v.name, "rho =", v.rho.ravel(), "| statement form rho =", v.alternate.rho.ravel())
print(check_lift(v, 50))
print(verify_kahler_immersion(v, v.source_fact.sample(rng, 5)))

bad = verify_kahler_immersion(v, v.source_fact.sample(rng, 5), m=rescaled(v, [1, 2, 2, 1]))
print("rescaled map:", bad)

for lift in (veronese_multinomial(2, 2), segre(2, 1)):
    print(check_lift(lift, 30))

c = compose_lifts(veronese(2), permutation_lift(2, [2, 1, 0]))
print(c.name, "rho =", c.rho.ravel(), check_lift(c, 20).passed)

rep = conjugacy_check(veronese(2), veronese(2).alternate)
print(rep)
for w in rep.info["witnesses"]:
    print("   witness: source perm", w["source_perm"], " target perm", w["target_perm"])

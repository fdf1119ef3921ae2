"""Toric factorizations, momentum maps and the momentum image."""

import numpy as np

from dftoric import (ProjectiveSpace, binomial, categorical, check_factorization, check_momentum_gradient,
                     check_momentum_image_convex, make_factorization, momentum_map, negative_binomial, poisson)
from dftoric.torification import metric_from_action

rng = np.random.default_rng(3)

for fam in (poisson(), categorical(2), binomial(4), negative_binomial(2)):
    fact = make_factorization(fam)
    print(f"{fam.label:<24} -> {fact.target.describe()}")
    print("   ", check_factorization(fact, fact.sample(rng, 30), rng))

fact = make_factorization(binomial(3))
theta = 0.7
print("mu(tau(0.7)) =", momentum_map(fact.target, fact.tau(theta)),
      " -4 pi grad psi =", -4 * np.pi * fact.family.potential.gradient([theta]))
print(check_momentum_gradient(fact, fact.family.potential.sample(rng, 20)))

cat = make_factorization(categorical(2))
rep = check_momentum_image_convex(cat.target, cat, 1000, seed=3)
print("momentum image scan:", rep, " extent", rep.info["momenta"].min(axis=0))

# metric induced by the action vs the Fubini-Study closed form at x = 0
print("h(0) =", metric_from_action(ProjectiveSpace(1, 1.0), [0.0], [1.0], [1.0]), " 4 pi^2 =", 4 * np.pi**2)

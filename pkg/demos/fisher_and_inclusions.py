"""Exponential families: probabilities, Fisher metric, affine inclusions."""

import numpy as np

from dftoric import binomial, check_fisher, inclusion_into_categorical, multinomial, poisson, pushforward_metric_check
from dftoric.families import fisher_metric_expectation, fisher_metric_hessian

rng = np.random.default_rng(1)

fam = poisson()
print("Poisson at theta = 1: Hessian", fisher_metric_hessian(fam, 1.0)[0, 0], " e =", np.e)
print("  by expectation over", fam.truncation([1.0]), "terms:", fisher_metric_expectation(fam, 1.0)[0, 0])

for fam in (binomial(5), multinomial(4, 3)):
    print(check_fisher(fam, fam.potential.sample(rng, 10)))

# Binomial(2) sits inside Categorical(2) by theta -> A theta + B
f = inclusion_into_categorical(binomial(2))
print("A =", f.A.ravel(), " B =", f.B)
print(pushforward_metric_check(f, binomial(2).potential.sample(rng, 10)))

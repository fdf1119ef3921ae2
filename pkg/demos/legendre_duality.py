"""Legendre duality for the cataloged potentials.

Computes the convex conjugate by Newton inversion of the gradient, compares it
with closed forms, and shows the dual domain guard.
"""

import numpy as np

from dftoric import (NotInDualDomain, check_involution, check_legendre, exp_potential, flat_cn_potential,
                     legendre_dual, legendre_pair, projective_potential)
from dftoric.core import projective_dual

rng = np.random.default_rng(0)

# e^x has conjugate y ln y - y on y > 0
p = exp_potential(1)
for y in (0.5, 1.0, 3.0):
    print(f"exp: psi*({y}) = {legendre_dual(p, y):+.12f}   closed form {y * np.log(y) - y:+.12f}")

try:
    legendre_dual(p, -1.0)
except NotInDualDomain as exc:
    print("exp: y = -1 rejected:", exc)

# flat potential: psi*(pi) = -1/4
print("flat-cn: psi*(pi) =", legendre_dual(flat_cn_potential(1), np.pi))

# projective potential: Newton vs closed form
q = projective_potential(2, 0.5)
x = q.sample(rng, 1)[0]
y = q.gradient(x)
print("projective: Newton", legendre_dual(q, y), " closed form", projective_dual(-y, 0.5))

pair = legendre_pair(q)
xs = q.sample(rng, 25)
print(check_legendre(pair, xs))
print(check_involution(pair, xs))

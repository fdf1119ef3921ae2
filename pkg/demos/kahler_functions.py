"""Kähler structure on the tangent bundle of the Poisson family.

The four basis functions generate Killing flows; the base coordinate q does not.
"""

import numpy as np

from dftoric import check_closed_form, check_kahler_function, poisson, poisson_kahler_basis

rng = np.random.default_rng(2)
space = poisson().space
vs = np.column_stack((rng.uniform(-2, 2, 10), rng.uniform(-10, 10, 10)))

print(check_closed_form(space, vs, rng))
for name, (f, grad) in poisson_kahler_basis().items():
    rep = check_kahler_function(space, f, vs, grad)
    print(f"{name:>18}: Killing violation {rep.violation('killing'):.2e}")

rep = check_kahler_function(space, lambda v: v[0], vs)
print(f"{'q':>18}: Killing violation {rep.violation('killing'):.2e} (not a Kähler function)")

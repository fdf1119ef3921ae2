"""Dually flat spaces, their Dombrowski Kähler structures, toric
factorizations of exponential families and lifts of statistical inclusions."""

from .core import (AffineMap, Domain, DuallyFlatSpace, LegendrePair, Potential, Report, check_dual_flatness,
                   check_dual_structure, check_involution, check_legendre, check_potential, exp_potential,
                   flat_cn_potential, legendre_dual, legendre_pair, make_potential, projective_potential,
                   pushforward_metric_check, quadratic_potential)
from .dombrowski import (KahlerStructure, TangentChartPoint, check_closed_form, check_kahler_function,
                         hamiltonian_vector_field, poisson_kahler_basis)
from .errors import *  # noqa: F401,F403
from .families import (ExponentialFamily, binomial, categorical, check_fisher, inclusion_into_categorical,
                       make_family, multinomial, negative_binomial, normal_known_variance, poisson, product)
from .lifts import (LiftMap, check_lift, compose_lifts, conjugacy_check, find_conjugacies, make_lift,
                    permutation_lift, rescaled, segre, veronese, veronese_multinomial, verify_kahler_immersion)
from .torification import (FlatCn, HyperbolicDisk, ProductGeometry, ProjectiveSpace, ToricFactorization,
                           check_factorization, check_momentum_gradient, check_momentum_image_convex,
                           compatible_potential, make_factorization, momentum_map)

__version__ = "0.1.0"

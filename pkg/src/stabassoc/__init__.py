"""Symmetric alpha-stable and alpha-Frechet processes from shared spectral kernels.

Discrete spectral kernels drive both a stable (sum) integral and an
extremal (max) integral.  The package simulates both, evaluates their exact
finite-dimensional functionals, decides max-associability of signed kernels,
and classifies kernel atoms into conservative/dissipative and positive/null
parts.
"""

__version__ = "0.1.0"

from .exceptions import (ConfigError, DimensionError, NotMaxAssociableError, RegimeError,
                         StabAssocError)
from .measure import (INTEGER_LATTICE, MAX, NONNEGATIVE, REAL_GRID, SIGNED, SUM, MeasureSpace,
                      SpectralKernel, StabilityIndex, TimeGrid, as_kernel, lalpha_metric,
                      max_integral, max_norm, rho_metric, sum_integral, sum_norm)
from .marginals import (FrechetLaw, SasLaw, SeededStream, cdf_frechet, cf_sas, empirical_cf,
                        sample_frechet, sample_sas)
from .integrals import (FddEqualityReport, FddQuery, SamplePaths, extremal_integral,
                        fdd_cdf_exponent, fdd_cf_exponent, fdd_equal, scale_coefficient,
                        simulate_max_process, simulate_sum_process, stable_integral)
from .kernels import (ParametricKernel, Quadrature, TabulatedG, build_chentzov,
                      build_chentzov_sets, build_constant, build_lfsm,
                      build_mixed_fractional, build_mixed_moving_average, build_moving_maxima,
                      build_telecom, check_two_value_structure, witness_product)
from .association import (AssociabilityReport, AssociatedPair, ProcessHandle, associate,
                          check_max_associable, check_self_similarity, check_stationarity,
                          isometric_copy, lalpha_distance, perturbed_copy,
                          norm_system_equivalence_test)
from .decomposition import (W1, W2, DecompositionLabel, WeightFunction, WindowSchedule,
                            classify, classify_cd, classify_pn, component_independence,
                            extract_component, factorization_check)

"""Root-vector expansions of non-selfadjoint matrices.

Jordan chains and biorthogonal systems, Abel-regularized summation,
contour-integral representations, convergence exponents of characteristic
numbers and the fractional Cauchy problem ``D^{1/alpha}_- u = W u``.
"""
from .errors import (ChainConstructionError, ContourError, DivergentIntegralError,
                     DomainError, ForeignPoleError, HorizonError, LidskiiError,
                     OperatorFormatError, PairingConditionError, QuadratureError,
                     SingularBasisError, SingularResolventError)
from .operators import (JordanBlock, JordanStructure, OperatorSpec, SectorEstimate,
                        adjoint_apply, characteristic_numbers, estimate_sector,
                        fredholm_determinant, load_operator, resolvent_apply,
                        singular_values)
from .jordan import (JordanChain, SpectralDecomposition, SpectralGroup,
                     build_biorthogonal, chain_residuals, decompose, raw_coefficients,
                     riesz_projector, spectral_decomposition)
from .abel import (eval_abel_polynomial, group_schedule, grouped_partial_sums,
                   regularized_coefficients)
from .contours import (ContourSpec, build_contour, integrate_resolvent_functional,
                       residue_at_pole, verify_resolvent_bound)
from .exponents import (ModulusSequence, beta_profile, canonical_product,
                        convergence_exponent, counting_function,
                        generate_model_sequence, circle_resolvent_bound, operator_order,
                        upper_density)
from .evolution import (CauchyProblem, Trajectory, gamma_tail_identity,
                        rl_fractional_derivative, solve_cauchy, verify_solution)
from .experiments import load_config, run_experiment

__version__ = "0.1.0"

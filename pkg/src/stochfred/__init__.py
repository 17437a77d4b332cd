"""Solvers and hypothesis checks for parameterised second-kind Fredholm equations
``lambda sigma(s) = K sigma(s) + omega(s)`` and diagonal sequence-space systems."""

from .amz_verification import (
    CoveringRateEstimate,
    check_conditions_coefficient,
    check_conditions_kernel,
    covering_rate_estimate,
    error_bound_rhs,
    error_bound_rhs_coeff,
    scalar_identity_covering,
)
from .config import ProblemConfig, parse_config, serialize
from .diagnostics import BoundCheck, ConditionDiagnostic
from .examples import reproduce_example
from .function_space import (
    Basis,
    CoeffFunction,
    GridFunction,
    QuadGrid,
    coeff_expand,
    coeff_synth,
    inner_product,
    l2_norm,
    legendre_basis,
    make_grid,
)
from .kernel_operators import (
    CoeffKernel,
    GridKernel,
    MultiplicationOperator,
    TensorKernel,
    apply_kernel,
    hs_norm,
    mult_apply,
    mult_covering_constant,
    op_norm_bound,
    truncate_kernel_param,
)
from .lp_operators import (
    DiagonalOperator,
    TruncatedMatrix,
    apply_matrix,
    basis_vector_covering_upper_bound,
    check_conditions_diagonal,
    diagonal_covering_constant,
    diagonal_stats,
    min_singular_estimate,
    norm_upper_bound,
    solve_stochastic_diagonal,
    transpose_norm_upper_bound,
)
from .runner import RunReport, run_problem
from .solvers import (
    NoiseFamily,
    SolveReport,
    moment_check,
    solve_coefficient_system,
    solve_neumann,
    solve_parameterized_family,
    solve_rank_one_unit,
    solve_tensor_closed_form,
)

__version__ = "0.1.0"

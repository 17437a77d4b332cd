import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochfred.errors import (
    ConditionViolatedError,
    DenominatorSingularError,
    DimensionMismatchError,
    NoConvergenceError,
    ParameterOutOfRangeError,
    SingularSystemError,
)
from stochfred.function_space import (
    CoeffFunction,
    GridFunction,
    coeff_expand,
    coeff_synth,
    inner_product,
    l2_norm,
    legendre_basis,
    make_grid,
)
from stochfred.kernel_operators import (
    CoeffKernel,
    GridKernel,
    MultiplicationOperator,
    TensorKernel,
    hs_norm,
    scale_kernel,
)
from stochfred.solvers import (
    NoiseFamily,
    moment_check,
    residual_norm,
    solve_coefficient_system,
    solve_neumann,
    solve_parameterized_family,
    solve_rank_one_unit,
    solve_tensor_closed_form,
)

LAM = 0.9


@pytest.fixture
def gh(grid):
    return grid.function(lambda u: u ** 2), grid.function(lambda v: v ** 4)


def ex44_exact(u, s, lam=LAM):
    return (2 * s * s * u ** 2 / (7 * lam - 2) + s * s * u ** 2) / lam


@pytest.mark.parametrize("s", [0.25, 0.5, 1.0])
def test_closed_form_ex44(grid, gh, s):
    g, h = gh
    omega = NoiseFamily(lambda t: grid.function(lambda v: t * t * v * v), (0.0, 1.0))
    rep = solve_tensor_closed_form(g, h, LAM, omega, s)
    assert np.max(np.abs(rep.solution.values - ex44_exact(grid.nodes, s))) < 1e-10
    assert rep.iterations == 0 and rep.residual_norm < 1e-14
    np.testing.assert_allclose(rep.info["g_dot_h"], 2 / 7, rtol=1e-13)
    lhs, rhs, ok = moment_check(g, h, LAM, omega(s), rep.solution)
    assert ok and abs(lhs - rhs) < 1e-13


def test_moment_check_ex44_value(grid, gh):
    g, h = gh
    w = grid.function(lambda v: 0.25 * v * v)
    sig = solve_tensor_closed_form(g, h, LAM, w).solution
    lhs, rhs, ok = moment_check(g, h, LAM, w, sig)
    expected = (2 * 0.25 / 7) / (LAM - 2 / 7)
    assert ok and abs(lhs - expected) < 1e-9 and abs(rhs - expected) < 1e-9
    assert moment_check(g, h, LAM, grid.zeros(), grid.zeros())[:2] == (0.0, 0.0)


def test_closed_form_ex45_and_zero_noise(grid, gh):
    g, h = gh
    for s in (0.3, 1.0):
        w = grid.function(lambda v: s * s * np.sin(v))
        rep = solve_tensor_closed_form(g, h, LAM, w)
        np.testing.assert_allclose(rep.solution.values, s * s * np.sin(grid.nodes) / LAM, atol=1e-8)
    assert np.all(solve_tensor_closed_form(g, h, LAM, grid.zeros()).solution.values == 0)


def test_closed_form_preconditions(grid, gh):
    g, h = gh
    w = grid.function(lambda v: v * v)
    with pytest.raises(ConditionViolatedError):
        solve_tensor_closed_form(g, h, 0.25, w)
    forced = solve_tensor_closed_form(g, h, 0.25, w, force=True)
    assert forced.residual_norm < 1e-12
    with pytest.raises(DenominatorSingularError):
        solve_tensor_closed_form(g, h, 2 / 7, w, force=True)
    with pytest.raises(ParameterOutOfRangeError):
        solve_tensor_closed_form(g, h, LAM, NoiseFamily(lambda s: w, (0.0, 1.0)), 2.0)


def test_neumann_ex44_and_ex45(grid, gh):
    g, h = gh
    k = TensorKernel(g, h)
    for s in (0.25, 0.5, 1.0):
        w = grid.function(lambda v: s * s * v * v)
        nm = solve_neumann(k, LAM, w)
        cf = solve_tensor_closed_form(g, h, LAM, w)
        assert l2_norm(nm.solution - cf.solution) < 1e-8
        assert nm.contraction_estimate <= hs_norm(k) / LAM + 1e-6
        w5 = grid.function(lambda v: s * s * np.sin(v))
        n5 = solve_neumann(k, LAM, w5)
        np.testing.assert_allclose(n5.solution.values, s * s * np.sin(grid.nodes) / LAM, atol=1e-8)


def test_neumann_zero_kernel_one_step(grid):
    w = grid.function(np.cos)
    rep = solve_neumann(TensorKernel(grid.zeros(), grid.zeros()), 0.5, w)
    assert rep.iterations == 1
    np.testing.assert_allclose(rep.solution.values, w.values / 0.5)


def test_neumann_errors(grid, gh):
    k = TensorKernel(*gh)
    w = grid.function(np.cos)
    with pytest.raises(ConditionViolatedError):
        solve_neumann(k, 0.2, w)
    with pytest.raises(NoConvergenceError) as info:
        solve_neumann(k, 0.9, w, tol=1e-15, max_iter=3)
    assert info.value.iterations == 3
    with pytest.warns(UserWarning):
        solve_neumann(k, 1.5, w)


def _random_tensor_instance(r, grid):
    # smooth random factors, lambda picked so that ||k|| < |lambda| <= 1
    cg, ch, cw = r.standard_normal((3, 4))
    g = grid.function(lambda x: cg[0] + cg[1] * x + cg[2] * np.sin(3 * x) + cg[3] * x ** 3)
    h = grid.function(lambda x: ch[0] + ch[1] * np.cos(x) + ch[2] * x ** 2 + ch[3] * np.exp(x))
    k = TensorKernel(g, h)
    target = r.uniform(0.1, 0.9)
    k = TensorKernel(g * (target / hs_norm(k)), h)
    lam = r.choice([-1, 1]) * r.uniform(hs_norm(k) * 1.05 + 1e-3, 1.0)
    w = grid.function(lambda x: cw[0] + cw[1] * x + cw[2] * np.cos(2 * x) + cw[3] * x ** 4)
    return k, float(lam), w


@given(st.integers(0, 2 ** 32 - 1))
def test_cross_solver_agreement(seed):
    grid = make_grid(-1.0, 1.0)
    r = np.random.default_rng(seed)
    k, lam, w = _random_tensor_instance(r, grid)
    cf = solve_tensor_closed_form(k.g, k.h, lam, w)
    nm = solve_neumann(k, lam, w)
    basis = legendre_basis(grid, 64)
    kc = CoeffKernel.rank_one(coeff_expand(k.g, basis), coeff_expand(k.h, basis))
    A = MultiplicationOperator(np.full(64, lam))
    co = solve_coefficient_system(A, kc, coeff_expand(w, basis))
    back = coeff_synth(co.solution, basis)
    assert l2_norm(nm.solution - cf.solution) < 1e-7
    assert l2_norm(back - cf.solution) < 1e-7
    # residual contract, taken relative to the solution scale
    for rep in (cf, nm):
        scale = max(1.0, l2_norm(rep.solution))
        assert residual_norm(k, lam, rep.solution, w) < 10 * 1e-10 * scale
    assert nm.contraction_estimate <= hs_norm(k) / abs(lam) + 1e-6
    lhs, rhs, ok = moment_check(k.g, k.h, lam, w, nm.solution)
    assert ok


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.2, 3.0), st.booleans())
def test_joint_scaling_and_linearity(seed, c, negate):
    grid = make_grid(-1.0, 1.0)
    c = -c if negate else c
    r = np.random.default_rng(seed)
    k, lam, w = _random_tensor_instance(r, grid)
    base = solve_tensor_closed_form(k.g, k.h, lam, w).solution
    ks = scale_kernel(k, c)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        scaled = solve_tensor_closed_form(ks.g, ks.h, c * lam, w * c, force=True).solution
    assert l2_norm(scaled - base) <= 1e-12 * l2_norm(base) + 1e-300
    lin = solve_tensor_closed_form(k.g, k.h, lam, w * c).solution
    np.testing.assert_allclose(lin.values, c * base.values, rtol=1e-13, atol=1e-15 * l2_norm(base))


def test_coefficient_system_examples(rng):
    N = 6
    a = rng.uniform(0.5, 1.0, N)
    w = CoeffFunction(rng.standard_normal(N))
    rep = solve_coefficient_system(MultiplicationOperator(a), CoeffKernel(np.zeros((N, N))), w)
    np.testing.assert_allclose(rep.solution.coeffs, w.coeffs / a, rtol=1e-15)
    assert rep.residual_norm < 1e-10 * w.norm()


def test_coefficient_ex411_dense_vs_rank_one():
    N = 50
    n = np.arange(1, N + 1, dtype=float)
    g, h = CoeffFunction(0.5 ** n), CoeffFunction((1 / 3) ** n)
    k = CoeffKernel.rank_one(g, h)
    for s in (0.5, 1.0):
        w = CoeffFunction(s * s * 0.25 ** n)
        exact = (5 / 44 + 0.5 ** n) * s * s * 0.5 ** n
        r1 = solve_rank_one_unit(g, h, w)
        dense = solve_coefficient_system(MultiplicationOperator(np.ones(N)), k, w).solution
        assert np.max(np.abs(r1.coeffs - exact)) < 1e-13
        assert np.max(np.abs(dense.coeffs - r1.coeffs)) < 1e-13


def test_rank_one_trivial_cases(rng):
    g, w = CoeffFunction(rng.standard_normal(5) * 0.3), CoeffFunction(rng.standard_normal(5))
    h = CoeffFunction(rng.standard_normal(5) * 0.3)
    assert np.all(solve_rank_one_unit(g, h, CoeffFunction(np.zeros(5))).coeffs == 0)
    np.testing.assert_array_equal(solve_rank_one_unit(g, CoeffFunction(np.zeros(5)), w).coeffs,
                                  w.coeffs)
    with pytest.raises(DenominatorSingularError):
        solve_rank_one_unit(CoeffFunction(np.eye(5)[0]), CoeffFunction(np.eye(5)[0]), w)
    with pytest.raises(DimensionMismatchError):
        solve_rank_one_unit(g, h, CoeffFunction(np.ones(4)))


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 40))
def test_coefficient_direct_vs_iterative(seed, N):
    r = np.random.default_rng(seed)
    a = r.uniform(0.6, 1.0, N) * r.choice([-1, 1], N)
    km = r.standard_normal((N, N))
    km *= r.uniform(0.05, 0.5) / np.linalg.norm(km)
    w = CoeffFunction(r.standard_normal(N))
    A, k = MultiplicationOperator(a), CoeffKernel(km)
    d = solve_coefficient_system(A, k, w, "direct")
    it = solve_coefficient_system(A, k, w, "iterative")
    assert np.max(np.abs(d.solution.coeffs - it.solution.coeffs)) < 1e-9
    assert d.residual_norm < 1e-10 * w.norm()


def test_coefficient_errors():
    A = MultiplicationOperator(np.array([0.5, 0.5]))
    w = CoeffFunction(np.ones(2))
    with pytest.raises(DimensionMismatchError):
        solve_coefficient_system(A, CoeffKernel(np.zeros((3, 3))), w)
    with pytest.raises(ConditionViolatedError):
        solve_coefficient_system(A, CoeffKernel(np.eye(2)), w)
    with pytest.raises(SingularSystemError):
        solve_coefficient_system(A, CoeffKernel(0.5 * np.eye(2)), w, force=True)
    forced = solve_coefficient_system(A, CoeffKernel(np.eye(2)), w, force=True)
    np.testing.assert_allclose(forced.solution.coeffs, [-2.0, -2.0])
    with pytest.raises(ValueError):
        solve_coefficient_system(A, CoeffKernel(np.zeros((2, 2))), w, method="cg")
    with pytest.raises(NoConvergenceError):
        solve_coefficient_system(A, CoeffKernel(0.4 * np.eye(2)), w, "iterative", tol=1e-16,
                                 max_iter=5, force=True)


def _family_problem(grid):
    g, h = grid.function(lambda u: u ** 2), grid.function(lambda v: v ** 4)
    omega = NoiseFamily(lambda s: grid.function(lambda v: s * s * v * v), (0.0, 1.0))
    return TensorKernel(g, h), omega


def test_family_against_truncated_closed_form(grid):
    k, omega = _family_problem(grid)
    s_grid = [1.0, 0.0, 0.5]
    fam = solve_parameterized_family(k, LAM, omega, s_grid, c=0.0)
    assert fam.s_values == [0.0, 0.5, 1.0]
    assert fam.norms_nondecreasing and fam.cut_norm > 0
    for s, rep in zip(fam.s_values, fam.reports):
        assert rep.residual_norm < 1e-8
        h_s = GridFunction(grid, np.where(grid.nodes <= s, k.h.values, 0.0))
        ref = solve_tensor_closed_form(k.g, h_s, LAM, omega(s), force=True)
        assert l2_norm(rep.solution - ref.solution) < 1e-8
    full = solve_tensor_closed_form(k.g, k.h, LAM, omega(1.0)).solution
    assert l2_norm(fam.reports[-1].solution - full) < 1e-8


def test_family_zero_noise_and_errors(grid):
    k, _ = _family_problem(grid)
    zero = NoiseFamily(lambda s: grid.zeros(), (0.0, 1.0))
    fam = solve_parameterized_family(k, LAM, zero, np.linspace(0, 1, 5), c=0.0)
    assert all(np.all(r.solution.values == 0) for r in fam.reports)
    with pytest.raises(ConditionViolatedError):
        solve_parameterized_family(k, LAM, zero, [0.5], c=-1.0)
    with pytest.raises(ParameterOutOfRangeError):
        solve_parameterized_family(k, LAM, zero, [-0.5], c=0.0)
    with pytest.raises(ConditionViolatedError):
        solve_parameterized_family(k, 0.2, zero, [0.5], c=0.0)


def test_family_on_grid_kernel(grid):
    k = GridKernel.from_function(grid, lambda u, v: 0.4 * np.cos(u * v))
    omega = NoiseFamily(lambda s: grid.function(lambda v: s + v), (0.0, 1.0))
    fam = solve_parameterized_family(k, 0.8, omega, np.linspace(0, 1, 11), c=0.0)
    assert fam.norms_nondecreasing
    for rep in fam.reports:
        assert rep.residual_norm < 1e-9 * max(1.0, l2_norm(rep.solution))
        assert rep.contraction_estimate <= hs_norm(k) / 0.8 + 1e-6

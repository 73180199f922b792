import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from harmonic_mortar.geometry import AnnulusGeometry
from harmonic_mortar.harmonics import HarmonicSpace, gram
from harmonic_mortar.infsup import (InfSupResult, analytic_beta, build_interface_operator,
                                    discrete_infsup, harmonic_order, infsup_sweep, jacobi_eigh,
                                    min_generalized_eig, schur_complement)
from harmonic_mortar.splines import assemble_stiffness, trace_matrix


# -- closed form against a numerical boundary value oracle --------------------------

def _shooting_beta(geom, n):
    """beta_n from the Riesz representer of cos(n theta), by shooting on the radial ODE.

    f'' + f'/r - n^2 f / r^2 = 0 on (R1, R2) with f(R2) = 0 is integrated
    inwards and scaled so that -f'(R1) = 1; then
    beta_n^2 = f(R1) (1 + n^2)^(1/2), with weight one for n = 0.
    """
    R1, R2 = geom.r_gamma, geom.r_outer

    def rhs(r, y):
        return [y[1], -y[1] / r + n * n * y[0] / (r * r)]

    sol = solve_ivp(rhs, (R2, R1), [0.0, 1.0], method="DOP853", rtol=1e-13, atol=1e-16)
    f, df = sol.y[:, -1]
    w = math.sqrt(1 + n * n) if n else 1.0
    return math.sqrt(-f / df * w)


@pytest.mark.parametrize("n", [0, 1, 2, 5, 12])
def test_closed_form_matches_shooting(geom, n):
    assert analytic_beta(geom, n).beta[n] == pytest.approx(_shooting_beta(geom, n), rel=1e-10)


def test_closed_form_reference_values(geom):
    ab = analytic_beta(geom, 200)
    assert ab.argmin == 0
    assert ab.min == pytest.approx(0.13573241360403032, rel=1e-14)
    # high modes approach sqrt(R1)
    assert ab.beta[-1] == pytest.approx(0.21142374511865974, rel=1e-4)
    assert np.all(ab.beta[1:] > ab.beta[0])


def test_closed_form_unit_log_ratio():
    R1 = 0.05
    g = AnnulusGeometry(r_shaft=0.01, r_gamma=R1, r_outer=R1 * math.e)
    ab = analytic_beta(g, 3)
    assert ab.beta[0] ** 2 == pytest.approx(R1, rel=1e-14)
    assert ab.beta[1] ** 2 == pytest.approx(R1 * math.tanh(1.0) * math.sqrt(2), rel=1e-14)
    with pytest.raises(ValueError):
        analytic_beta(g, -1)


# -- linear algebra ----------------------------------------------------------------

def _spd(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n))
    return sp.csr_matrix(X @ X.T + n * np.eye(n))


def test_schur_zero_coupling():
    S = schur_complement(_spd(6, 0), np.zeros((3, 6)))
    np.testing.assert_array_equal(S, np.zeros((3, 3)))


def test_schur_identity_field():
    B = np.random.default_rng(1).standard_normal((3, 7))
    np.testing.assert_allclose(schur_complement(sp.identity(7, format="csr"), B), B @ B.T,
                               atol=1e-14)


def test_schur_brute_force():
    A = _spd(9, 2)
    B = sp.random(4, 9, density=0.5, random_state=3, format="csr")
    ref = B.toarray() @ np.linalg.solve(A.toarray(), B.toarray().T)
    np.testing.assert_allclose(schur_complement(A, B), ref, rtol=1e-12, atol=1e-14)


def test_jacobi_small_diagonal():
    w, V = jacobi_eigh(np.diag([4.0, 1.0, 9.0]))
    np.testing.assert_array_equal(w, [1.0, 4.0, 9.0])
    np.testing.assert_array_equal(np.abs(V), np.eye(3)[:, [1, 0, 2]])


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 25), seed=st.integers(0, 2 ** 31), scale=st.floats(1e-6, 1e6))
def test_jacobi_matches_lapack(n, seed, scale):
    X = np.random.default_rng(seed).standard_normal((n, n)) * scale
    M = X + X.T
    w, V = jacobi_eigh(M)
    ref = np.linalg.eigvalsh(M)
    tol = 1e-12 * np.abs(ref).max()
    np.testing.assert_allclose(w, ref, atol=tol)
    np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(M @ V, V * w, atol=10 * tol)


def test_generalized_eig_scaling():
    D = np.array([2.0, 0.5, 4.0])
    S = np.diag([2.0, 2.0, 2.0])
    w, beta = min_generalized_eig(S, D)
    np.testing.assert_allclose(w, [0.5, 1.0, 4.0])
    assert beta == pytest.approx(math.sqrt(0.5))
    with pytest.raises(ValueError):
        min_generalized_eig(S, np.array([1.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        min_generalized_eig(S * np.nan, D)


def test_harmonic_order_exact_fractions():
    assert harmonic_order(3 / 8, 144) == 54
    assert harmonic_order(1 / 3, 144) == 48
    assert harmonic_order(1 / 3, 288) == 96
    assert harmonic_order(0.5, 576) == 288
    assert harmonic_order(0.0, 144) == 0


# -- discrete constants ------------------------------------------------------------

@pytest.fixture(scope="module")
def op_stator(geom):
    return build_interface_operator(geom, 1, 2, "stator", base_n_theta=24)


@pytest.fixture(scope="module")
def op_full(geom):
    return build_interface_operator(geom, 1, 2, "full", base_n_theta=24, rotor_n_theta=16)


def test_discrete_below_continuous(op_stator, geom):
    # Galerkin Riesz representers never carry more energy than the exact ones
    for N in range(0, 8):
        res = op_stator.infsup(N)
        assert res.beta_discrete <= analytic_beta(geom, N).min * (1 + 1e-12)


def test_monotone_in_harmonic_order(op_stator):
    betas = [op_stator.infsup(N).beta_discrete for N in range(0, 13)]
    assert np.all(np.diff(betas) <= 1e-12)
    assert betas[-1] < 1e-6 < betas[-2]


def test_n0_rayleigh_quotient(op_stator, geom):
    space = op_stator.spaces[0]
    B0 = op_stator.coupling(0, 0)
    A = assemble_stiffness(space, 1.0)
    b = (B0 @ trace_matrix(space).toarray()).ravel()
    v = np.linalg.solve(A.toarray(), b)
    ref = math.sqrt(b @ v / (2 * math.pi * geom.r_gamma))
    assert op_stator.infsup(0).beta_discrete == pytest.approx(ref, rel=1e-12)


def test_n0_converges_to_closed_form(geom):
    exact = analytic_beta(geom, 0).min
    errs = [exact - discrete_infsup(geom, lv, 1, 0, base_n_theta=12).beta_discrete
            for lv in (1, 2, 3)]
    assert all(e > 0 for e in errs)
    assert errs[2] < errs[1] < errs[0]
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_full_scope_dominates_stator(op_stator, op_full):
    for N in (0, 3, 7, 11):
        assert op_full.infsup(N).beta_discrete >= op_stator.infsup(N).beta_discrete - 1e-14


@settings(max_examples=15, deadline=None)
@given(alpha=st.floats(-7, 7), N=st.integers(1, 7))
def test_rotation_invariance_full_scope(op_full, alpha, N):
    # R(alpha) is D-orthogonal and the uniform rotor compliance commutes with it
    b0 = op_full.infsup(N).beta_discrete
    assert op_full.infsup(N, alpha=alpha).beta_discrete == pytest.approx(b0, rel=1e-10)


def test_stator_scope_ignores_rotation(op_stator):
    assert op_stator.infsup(5, alpha=0.3).beta_discrete == op_stator.infsup(5).beta_discrete


def test_result_fields(op_stator):
    res = op_stator.infsup(12, level=1, degree=2, c=0.5)
    assert isinstance(res, InfSupResult)
    assert res.dim_MN == 25 and res.n_interface == 24
    assert res.h_over_k == pytest.approx(2 / 24 / 2)
    assert res.criterion_value == pytest.approx(0.5)
    assert res.epsilon == pytest.approx(0.5)
    assert not res.stable
    assert res.row()["stable"] is False


def test_sweep_shapes_and_error_handling(geom):
    out = infsup_sweep(geom, [1], [1, 2], [0.25, 0.5], base_n_theta=12)
    assert [(r.degree, r.c, r.N) for r in out] == [(1, 0.25, 3), (1, 0.5, 6), (2, 0.25, 3), (2, 0.5, 6)]
    with pytest.raises(ValueError):
        build_interface_operator(geom, 1, 1, "rotor")

import math

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from harmonic_mortar.geometry import ROTOR, STATOR, AnnulusGeometry, build_mesh
from harmonic_mortar.harmonics import HarmonicSpace, rotation_blocks
from harmonic_mortar.saddle import (InfSupViolation, Manufactured, SaddleSystem, assemble_system,
                                    energy, h1_error, h1_seminorm, observed_rates, sample_field,
                                    solve, sweep_rotation)
from harmonic_mortar.splines import SourceSpec, SplineSpace2D


def rings(geom, k=2, n1=24, n2=16, n_r=3):
    return [SplineSpace2D(build_mesh(geom, STATOR, n1, n_r), k),
            SplineSpace2D(build_mesh(geom, ROTOR, n2, n_r), k)]


@pytest.fixture(scope="module")
def spaces(geom):
    return rings(geom)


@pytest.fixture(scope="module")
def manufactured(geom, spaces):
    ms = Manufactured(geom)
    system = assemble_system(spaces, HarmonicSpace(5, geom.r_gamma), ms.sources())
    return ms, system, solve(system)


def test_zero_sources_give_zero_solution(geom, spaces):
    system = assemble_system(spaces, HarmonicSpace(4, geom.r_gamma))
    res = solve(system)
    assert not np.any(res.u_all) and not np.any(res.lam)
    assert energy(system, res) == 0.0


def test_dimensions(geom, spaces):
    system = assemble_system(spaces, HarmonicSpace(4, geom.r_gamma))
    assert system.dim == spaces[0].ndof + spaces[1].ndof + 9
    assert system.matrix().shape == (system.dim, system.dim)
    assert system.load().shape == (system.dim,)
    assert [b.shape for b in system.B] == [(9, spaces[0].ndof), (9, spaces[1].ndof)]


def test_matches_monolithic_sparse_solve(manufactured):
    _, system, res = manufactured
    x = spla.spsolve(system.matrix().tocsc(), system.load())
    np.testing.assert_allclose(np.r_[res.u_all, res.lam], x, rtol=1e-9,
                               atol=1e-12 * np.abs(x).max())
    assert res.residual < 1e-12


def test_energy_identity(manufactured):
    _, system, res = manufactured
    work = float(np.concatenate(system.rhs) @ res.u_all)
    assert energy(system, res) == pytest.approx(work, rel=1e-10)
    assert h1_seminorm(system, res) == pytest.approx(math.sqrt(work), rel=1e-10)


def test_mortar_orthogonality(manufactured):
    _, system, res = manufactured
    assert np.abs(res.jump_moments).max() < 1e-10 * np.abs(res.u_all).max()


def test_jump_is_orthogonal_to_every_harmonic(manufactured, geom):
    _, system, res = manufactured
    # Gauss rule on the union of both trace meshes integrates the piecewise jump exactly
    breaks = np.union1d(system.spaces[0].angular.breaks, system.spaces[1].angular.breaks)
    x, w = np.polynomial.legendre.leggauss(12)
    half = np.diff(breaks)[:, None] / 2
    t = (breaks[:-1, None] + half * (x + 1)).ravel()
    w = (half * w).ravel()
    jump = (system.spaces[0].evaluate(res.u[0], [geom.r_gamma], t)[0][0]
            - system.spaces[1].evaluate(res.u[1], [geom.r_gamma], t)[0][0])
    moments = system.hspace.evaluate_basis(t).T @ (w * jump)
    assert np.abs(moments).max() < 1e-12 * np.abs(jump).max() + 1e-15


def test_dof_permutation_invariance(manufactured):
    _, system, res = manufactured
    perm = np.random.default_rng(5).permutation(system.sizes[0])
    P = sp.identity(system.sizes[0], format="csr")[perm]
    permuted = SaddleSystem(system.spaces, system.hspace,
                            [P @ system.A[0] @ P.T, system.A[1]],
                            [system.B_ref[0] @ P.T, system.B_ref[1]],
                            [P @ system.rhs[0], system.rhs[1]])
    other = solve(permuted)
    np.testing.assert_allclose(other.u[0], res.u[0][perm], rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(other.lam, res.lam, rtol=1e-10, atol=1e-14)


def test_error_does_not_grow_with_harmonic_order(geom, spaces):
    ms = Manufactured(geom)
    errs = []
    for N in range(0, 8):
        res = solve(assemble_system(spaces, HarmonicSpace(N, geom.r_gamma), ms.sources()))
        errs.append(h1_error(spaces, res, ms.grad))
    assert np.all(np.diff(errs) <= 1e-10)
    # the solution lives in mode 3, so coupling is decided once N reaches it
    assert errs[3] < 0.8 * errs[2]


def test_multiplier_approximates_normal_derivative(geom):
    ms = Manufactured(geom)
    exact = ms.multiplier_coefficient()
    errs = []
    for scale in (1, 2):
        sp_ = rings(geom, 2, 24 * scale, 16 * scale, 3 * scale)
        res = solve(assemble_system(sp_, HarmonicSpace(4, geom.r_gamma), ms.sources()))
        errs.append(abs(res.lam[5] - exact) / abs(exact))
        np.testing.assert_allclose(np.delete(res.lam, 5), 0.0, atol=1e-6 * abs(exact))
    assert errs[1] < 0.25 * errs[0]


def test_manufactured_source_is_minus_laplacian(geom):
    ms = Manufactured(geom)
    r, t, d = 0.05, 0.4, 1e-4
    lap = ((ms.u(r + d, t) - 2 * ms.u(r, t) + ms.u(r - d, t)) / d ** 2
           + (ms.u(r + d, t) - ms.u(r - d, t)) / (2 * d * r)
           + (ms.u(r, t + d) - 2 * ms.u(r, t) + ms.u(r, t - d)) / (d * r) ** 2)
    assert ms.source(r, t) == pytest.approx(-lap, rel=1e-5)
    assert ms.u(geom.r_shaft, t) == pytest.approx(0.0, abs=1e-15)
    assert ms.u(geom.r_outer, t) == pytest.approx(0.0, abs=1e-15)


def test_observed_rates():
    np.testing.assert_allclose(observed_rates([1, 0.5, 0.25], [1, 0.25, 0.0625]), [2.0, 2.0])


# -- rotation --------------------------------------------------------------------

def test_theta_independent_source_is_rotation_invariant(geom, spaces):
    src = {STATOR: SourceSpec(js=lambda r, t: 2.0 + 0 * r * t),
           ROTOR: SourceSpec(js=lambda r, t: 1.0 + 0 * r * t)}
    system = assemble_system(spaces, HarmonicSpace(5, geom.r_gamma), src)
    out = sweep_rotation(system, [0.0, 0.3, 1.1, -4.0])
    for res in out[1:]:
        np.testing.assert_allclose(res.u_all, out[0].u_all, atol=1e-14 * np.abs(out[0].u_all).max())


def test_rotor_source_rotates_multiplier(geom, spaces):
    # a cos(theta) rotor current follows the rotor, so lambda picks up R(alpha)^T
    src = {ROTOR: SourceSpec(js=lambda r, t: np.cos(t) + 0 * r)}
    system = assemble_system(spaces, HarmonicSpace(5, geom.r_gamma), src)
    angles = [0.0, 0.3, 1.1, 2.9]
    out = sweep_rotation(system, angles)
    scale = np.abs(out[0].lam).max()
    assert scale > 0
    for a, res in zip(angles, out):
        np.testing.assert_allclose(res.lam, rotation_blocks(5, a).T @ out[0].lam, atol=1e-12 * scale)
        np.testing.assert_allclose(res.u[1], out[0].u[1], atol=1e-12 * np.abs(out[0].u[1]).max())
        assert res.alpha == a


def test_rotated_system_shares_factorizations(geom, spaces):
    system = assemble_system(spaces, HarmonicSpace(3, geom.r_gamma))
    solve(system)
    assert system.rotated(0.5)._cache is system._cache
    with pytest.raises(ValueError):
        sweep_rotation(system, [0.0, float("nan")])


# -- failure modes -----------------------------------------------------------------

def test_inconsistent_radii_rejected(geom):
    other = AnnulusGeometry(r_shaft=0.02, r_gamma=0.045, r_outer=0.0675)
    mixed = [SplineSpace2D(build_mesh(geom, STATOR, 12, 2), 1),
             SplineSpace2D(build_mesh(other, ROTOR, 12, 2), 1)]
    with pytest.raises(ValueError, match="radii"):
        assemble_system(mixed, HarmonicSpace(2, geom.r_gamma))
    with pytest.raises(ValueError):
        assemble_system(rings(geom), HarmonicSpace(2, 0.05))
    with pytest.raises(ValueError):
        assemble_system(rings(geom)[::-1], HarmonicSpace(2, geom.r_gamma))


def test_too_rich_multiplier_space_raises(geom):
    sp_ = rings(geom, 1, 12, 12, 2)
    with pytest.warns(RuntimeWarning, match="interface dofs"):
        system = assemble_system(sp_, HarmonicSpace(6, geom.r_gamma))
    with pytest.raises(InfSupViolation, match="too rich"):
        solve(system)


def test_sample_field_rows(manufactured):
    ms, system, res = manufactured
    rows = sample_field(system.spaces, res, n_r=3, n_theta=8)
    assert len(rows) == 48
    assert {r[0] for r in rows} == {STATOR, ROTOR}
    err = max(abs(v - ms.u(r, t)) for _, r, t, v in rows)
    assert err < 0.1

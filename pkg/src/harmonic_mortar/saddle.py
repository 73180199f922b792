"""Stator/rotor saddle-point system with harmonic mortar coupling.

Unknowns are the field coefficients of both rings and ``2N+1`` harmonic
multiplier coefficients.  The system

    [A  B^T] [u]   [f]
    [B   0 ] [l] = [0]

is solved through the multiplier Schur complement ``S = B A^{-1} B^T``.
Rotor dofs live in the rotor frame; a rotor turned by ``alpha``
(counter-clockwise) couples through ``R(alpha)^T B_rotor``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .geometry import ROTOR, STATOR, AnnulusGeometry
from .harmonics import HarmonicSpace, assemble_coupling, rotation_blocks
from .infsup import factorize, schur_complement
from .splines import SourceSpec, SplineSpace2D, assemble_rhs, assemble_stiffness, trace_matrix

#: relative eigenvalue floor of S below which the multiplier space is declared too rich
RANK_TOLERANCE = 1e-12


class InfSupViolation(np.linalg.LinAlgError):
    """The coupling matrix is rank deficient: inf-sup violated / multiplier space too rich."""


@dataclass
class SaddleSystem:
    """Assembled mortar system; ``A``, ``B_ref`` and ``rhs`` are per ring."""

    spaces: list
    hspace: HarmonicSpace
    A: list
    B_ref: list
    rhs: list
    alpha: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def B(self) -> list:
        """Coupling blocks in the stator frame, i.e. with the rotor rotation applied."""
        out = []
        for space, Bl in zip(self.spaces, self.B_ref):
            if space.subdomain == ROTOR and self.alpha:
                Bl = sp.csr_matrix(rotation_blocks(self.hspace.N, self.alpha).T @ Bl.toarray())
            out.append(Bl)
        return out

    @property
    def sizes(self) -> list:
        return [a.shape[0] for a in self.A]

    @property
    def dim(self) -> int:
        return sum(self.sizes) + self.hspace.dim

    def field_matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix(sp.block_diag(self.A))

    def coupling_matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix(sp.hstack(self.B))

    def matrix(self) -> sp.csr_matrix:
        A, B = self.field_matrix(), self.coupling_matrix()
        return sp.csr_matrix(sp.bmat([[A, B.T], [B, None]]))

    def load(self) -> np.ndarray:
        return np.concatenate(self.rhs + [np.zeros(self.hspace.dim)])

    def rotated(self, alpha: float) -> "SaddleSystem":
        """Same system with the rotor turned to ``alpha``; factorizations are shared."""
        return replace(self, alpha=alpha, _cache=self._cache)

    # cached per-ring factorization and unrotated Schur block
    def _ring(self, i: int):
        if i not in self._cache:
            lu = factorize(self.A[i])
            S = schur_complement(self.A[i], self.B_ref[i], lu)
            u0 = lu.solve(self.rhs[i]) if np.any(self.rhs[i]) else np.zeros(self.sizes[i])
            self._cache[i] = (lu, S, u0)
        return self._cache[i]


@dataclass
class SolveResult:
    u: list
    lam: np.ndarray
    residual: float
    jump_moments: np.ndarray
    alpha: float = 0.0
    schur_eigs: Optional[np.ndarray] = None

    @property
    def u_all(self) -> np.ndarray:
        return np.concatenate(self.u)


def check_interfaces(spaces):
    radii = {round(s.r_gamma, 15) for s in spaces}
    if len(radii) != 1:
        raise ValueError(f"interface radii differ between rings: {sorted(radii)}")


def assemble_system(spaces, hspace: HarmonicSpace, sources: Optional[dict] = None,
                    alpha: float = 0.0) -> SaddleSystem:
    """Assemble stiffness, coupling and loads for stator and rotor spaces.

    Parameters
    ----------
    spaces : sequence of SplineSpace2D
        Stator first, then rotor.
    hspace : HarmonicSpace
    sources : dict, optional
        ``{"stator": SourceSpec, "rotor": SourceSpec}``; missing rings get
        no source and ``nu = 1``.
    alpha : float
        Rotor angle.
    """
    spaces = list(spaces)
    check_interfaces(spaces)
    if not math.isclose(spaces[0].r_gamma, hspace.r_gamma, rel_tol=1e-14):
        raise ValueError("harmonic space radius differs from the interface radius")
    if [s.subdomain for s in spaces] != [STATOR, ROTOR][:len(spaces)]:
        raise ValueError("spaces must be ordered stator, rotor")
    n_min = min(s.n_interface for s in spaces)
    if hspace.dim > n_min:
        warnings.warn(f"2N+1 = {hspace.dim} exceeds the {n_min} interface dofs of a ring; "
                      "the coupling may be unstable", RuntimeWarning, stacklevel=2)
    sources = sources or {}
    A, B, f = [], [], []
    for space in spaces:
        src = sources.get(space.subdomain) or SourceSpec()
        A.append(assemble_stiffness(space, src.nu, src.nu_bounds))
        sign = 1 if space.subdomain == STATOR else -1
        Bt = assemble_coupling(space.angular, hspace, sign)
        B.append(sp.csr_matrix(Bt) @ trace_matrix(space))
        f.append(assemble_rhs(space, src))
    return SaddleSystem(spaces, hspace, A, B, f, alpha)


def solve(system: SaddleSystem) -> SolveResult:
    """Schur-complement solve; raises :class:`InfSupViolation` when ``S`` is singular."""
    R = rotation_blocks(system.hspace.N, system.alpha).T if system.alpha else None
    m = system.hspace.dim
    S = np.zeros((m, m))
    g = np.zeros(m)
    rings = []
    for i, space in enumerate(system.spaces):
        lu, Si, u0 = system._ring(i)
        Bi = system.B_ref[i]
        gi = Bi @ u0
        if R is not None and space.subdomain == ROTOR:
            Si = R @ Si @ R.T
            gi = R @ gi
            Bi = sp.csr_matrix(R @ Bi.toarray())
        S += Si
        g += gi
        rings.append((lu, Bi, u0))
    S = 0.5 * (S + S.T)
    eigs = sla.eigvalsh(S)
    if eigs[-1] <= 0 or eigs[0] < RANK_TOLERANCE * eigs[-1]:
        raise InfSupViolation(
            f"inf-sup violated / multiplier space too rich: S has eigenvalue ratio "
            f"{eigs[0] / eigs[-1] if eigs[-1] > 0 else 0.0:.3e} with 2N+1 = {m}")
    lam = sla.cho_solve(sla.cho_factor(S), g)
    u = []
    for (lu, Bi, u0), f in zip(rings, system.rhs):
        corr = Bi.T @ lam
        u.append(u0 - lu.solve(corr) if np.any(corr) else u0.copy())
    B = sp.hstack([r[1] for r in rings]).tocsr()
    uall = np.concatenate(u)
    A = system.field_matrix()
    F = np.concatenate(system.rhs)
    r1 = A @ uall + B.T @ lam - F
    r2 = B @ uall
    scale = max(np.linalg.norm(F), np.linalg.norm(A @ uall), np.finfo(float).tiny)
    residual = float(np.hypot(np.linalg.norm(r1), np.linalg.norm(r2)) / scale)
    return SolveResult(u, lam, residual, r2, system.alpha, eigs)


def sweep_rotation(system: SaddleSystem, angles) -> list[SolveResult]:
    """Solve for each rotor angle, reusing the ring factorizations."""
    angles = [float(a) for a in angles]
    if not all(math.isfinite(a) for a in angles):
        raise ValueError("rotor angles must be finite")
    return [solve(system.rotated(a)) for a in angles]


def energy(system: SaddleSystem, result: SolveResult) -> float:
    """Field energy ``(nu grad u_h, grad u_h)``."""
    return float(sum(u @ (A @ u) for A, u in zip(system.A, result.u)))


def h1_seminorm(system: SaddleSystem, result: SolveResult) -> float:
    """Broken gradient norm of ``u_h`` with ``nu = 1``."""
    total = sum(float(u @ (assemble_stiffness(s, 1.0) @ u)) for s, u in zip(system.spaces, result.u))
    return math.sqrt(total)


# -- manufactured solution ---------------------------------------------------------

@dataclass(frozen=True)
class Manufactured:
    """``u = sin(pi (r - r_shaft) / (r_outer - r_shaft)) cos(3 theta)``, ``nu = 1``.

    It vanishes on both Dirichlet circles and is smooth across the air gap,
    so the exact multiplier is ``d u / d r`` on the interface.
    """

    geometry: AnnulusGeometry
    mode: int = 3

    @property
    def kappa(self) -> float:
        g = self.geometry
        return math.pi / (g.r_outer - g.r_shaft)

    def u(self, r, t):
        return np.sin(self.kappa * (r - self.geometry.r_shaft)) * np.cos(self.mode * t)

    def grad(self, r, t):
        """``(u_r, u_theta / r)``."""
        k, a, n = self.kappa, self.geometry.r_shaft, self.mode
        ur = k * np.cos(k * (r - a)) * np.cos(n * t)
        ut = -n * np.sin(k * (r - a)) * np.sin(n * t) / r
        return ur, ut

    def source(self, r, t):
        """``-Laplace u`` in polar coordinates."""
        k, a, n = self.kappa, self.geometry.r_shaft, self.mode
        s, c = np.sin(k * (r - a)), np.cos(k * (r - a))
        return (k * k * s - k * c / r + n * n * s / (r * r)) * np.cos(n * t)

    def multiplier_coefficient(self) -> float:
        """Exact ``cos(mode theta)`` coefficient of ``lambda = n . grad u`` on the interface."""
        g = self.geometry
        return self.kappa * math.cos(self.kappa * (g.r_gamma - g.r_shaft))

    def sources(self) -> dict:
        src = SourceSpec(js=self.source)
        return {STATOR: src, ROTOR: src}


def h1_error(spaces, result: SolveResult, grad_exact: Callable, q_extra: int = 2) -> float:
    """Broken ``|u - u_h|_{H^1}`` by tensor Gauss quadrature on every element."""
    total = 0.0
    for space, u in zip(spaces, result.u):
        r, wr, Rv, Rd, t, wt, Tv, Td = space.quadrature(space.q_radial + q_extra,
                                                       space.q_angular + q_extra + 2)
        full = space.free_to_full(u)
        rdofs = space.radial.span_dofs()
        tdofs = space.angular.span_dofs()
        C = full[rdofs[:, None, :, None], tdofs[None, :, None, :]]
        ur = np.einsum("epa,tqb,etab->etpq", Rd, Tv, C, optimize=True)
        ut = np.einsum("epa,tqb,etab->etpq", Rv, Td, C, optimize=True) / r[:, None, :, None]
        gr, gt = grad_exact(r[:, None, :, None], t[None, :, None, :])
        W = (wr * r)[:, None, :, None] * wt[None, :, None, :]
        total += float(np.sum(W * ((ur - gr) ** 2 + (ut - gt) ** 2)))
    return math.sqrt(total)


def observed_rates(h, err) -> np.ndarray:
    h, err = np.asarray(h, float), np.asarray(err, float)
    return np.log(err[:-1] / err[1:]) / np.log(h[:-1] / h[1:])


# -- output ------------------------------------------------------------------------

def sample_field(spaces, result: SolveResult, n_r: int = 8, n_theta: int = 64):
    """Rows ``(ring, r, theta, u)`` on a uniform grid of each ring (own frame)."""
    rows = []
    for space, u in zip(spaces, result.u):
        a, b = space.mesh.r_range
        r = np.linspace(a, b, n_r)
        t = np.linspace(0.0, 2 * math.pi, n_theta, endpoint=False)
        val, _, _ = space.evaluate(u, r, t)
        for i, ri in enumerate(r):
            for j, tj in enumerate(t):
                rows.append((space.subdomain, ri, tj, val[i, j]))
    return rows

"""Discrete inf-sup constants of harmonic mortar coupling.

The discrete constant is the square root of the smallest generalized
eigenvalue of ``S mu = beta^2 D mu`` where ``S = B A^{-1} B^T`` is the
multiplier Schur complement (``A`` the gradient Gram of the field space)
and ``D`` the ``H^{-1/2}(Gamma)`` Gram of the harmonics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import ROTOR, STATOR, AnnulusGeometry, mesh_at_level
from .harmonics import HarmonicSpace, assemble_coupling, gram, rotation_blocks
from .splines import SplineSpace2D, assemble_stiffness

#: verdict threshold on beta'; sits between O(1e-1) stable and O(1e-8) unstable values
STABILITY_THRESHOLD = 1e-6
DEFAULT_BASE_N_THETA = 144


# -- closed form ---------------------------------------------------------------

@dataclass
class AnalyticBeta:
    modes: np.ndarray
    beta: np.ndarray

    @property
    def min(self) -> float:
        return float(self.beta.min())

    @property
    def argmin(self) -> int:
        return int(self.modes[np.argmin(self.beta)])


def analytic_beta(geom: AnnulusGeometry, n_max: int = 0) -> AnalyticBeta:
    """Per-mode continuous inf-sup constants of the stator annulus.

    The harmonic Neumann problem on ``r_gamma < r < r_outer`` with zero
    Dirichlet data outside separates per angular order ``n``:
    ``beta_0^2 = R1 ln(R2/R1)`` and
    ``beta_n^2 = R1 tanh(n ln(R2/R1)) sqrt(1 + n^2) / n``.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    R1, R2 = geom.r_gamma, geom.r_outer
    L = math.log(R2 / R1)
    n = np.arange(n_max + 1)
    b2 = np.empty(n_max + 1)
    b2[0] = R1 * L
    m = n[1:].astype(float)
    b2[1:] = R1 * np.tanh(m * L) * np.sqrt(1.0 + m * m) / m
    return AnalyticBeta(n, np.sqrt(b2))


# -- linear algebra --------------------------------------------------------------

def factorize(A: sp.spmatrix):
    """Sparse LU of the SPD field Gram; raises on a singular matrix."""
    try:
        return spla.splu(sp.csc_matrix(A), permc_spec="MMD_AT_PLUS_A",
                         options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise np.linalg.LinAlgError(f"factorization of the field matrix failed: {exc}") from exc


def solve_columns(lu, rhs: np.ndarray, chunk: int = 64) -> np.ndarray:
    """``A^{-1} rhs`` for a dense block of columns, solved in fixed-size chunks."""
    rhs = np.asarray(rhs, dtype=float)
    out = np.empty_like(rhs)
    for j in range(0, rhs.shape[1], chunk):
        out[:, j:j + chunk] = lu.solve(np.ascontiguousarray(rhs[:, j:j + chunk]))
    return out


def schur_complement(A, B, lu=None) -> np.ndarray:
    """Dense ``S = B A^{-1} B^T`` for SPD sparse ``A`` and dense/sparse ``B``."""
    B = B.toarray() if sp.issparse(B) else np.asarray(B, dtype=float)
    if not np.any(B):
        return np.zeros((B.shape[0], B.shape[0]))
    lu = lu or factorize(A)
    X = solve_columns(lu, B.T)
    S = B @ X
    return 0.5 * (S + S.T)


def interface_compliance(A, interface_dofs: np.ndarray, lu=None) -> np.ndarray:
    """Interface block ``T A^{-1} T^T`` of the inverse field Gram.

    ``T`` selects ``interface_dofs``.  Any coupling supported on the
    interface then gives ``S = Bt C Bt^T`` without further solves.
    """
    lu = lu or factorize(A)
    n = A.shape[0]
    E = np.zeros((n, interface_dofs.size))
    E[interface_dofs, np.arange(interface_dofs.size)] = 1.0
    C = solve_columns(lu, E)[interface_dofs]
    return 0.5 * (C + C.T)


def jacobi_eigh(M: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60):
    """Eigenvalues and eigenvectors of a dense symmetric matrix by cyclic Jacobi.

    Only off-diagonal pairs that are not yet negligible relative to their
    diagonal entries are rotated, so nearly diagonal matrices (the common
    case for multiplier Schur complements on symmetric meshes) cost little.

    Returns
    -------
    w : ndarray
        Eigenvalues in ascending order.
    V : ndarray
        Orthonormal eigenvectors as columns.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("need a square matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.abs(A).max(), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        d = np.abs(np.diag(A))
        off = np.abs(np.triu(A, 1))
        big = off > tol * np.maximum(np.sqrt(np.outer(d, d)), tol * scale)
        if not big.any():
            break
        for p, q in zip(*np.nonzero(big)):
            apq = A[p, q]
            if apq == 0.0:
                continue
            theta = (A[q, q] - A[p, p]) / (2.0 * apq)
            t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            ap, aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * ap - s * aq
            A[:, q] = s * ap + c * aq
            ap, aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c * ap - s * aq
            A[q, :] = s * ap + c * aq
            A[p, q] = A[q, p] = 0.0
            vp, vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = c * vp - s * vq
            V[:, q] = s * vp + c * vq
    else:
        raise np.linalg.LinAlgError("Jacobi iteration did not converge")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def min_generalized_eig(S: np.ndarray, D: np.ndarray):
    """Spectrum of ``S x = lam D x`` with diagonal positive ``D``.

    Returns the ascending spectrum and ``beta' = sqrt(max(lam_min, 0))``.
    """
    S = np.asarray(S, dtype=float)
    D = np.asarray(D, dtype=float)
    if D.ndim == 2:
        D = np.diag(D)
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(D))):
        raise ValueError("non-finite entries in the eigenproblem")
    if np.any(D <= 0):
        raise ValueError("Gram diagonal must be positive")
    s = 1.0 / np.sqrt(D)
    w, _ = jacobi_eigh(S * s[:, None] * s[None, :])
    return w, math.sqrt(max(w[0], 0.0))


# -- sweeps ----------------------------------------------------------------------

@dataclass
class InfSupResult:
    beta_discrete: float
    spectrum: np.ndarray
    beta_continuous: float
    N: int
    n_interface: int
    h_over_k: float
    scope: str = "stator"
    level: int | None = None
    degree: int | None = None
    c: float | None = None
    n_r: int | None = None
    threshold: float = STABILITY_THRESHOLD

    @property
    def dim_MN(self) -> int:
        return 2 * self.N + 1

    @property
    def stable(self) -> bool:
        return self.beta_discrete > self.threshold

    @property
    def criterion_value(self) -> float:
        return self.N * self.h_over_k

    @property
    def epsilon(self) -> float:
        return 1.0 - self.criterion_value

    def row(self) -> dict:
        return {
            "level": self.level, "k": self.degree, "n_interface": self.n_interface,
            "c": self.c, "N": self.N, "dim_MN": self.dim_MN, "scope": self.scope,
            "beta_discrete": self.beta_discrete, "beta_continuous": self.beta_continuous,
            "criterion": self.criterion_value, "stable": self.stable,
        }


def harmonic_order(c: float, n_interface: int) -> int:
    """``N = floor(c n)``; a tiny slack keeps exact fractions like 3/8 * 144 integral."""
    return int(math.floor(c * n_interface + 1e-9))


@dataclass
class InterfaceOperator:
    """Everything needed to evaluate beta' for any ``N`` on a fixed field space.

    ``compliance[l]`` is ``T A_l^{-1} T^T`` for each ring in scope; harmonic
    coupling blocks are assembled per ``N`` against the ring's trace space.
    """

    spaces: list
    compliance: list
    geometry: AnnulusGeometry
    scope: str
    _coupling: dict = field(default_factory=dict)

    @property
    def n_interface(self) -> int:
        return self.spaces[0].n_interface

    @property
    def h_over_k(self) -> float:
        # span width in the reference coordinate xi = theta / pi
        sp0 = self.spaces[0]
        return (2.0 / sp0.n_interface) / sp0.degree

    def coupling(self, ring: int, N: int) -> np.ndarray:
        """Cached coupling block for the largest ``N`` seen so far, sliced to ``2N+1`` rows."""
        have = self._coupling.get(ring)
        if have is None or have.shape[0] < 2 * N + 1:
            hs = HarmonicSpace(N, self.geometry.r_gamma)
            sign = 1 if self.spaces[ring].subdomain == STATOR else -1
            have = assemble_coupling(self.spaces[ring].angular, hs, sign)
            self._coupling[ring] = have
        return have[:2 * N + 1]

    def schur(self, N: int, alpha: float = 0.0) -> np.ndarray:
        S = np.zeros((2 * N + 1, 2 * N + 1))
        for ring, C in enumerate(self.compliance):
            Bt = self.coupling(ring, N)
            if self.spaces[ring].subdomain == ROTOR and alpha:
                Bt = rotation_blocks(N, alpha).T @ Bt
            S += Bt @ C @ Bt.T
        return 0.5 * (S + S.T)

    def infsup(self, N: int, alpha: float = 0.0, **meta) -> InfSupResult:
        S = self.schur(N, alpha)
        D = gram(HarmonicSpace(N, self.geometry.r_gamma), -0.5)
        spectrum, beta = min_generalized_eig(S, D)
        oracle = analytic_beta(self.geometry, N).min
        meta.setdefault("n_r", self.spaces[0].mesh.n_r)
        return InfSupResult(beta, spectrum, oracle, N, self.n_interface, self.h_over_k,
                            scope=self.scope, **meta)


def build_interface_operator(geom: AnnulusGeometry, level: int, degree: int,
                             scope: str = "stator", base_n_theta: int = DEFAULT_BASE_N_THETA,
                             base_n_r: int | None = None, rotor_n_theta: int | None = None,
                             rotor_n_r: int | None = None) -> InterfaceOperator:
    """Factor the gradient Gram (``nu = 1``) of each ring in scope once."""
    if scope not in ("stator", "full"):
        raise ValueError(f"scope must be 'stator' or 'full', got {scope!r}")
    rings = [(STATOR, base_n_theta, base_n_r)]
    if scope == "full":
        rings.append((ROTOR, rotor_n_theta or base_n_theta, rotor_n_r))
    spaces, comps = [], []
    for sub, nt, nr in rings:
        space = SplineSpace2D(mesh_at_level(geom, sub, nt, level, nr), degree)
        A = assemble_stiffness(space, 1.0)
        spaces.append(space)
        comps.append(interface_compliance(A, space.interface_dofs))
    return InterfaceOperator(spaces, comps, geom, scope)


def discrete_infsup(geom: AnnulusGeometry, level: int, k: int, N: int,
                    scope: str = "stator", **mesh) -> InfSupResult:
    op = build_interface_operator(geom, level, k, scope, **mesh)
    return op.infsup(N, level=level, degree=k)


def infsup_sweep(geom: AnnulusGeometry, levels, degrees, cs, scope: str = "stator",
                 on_error=None, **mesh) -> list[InfSupResult]:
    """One result per ``(level, k, c)`` cell; each field space is factored once.

    Numerical failures of a cell are passed to ``on_error(cell, exc)`` and
    the sweep continues; without a handler they propagate.
    """
    results = []
    for level in levels:
        for k in degrees:
            try:
                op = build_interface_operator(geom, level, k, scope, **mesh)
            except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
                if on_error is None:
                    raise
                for c in cs:
                    on_error((level, k, c), exc)
                continue
            for c in cs:
                N = harmonic_order(c, op.n_interface)
                try:
                    results.append(op.infsup(N, level=level, degree=k, c=c))
                except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
                    if on_error is None:
                        raise
                    on_error((level, k, c), exc)
    return results

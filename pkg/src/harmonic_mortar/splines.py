"""Tensor-product spline spaces on the polar reference rectangle.

Each ring carries an open (clamped) spline space in ``r`` and a periodic
spline space in ``theta``.  Assembly uses the exact polar pullback
``dx = r dr dtheta`` and ``|grad v|^2 = v_r^2 + v_theta^2 / r^2``.

Global dof numbering inside a ring is radial-major:
``dof = radial_position * n_theta + angular_index``, after removing the
radial function that carries the Dirichlet boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .geometry import STATOR, PolarMesh

Field = Union[float, Callable]

# Gauss-Legendre rule on [-1, 1] cached per order.
_GAUSS: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(q: int) -> tuple[np.ndarray, np.ndarray]:
    if q not in _GAUSS:
        _GAUSS[q] = np.polynomial.legendre.leggauss(q)
    return _GAUSS[q]


def span_quadrature(breaks: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss points and weights per span, both shaped ``(n_spans, q)``."""
    x, w = gauss_legendre(q)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


class SplineSpace1D:
    """Univariate B-spline space of maximal smoothness on given breakpoints.

    Parameters
    ----------
    degree : int
        Polynomial degree ``k >= 1``.
    breaks : array_like
        Strictly increasing breakpoints ``b_0 < ... < b_n``.
    periodic : bool
        Periodic closure of ``[b_0, b_n)``.  The space then has ``n``
        functions; an open (clamped) space has ``n + k``.
    """

    def __init__(self, degree: int, breaks, periodic: bool):
        breaks = np.asarray(breaks, dtype=float)
        if int(degree) != degree or degree < 1:
            raise ValueError(f"degree must be an integer >= 1, got {degree}")
        if breaks.ndim != 1 or breaks.size < 2 or np.any(np.diff(breaks) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        n = breaks.size - 1
        if periodic and n < degree + 1:
            raise ValueError(f"periodic degree-{degree} space needs at least {degree + 1} spans")
        self.degree = int(degree)
        self.breaks = breaks
        self.periodic = bool(periodic)
        self.n_spans = n
        k = self.degree
        if periodic:
            L = breaks[-1] - breaks[0]
            idx = np.arange(-k, n + k + 1)
            self.knots = breaks[idx % n] + (idx // n) * L
            self.dim = n
        else:
            self.knots = np.concatenate([np.full(k, breaks[0]), breaks, np.full(k, breaks[-1])])
            self.dim = n + k

    @property
    def period(self) -> float:
        return self.breaks[-1] - self.breaks[0]

    def __repr__(self):
        kind = "periodic" if self.periodic else "open"
        return f"SplineSpace1D(degree={self.degree}, spans={self.n_spans}, {kind})"

    def _spans(self, x: np.ndarray) -> np.ndarray:
        k = self.degree
        s = np.searchsorted(self.knots, x, side="right") - 1
        return np.clip(s, k, k + self.n_spans - 1)

    def _normalize(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a, b = self.breaks[0], self.breaks[-1]
        if self.periodic:
            return a + np.mod(x - a, b - a)
        tol = 1e-12 * (b - a)
        if np.any((x < a - tol) | (x > b + tol)) or np.any(~np.isfinite(x)):
            raise ValueError(f"parameter outside [{a}, {b}]")
        return np.clip(x, a, b)

    def eval_basis(self, x):
        """Values and first derivatives of the active basis functions.

        Parameters
        ----------
        x : array_like
            Parameters; wrapped for periodic spaces, rejected when outside
            the interval of an open space.

        Returns
        -------
        values, derivs : ndarray, shape ``x.shape + (k + 1,)``
        dofs : ndarray of int, same shape
            Global index of each active function.
        """
        x = self._normalize(x)
        shape = x.shape
        x = x.ravel()
        k, t = self.degree, self.knots
        span = self._spans(x)
        m = x.size
        # Cox-de Boor triangle; ``low`` keeps the degree k-1 row for derivatives.
        N = np.zeros((m, k + 1))
        N[:, 0] = 1.0
        left = np.empty((m, k + 1))
        right = np.empty((m, k + 1))
        low = N[:, :1].copy()
        for j in range(1, k + 1):
            left[:, j] = x - t[span + 1 - j]
            right[:, j] = t[span + j] - x
            saved = np.zeros(m)
            for r in range(j):
                temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
                N[:, r] = saved + right[:, r + 1] * temp
                saved = left[:, j - r] * temp
            N[:, j] = saved
            if j == k - 1:
                low = N[:, :k].copy()
        # d/dx N_{i,k} = k N_{i,k-1}/(t_{i+k}-t_i) - k N_{i+1,k-1}/(t_{i+k+1}-t_{i+1})
        first = span - k
        D = np.zeros((m, k + 1))
        for a in range(k + 1):
            i = first + a
            if a >= 1:
                D[:, a] += k * low[:, a - 1] / (t[i + k] - t[i])
            if a <= k - 1:
                D[:, a] -= k * low[:, a] / (t[i + k + 1] - t[i + 1])
        dofs = first[:, None] + np.arange(k + 1)
        if self.periodic:
            dofs %= self.n_spans
        return (N.reshape(shape + (k + 1,)), D.reshape(shape + (k + 1,)),
                dofs.reshape(shape + (k + 1,)))

    def span_dofs(self) -> np.ndarray:
        """Active function indices per span, shape ``(n_spans, k + 1)``."""
        dofs = np.arange(self.n_spans)[:, None] + np.arange(self.degree + 1)
        if self.periodic:
            dofs %= self.n_spans
        return dofs

    def tabulate(self, q: int):
        """Basis values and derivatives at ``q`` Gauss points of every span."""
        pts, w = span_quadrature(self.breaks, q)
        vals, ders, _ = self.eval_basis(pts)
        return pts, w, vals, ders

    def evaluate(self, coeffs, x, deriv: int = 0) -> np.ndarray:
        vals, ders, dofs = self.eval_basis(x)
        B = vals if deriv == 0 else ders
        return np.sum(B * np.asarray(coeffs)[dofs], axis=-1)

    def matrix(self, q: int, weight: Optional[Callable] = None,
               d_left: int = 0, d_right: int = 0) -> sp.csr_matrix:
        """Sparse ``[i, j] = int weight * B_i^(d_left) B_j^(d_right)``."""
        pts, w, vals, ders = self.tabulate(q)
        if weight is not None:
            w = w * weight(pts)
        L = ders if d_left else vals
        R = ders if d_right else vals
        loc = np.einsum("eq,eqa,eqb->eab", w, L, R)
        dofs = self.span_dofs()
        rows = np.broadcast_to(dofs[:, :, None], loc.shape).ravel()
        cols = np.broadcast_to(dofs[:, None, :], loc.shape).ravel()
        return sp.coo_matrix((loc.ravel(), (rows, cols)), shape=(self.dim, self.dim)).tocsr()


def radial_quadrature_order(degree: int, breaks: np.ndarray) -> int:
    """Gauss order making ``1/r``-weighted spline integrals exact to round-off.

    The non-polynomial factor ``1/r`` expands in powers of
    ``(dr / 2) / r_mid``; enough extra points are taken to push the
    truncated tail below 1e-17.
    """
    half = 0.5 * np.diff(breaks)
    mid = 0.5 * (breaks[1:] + breaks[:-1])
    rho = float(np.max(half / mid))
    extra = math.ceil(17.0 * math.log(10.0) / (2.0 * math.log(1.0 / rho))) + 1
    return degree + min(max(extra, 2), 60)


@dataclass
class SourceSpec:
    """Sources and material on one ring, in that ring's own frame.

    ``js(r, theta)`` is the impressed current density, ``m(r, theta)``
    returns the magnetization ``(m_x, m_y)`` and ``nu`` is the reluctivity,
    either a number or a callable.  Callables receive broadcastable arrays.
    ``nu_bounds`` are the declared ellipticity bounds.
    """

    js: Optional[Callable] = None
    m: Optional[Callable] = None
    nu: Field = 1.0
    nu_bounds: tuple[float, float] = (1e-12, 1e12)

    def __post_init__(self):
        lo, hi = self.nu_bounds
        if not (0.0 < lo <= hi < math.inf):
            raise ValueError(f"reluctivity bounds must satisfy 0 < lo <= hi < inf, got {self.nu_bounds}")
        if not callable(self.nu):
            if not (lo <= float(self.nu) <= hi):
                raise ValueError(f"reluctivity {self.nu} outside bounds {self.nu_bounds}")


def sector_field(edges, values, polar: bool = False, r_range=None) -> Callable:
    """Piecewise-constant field over angular sectors.

    Parameters
    ----------
    edges : array_like
        ``n + 1`` increasing angles; sector ``s`` is ``[edges[s], edges[s+1])``
        taken modulo ``2*pi``.
    values : array_like
        ``n`` scalars, or ``n`` two-vectors for vector fields.
    polar : bool
        Vector values are ``(radial, tangential)`` components instead of
        Cartesian ``(x, y)``.
    r_range : (float, float), optional
        Radial band outside of which the field vanishes.
    """
    edges = np.asarray(edges, dtype=float)
    values = np.asarray(values, dtype=float)
    if edges.ndim != 1 or np.any(np.diff(edges) <= 0):
        raise ValueError("sector edges must be increasing")
    if edges[-1] - edges[0] > 2 * math.pi + 1e-12:
        raise ValueError("sectors overlap after wrapping")
    if values.shape[0] != edges.size - 1 or not np.all(np.isfinite(values)):
        raise ValueError("need one finite value per sector")
    vector = values.ndim == 2

    def field(r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        t = edges[0] + np.mod(theta - edges[0], 2 * math.pi)
        s = np.searchsorted(edges, t, side="right") - 1
        inside = (s >= 0) & (s < edges.size - 1)
        if r_range is not None:
            inside &= (r >= r_range[0]) & (r <= r_range[1])
        s = np.clip(s, 0, edges.size - 2)
        if not vector:
            return np.where(inside, values[s], 0.0)
        a = np.where(inside, values[s, 0], 0.0)
        b = np.where(inside, values[s, 1], 0.0)
        if polar:
            c, si = np.cos(theta), np.sin(theta)
            return a * c - b * si, a * si + b * c
        return a, b

    return field


class SplineSpace2D:
    """Dirichlet-constrained tensor spline space on one ring.

    The radial function carrying the outer stator boundary (or the rotor
    shaft) is removed; the interface trace is carried by a single radial
    function, so the interface has exactly ``n_theta`` dofs for every
    degree.
    """

    def __init__(self, mesh: PolarMesh, degree: int):
        self.mesh = mesh
        self.degree = int(degree)
        self.radial = SplineSpace1D(degree, mesh.r_breaks, periodic=False)
        self.angular = SplineSpace1D(degree, mesh.theta_breaks, periodic=True)
        nr_full = self.radial.dim
        if mesh.subdomain == STATOR:
            dirichlet, interface = nr_full - 1, 0
        else:
            dirichlet, interface = 0, nr_full - 1
        self.radial_free = np.array([i for i in range(nr_full) if i != dirichlet])
        self.radial_position = np.full(nr_full, -1)
        self.radial_position[self.radial_free] = np.arange(nr_full - 1)
        self.interface_radial = interface
        n_t = self.angular.dim
        self.ndof = (nr_full - 1) * n_t
        pos = self.radial_position[interface]
        self.interface_dofs = pos * n_t + np.arange(n_t)
        self.q_radial = radial_quadrature_order(degree, mesh.r_breaks)
        self.q_angular = degree + 2

    @property
    def subdomain(self) -> str:
        return self.mesh.subdomain

    @property
    def n_interface(self) -> int:
        return self.angular.dim

    @property
    def r_gamma(self) -> float:
        return self.mesh.geometry.r_gamma

    def __repr__(self):
        m = self.mesh
        return (f"SplineSpace2D({m.subdomain}, k={self.degree}, n_theta={m.n_theta}, "
                f"n_r={m.n_r}, ndof={self.ndof})")

    # -- dof helpers ------------------------------------------------------

    def full_to_free(self, coeffs_full: np.ndarray) -> np.ndarray:
        """Restrict a full tensor coefficient array ``(n_r_full, n_theta)``."""
        return np.asarray(coeffs_full)[self.radial_free].ravel()

    def free_to_full(self, u: np.ndarray) -> np.ndarray:
        full = np.zeros((self.radial.dim, self.angular.dim))
        full[self.radial_free] = np.asarray(u).reshape(-1, self.angular.dim)
        return full

    def _element_dofs(self) -> np.ndarray:
        """Local-to-global map ``(n_r, n_t, k+1, k+1)``; -1 marks Dirichlet."""
        rpos = self.radial_position[self.radial.span_dofs()]
        tdof = self.angular.span_dofs()
        g = rpos[:, None, :, None] * self.angular.dim + tdof[None, :, None, :]
        return np.where(rpos[:, None, :, None] >= 0, g, -1)

    # -- quadrature grid ----------------------------------------------------

    def quadrature(self, q_radial: Optional[int] = None, q_angular: Optional[int] = None):
        qr = q_radial or self.q_radial
        qt = q_angular or self.q_angular
        r, wr, Rv, Rd = self.radial.tabulate(qr)
        t, wt, Tv, Td = self.angular.tabulate(qt)
        return r, wr, Rv, Rd, t, wt, Tv, Td

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, u: np.ndarray, r, theta):
        """Value and polar gradient ``(u, u_r, u_theta / r)`` on a grid ``r x theta``."""
        full = self.free_to_full(u)
        Rv, Rd, Rdof = self.radial.eval_basis(np.ravel(r))
        Tv, Td, Tdof = self.angular.eval_basis(np.ravel(theta))
        C = full[Rdof[:, None, :, None], Tdof[None, :, None, :]]
        val = np.einsum("ia,jb,ijab->ij", Rv, Tv, C)
        dr = np.einsum("ia,jb,ijab->ij", Rd, Tv, C)
        dt = np.einsum("ia,jb,ijab->ij", Rv, Td, C)
        return val, dr, dt / np.ravel(r)[:, None]


def _check_finite(arr: np.ndarray, what: str):
    """Raise with the (radial, angular) element of the first non-finite value."""
    bad = ~np.isfinite(arr)
    if np.any(bad):
        er, et = np.argwhere(bad)[0][:2]
        raise FloatingPointError(f"non-finite {what} in element (radial={er}, angular={et})")


def _eval_on_grid(f: Callable, r: np.ndarray, t: np.ndarray):
    """Evaluate ``f`` at quadrature points; result shaped ``(n_r, n_t, q_r, q_t)``."""
    R = r[:, None, :, None]
    T = t[None, :, None, :]
    out = f(R, T)
    if isinstance(out, tuple):
        return tuple(np.broadcast_to(o, np.broadcast_shapes(R.shape, T.shape)) for o in out)
    return np.broadcast_to(out, np.broadcast_shapes(R.shape, T.shape))


def _scatter(space: SplineSpace2D, loc: np.ndarray) -> sp.csr_matrix:
    gd = space._element_dofs()
    n_r, n_t, k1 = gd.shape[0], gd.shape[1], gd.shape[2]
    g = gd.reshape(n_r, n_t, k1 * k1)
    rows = np.broadcast_to(g[:, :, :, None], loc.shape)
    cols = np.broadcast_to(g[:, :, None, :], loc.shape)
    keep = (rows >= 0) & (cols >= 0)
    A = sp.coo_matrix((loc[keep], (rows[keep], cols[keep])), shape=(space.ndof, space.ndof))
    return A.tocsr()


def assemble_stiffness(space: SplineSpace2D, nu: Field = 1.0, nu_bounds=None,
                       q_radial: Optional[int] = None,
                       q_angular: Optional[int] = None) -> sp.csr_matrix:
    """Stiffness ``int nu (u_r v_r + u_theta v_theta / r^2) r dr dtheta``.

    A constant ``nu`` uses the Kronecker factorisation of the tensor space;
    a callable ``nu(r, theta)`` is integrated element by element.
    """
    r, wr, Rv, Rd, t, wt, Tv, Td = space.quadrature(q_radial, q_angular)
    if not callable(nu):
        nu = float(nu)
        if not math.isfinite(nu):
            raise FloatingPointError("non-finite reluctivity")
        if nu_bounds is not None and not (nu_bounds[0] <= nu <= nu_bounds[1]):
            raise ValueError(f"reluctivity {nu} outside bounds {nu_bounds}")
        rad, ang = space.radial, space.angular
        qr = q_radial or space.q_radial
        qt = q_angular or space.q_angular
        Kr = rad.matrix(qr, weight=lambda x: x, d_left=1, d_right=1)
        Mr = rad.matrix(qr, weight=lambda x: 1.0 / x)
        Mt = ang.matrix(qt)
        Kt = ang.matrix(qt, d_left=1, d_right=1)
        free = space.radial_free
        Kr, Mr = Kr[free][:, free], Mr[free][:, free]
        A = nu * (sp.kron(Kr, Mt) + sp.kron(Mr, Kt))
        return sp.csr_matrix(A)

    nuq = _eval_on_grid(nu, r, t)
    _check_finite(nuq, "reluctivity")
    if nu_bounds is not None and (np.any(nuq < nu_bounds[0]) or np.any(nuq > nu_bounds[1])):
        raise ValueError(f"reluctivity outside bounds {nu_bounds}")
    wrr = wr * r
    wri = wr / r
    # local[er, et, a, b, c, d]: radial a, c and angular b, d
    G1 = np.einsum("etpq,tq,tqb,tqd->etpbd", nuq, wt, Tv, Tv, optimize=True)
    G2 = np.einsum("etpq,tq,tqb,tqd->etpbd", nuq, wt, Td, Td, optimize=True)
    loc = (np.einsum("ep,epa,epc,etpbd->etabcd", wrr, Rd, Rd, G1, optimize=True)
           + np.einsum("ep,epa,epc,etpbd->etabcd", wri, Rv, Rv, G2, optimize=True))
    k1 = space.degree + 1
    loc = loc.reshape(loc.shape[0], loc.shape[1], k1 * k1, k1 * k1)
    return _scatter(space, loc)


def assemble_mass(space: SplineSpace2D) -> sp.csr_matrix:
    """L2 mass matrix ``int u v r dr dtheta``."""
    rad, ang = space.radial, space.angular
    Mr = rad.matrix(space.q_radial, weight=lambda x: x)
    free = space.radial_free
    return sp.csr_matrix(sp.kron(Mr[free][:, free], ang.matrix(space.q_angular)))


def assemble_rhs(space: SplineSpace2D, src: SourceSpec,
                 q_radial: Optional[int] = None, q_angular: Optional[int] = None) -> np.ndarray:
    """Load ``int js v r dr dtheta - int m_perp . grad v r dr dtheta``.

    ``m_perp = (m_y, -m_x)``; the weak form of ``div m_perp`` picks up the
    jumps of piecewise-constant magnetization automatically.
    """
    f = np.zeros(space.ndof)
    if src.js is None and src.m is None:
        return f
    r, wr, Rv, Rd, t, wt, Tv, Td = space.quadrature(q_radial, q_angular)
    W = (wr * r)[:, None, :, None] * wt[None, :, None, :]
    k1 = space.degree + 1
    loc = np.zeros((r.shape[0], t.shape[0], k1, k1))
    if src.js is not None:
        js = _eval_on_grid(src.js, r, t)
        _check_finite(js, "source current density")
        loc += np.einsum("etpq,epa,tqb->etab", W * js, Rv, Tv, optimize=True)
    if src.m is not None:
        mx, my = _eval_on_grid(src.m, r, t)
        _check_finite(mx, "magnetization")
        _check_finite(my, "magnetization")
        T = t[None, :, None, :]
        c, s = np.cos(T), np.sin(T)
        # m_perp in the polar frame: radial and tangential components
        p_r = my * c - mx * s
        p_t = -my * s - mx * c
        Rr = r[:, None, :, None]
        loc -= np.einsum("etpq,epa,tqb->etab", W * p_r, Rd, Tv, optimize=True)
        loc -= np.einsum("etpq,epa,tqb->etab", W * p_t / Rr, Rv, Td, optimize=True)
    gd = space._element_dofs()
    keep = gd >= 0
    np.add.at(f, gd[keep], loc[keep])
    return f


def trace_matrix(space: SplineSpace2D) -> sp.csr_matrix:
    """Selection ``(n_theta, ndof)`` from ring dofs to interface trace coefficients."""
    n = space.n_interface
    return sp.csr_matrix((np.ones(n), (np.arange(n), space.interface_dofs)),
                         shape=(n, space.ndof))


def trace_space(space: SplineSpace2D) -> SplineSpace1D:
    """Periodic angular space in which interface traces live."""
    return space.angular


def l2_project_trace(tspace: SplineSpace1D, g: Callable, r_gamma: float,
                     max_phase: Optional[float] = None, q: Optional[int] = None) -> np.ndarray:
    """L2(Gamma) projection of ``g(theta)`` onto the periodic trace space.

    ``max_phase`` bounds the oscillation of ``g`` per span (in radians of
    its highest frequency times the span); spans are split accordingly.
    """
    q = q or tspace.degree + 12
    M = r_gamma * tspace.matrix(q)
    pts, w = interface_quadrature(tspace, max_phase, q)
    vals, _, dofs = tspace.eval_basis(pts)
    gv = np.asarray(g(pts), dtype=float)
    if not np.all(np.isfinite(gv)):
        raise FloatingPointError("non-finite values of the projected function")
    b = np.zeros(tspace.dim)
    np.add.at(b, dofs, (r_gamma * w * gv)[..., None] * vals)
    try:
        return cho_solve(cho_factor(M.toarray()), b)
    except LinAlgError as exc:
        raise np.linalg.LinAlgError("singular trace mass matrix") from exc


def interface_quadrature(tspace: SplineSpace1D, max_phase: Optional[float] = None,
                         q: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Gauss points on the trace spans, each span split into equal panels.

    ``max_phase`` is the largest angular frequency the integrand carries;
    panels are sized so it advances by at most ``pi/2`` per panel.
    """
    q = q or tspace.degree + 2
    b = tspace.breaks
    panels = 1
    if max_phase:
        panels = max(1, math.ceil(max_phase * np.max(np.diff(b)) / (0.5 * math.pi) - 1e-12))
    fine = np.concatenate([
        (b[:-1, None] + np.outer(np.diff(b), np.arange(panels) / panels)).ravel(), b[-1:]])
    pts, w = span_quadrature(fine, q)
    return pts.reshape(tspace.n_spans, -1), w.reshape(tspace.n_spans, -1)

"""Trigonometric multiplier space on the air-gap circle.

Basis ordering is fixed everywhere as
``[1, cos t, sin t, cos 2t, sin 2t, ..., cos Nt, sin Nt]``.

Sobolev norms on the circle of radius ``r_gamma`` are spectral: a mode of
angular order ``n`` carries weight ``(1 + n^2)^s`` on top of its
``L2(Gamma)`` norm, measured with arclength ``r_gamma dtheta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .splines import SplineSpace1D, interface_quadrature


@dataclass(frozen=True)
class HarmonicSpace:
    """Trigonometric polynomials of order ``<= N`` on ``|x| = r_gamma``."""

    N: int
    r_gamma: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise ValueError(f"harmonic order must be a nonnegative integer, got {self.N}")
        if not self.r_gamma > 0:
            raise ValueError(f"interface radius must be positive, got {self.r_gamma}")

    @property
    def dim(self) -> int:
        return 2 * self.N + 1

    @property
    def orders(self) -> np.ndarray:
        """Angular order of each basis function."""
        return mode_orders(self.N)

    def evaluate_basis(self, theta) -> np.ndarray:
        """Basis values, shape ``theta.shape + (2N + 1,)``."""
        theta = np.asarray(theta, dtype=float)
        n = np.arange(1, self.N + 1)
        out = np.empty(theta.shape + (self.dim,))
        out[..., 0] = 1.0
        arg = theta[..., None] * n
        out[..., 1::2] = np.cos(arg)
        out[..., 2::2] = np.sin(arg)
        return out

    def evaluate(self, coeffs, theta) -> np.ndarray:
        return self.evaluate_basis(theta) @ np.asarray(coeffs)


def mode_orders(N: int) -> np.ndarray:
    orders = np.zeros(2 * N + 1, dtype=int)
    orders[1::2] = np.arange(1, N + 1)
    orders[2::2] = np.arange(1, N + 1)
    return orders


def l2_weights(N: int, r_gamma: float) -> np.ndarray:
    """Squared L2(Gamma) norms of the basis functions."""
    w = np.full(2 * N + 1, math.pi * r_gamma)
    w[0] = 2.0 * math.pi * r_gamma
    return w


def gram(space: HarmonicSpace, s: float = -0.5) -> np.ndarray:
    """Diagonal of the ``H^s(Gamma)`` Gram matrix, ``s`` in ``{-1/2, +1/2}``.

    The constant mode has weight one for either sign, so its entry is the
    circle length ``2 pi r_gamma``.
    """
    if s not in (-0.5, 0.5):
        raise ValueError(f"only s = -1/2 or +1/2 supported, got {s}")
    n = space.orders
    return l2_weights(space.N, space.r_gamma) * (1.0 + n * n) ** s


def sobolev_norm(coeffs, r_gamma: float, s: float) -> float:
    """``H^s(Gamma)`` norm of a harmonic coefficient vector (any length ``2N+1``)."""
    coeffs = np.asarray(coeffs, dtype=float)
    N = (coeffs.size - 1) // 2
    n = mode_orders(N)
    return float(np.sqrt(np.sum(l2_weights(N, r_gamma) * (1.0 + n * n) ** s * coeffs ** 2)))


def fourier_coefficients(values: np.ndarray) -> np.ndarray:
    """Real Fourier coefficients in basis order from samples on a uniform periodic grid.

    ``values[j]`` is the function at ``theta_j = 2 pi j / M``; all orders
    below ``M / 2`` are returned.
    """
    values = np.asarray(values, dtype=float)
    M = values.size
    c = np.fft.rfft(values) / M
    N = (M - 1) // 2
    out = np.empty(2 * N + 1)
    out[0] = c[0].real
    out[1::2] = 2.0 * c[1:N + 1].real
    out[2::2] = -2.0 * c[1:N + 1].imag
    return out


def assemble_coupling(tspace: SplineSpace1D, hspace: HarmonicSpace, sign: int = 1,
                      q: int | None = None, block: int = 256) -> np.ndarray:
    """Dense coupling ``B[m, i] = sign * int psi_m phi_i r_gamma dtheta``.

    Every trace span is split into panels over which the highest harmonic
    advances by at most ``pi/2``; each panel gets ``q`` Gauss points.

    Parameters
    ----------
    tspace : SplineSpace1D
        Periodic trace space on ``[0, 2 pi)``.
    hspace : HarmonicSpace
    sign : {+1, -1}
        ``+1`` for stator traces, ``-1`` for rotor traces (jump ``v1 - v2``).
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if not tspace.periodic or not math.isclose(tspace.period, 2 * math.pi):
        raise ValueError("trace space must be periodic on [0, 2 pi)")
    q = q or tspace.degree + 12
    pts, w = interface_quadrature(tspace, max_phase=max(hspace.N, 1), q=q)
    # panel phase bound, checked on the realised quadrature
    widths = np.diff(tspace.breaks).max() / (pts.shape[1] // q)
    if hspace.N * widths > 0.5 * math.pi * (1 + 1e-12):
        raise ArithmeticError("panel phase exceeds pi/2")
    vals, _, dofs = tspace.eval_basis(pts)
    pts, w = pts.ravel(), w.ravel() * hspace.r_gamma
    k1 = tspace.degree + 1
    rows = np.repeat(np.arange(pts.size), k1)
    Phi = sp.csc_matrix((vals.ravel(), (rows, dofs.ravel())), shape=(pts.size, tspace.dim))
    PhiT = sp.csr_matrix(Phi.T.multiply(w[None, :]))
    B = np.empty((hspace.dim, tspace.dim))
    n = np.arange(hspace.dim)
    for start in range(0, hspace.dim, block):
        modes = n[start:start + block]
        psi = _basis_columns(pts, modes)
        B[start:start + block] = (PhiT @ psi).T
    return sign * B


def _basis_columns(theta: np.ndarray, index: np.ndarray) -> np.ndarray:
    """Values of the basis functions with the given positions, ``(len(theta), len(index))``."""
    order = (index + 1) // 2
    arg = theta[:, None] * order[None, :]
    return np.where(index % 2 == 1, np.cos(arg), np.where(index == 0, 1.0, np.sin(arg)))


def rotation_blocks(N: int, alpha: float) -> np.ndarray:
    """Block-diagonal rotation acting on harmonic coefficients.

    Mode ``n`` gets ``[[cos n a, sin n a], [-sin n a, cos n a]]`` on its
    ``(cos, sin)`` pair; the constant mode is left alone.
    """
    R = np.zeros((2 * N + 1, 2 * N + 1))
    R[0, 0] = 1.0
    for n in range(1, N + 1):
        c, s = math.cos(n * alpha), math.sin(n * alpha)
        i = 2 * n - 1
        R[i, i], R[i, i + 1] = c, s
        R[i + 1, i], R[i + 1, i + 1] = -s, c
    return R


def trace_fourier(tspace: SplineSpace1D, coeffs, n_samples: int | None = None) -> np.ndarray:
    """Fourier coefficients of a periodic spline, by dense uniform sampling."""
    M = n_samples or 64 * tspace.n_spans
    theta = 2 * math.pi * np.arange(M) / M
    return fourier_coefficients(tspace.evaluate(coeffs, theta))

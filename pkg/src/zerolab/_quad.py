"""Quadrature helpers.

The weighted polynomial models lead to radial integrals
``int_0^infty exp(log_g(s)) ds`` whose integrand combines a sharp peak at
moderate ``s`` with, for the log-log weight, a slowly decaying tail whose
mass sits near ``log s ~ 2*N*delta``.  The integral is therefore split into
a bounded piece, handled with the substitution ``t = s/(1+s)``, and a tail
piece in the variable ``x = log s``.  Both pieces use composite
Gauss-Legendre panels with node doubling until the result stabilizes, and
all sums are carried out in log space.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import QuadratureError

_gl_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(n: int):
    if n not in _gl_cache:
        _gl_cache[n] = np.polynomial.legendre.leggauss(n)
    return _gl_cache[n]


def panel_nodes(a: float, b: float, n_panels: int, n_nodes: int = 16):
    """Composite Gauss-Legendre nodes/weights on [a, b]."""
    x, w = _gl(n_nodes)
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    nodes = (mid + half * x[None, :]).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


def _log_weighted_sum(log_vals: np.ndarray, weights: np.ndarray) -> float:
    """log(sum(w * exp(log_vals))) for positive weights."""
    m = np.max(log_vals)
    if not np.isfinite(m):
        return -np.inf
    return m + math.log(float(np.sum(weights * np.exp(log_vals - m))))


def log_radial_integral(log_g, x_max: float, rel_tol: float = 1e-11,
                        t_split: float = 0.9, n_nodes: int = 16,
                        max_doublings: int = 8) -> float:
    """log of ``int_0^infty exp(log_g(s)) ds`` for a positive integrand.

    ``log_g`` must accept an ndarray of s-values.  ``x_max`` bounds the tail
    in the variable ``x = log s``; the caller chooses it so the integrand is
    negligible beyond.
    """
    s_split = t_split / (1.0 - t_split)
    x_lo = math.log(s_split)
    if x_max <= x_lo:
        x_max = x_lo + 1.0

    def estimate(n_panels: int) -> float:
        # piece 1: s in (0, s_split) via t = s/(1+s)
        t, wt = panel_nodes(0.0, t_split, n_panels, n_nodes)
        s = t / (1.0 - t)
        log_vals1 = log_g(s) - 2.0 * np.log1p(-t)
        l1 = _log_weighted_sum(log_vals1, wt)
        # piece 2: x = log s in (x_lo, x_max)
        npan2 = max(n_panels, int((x_max - x_lo) / 4.0) + 1)
        x, wx = panel_nodes(x_lo, x_max, npan2, n_nodes)
        sx = np.exp(x)
        log_vals2 = log_g(sx) + x
        l2 = _log_weighted_sum(log_vals2, wx)
        return np.logaddexp(l1, l2)

    n_panels = 16
    prev = estimate(n_panels)
    for _ in range(max_doublings):
        n_panels *= 2
        cur = estimate(n_panels)
        if abs(cur - prev) < rel_tol:
            return cur
        prev = cur
    raise QuadratureError(
        f"radial integral did not stabilize (last change {abs(cur - prev):.2e})",
        achieved=abs(cur - prev))


def disk_integral(f, center: complex, radius: float, rel_tol: float = 1e-9,
                  max_doublings: int = 7) -> float:
    """Integral of ``f`` over a disk, polar Gauss-Legendre with doubling.

    ``f`` takes an ndarray of complex points and returns real values.
    """

    def estimate(n: int) -> float:
        r, wr = panel_nodes(0.0, radius, max(n // 8, 1), 16)
        th, wth = panel_nodes(0.0, 2.0 * math.pi, max(n // 8, 1), 16)
        z = center + r[:, None] * np.exp(1j * th[None, :])
        vals = f(z.ravel()).reshape(z.shape)
        return float(np.sum((wr * r)[:, None] * wth[None, :] * vals))

    n = 16
    prev = estimate(n)
    for _ in range(max_doublings):
        n *= 2
        cur = estimate(n)
        if abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise QuadratureError("disk integral did not stabilize",
                          achieved=abs(cur - prev))

"""Bergman kernel diagonal and its asymptotic diagnostics.

The diagonal ``P_N(z, z)`` is the sum of weighted squared magnitudes of an
orthonormal basis.  Everything is computed in log space, since the weight
factor underflows doubles long before the quantities of interest degenerate.
Three diagnostics are provided: the trace identity (the base-measure
integral of ``P_N`` equals the dimension), the leading coefficient of the
large-``N`` expansion ``P_N = b0*N + b1 + o(1)``, and the pullback density
``(1/N)[N*curvature + laplacian(log P_N)/(4 pi)]`` which should approach
the curvature density.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import geometry
from .errors import DomainError, ModelConstructionError
from ._quad import log_radial_integral
from .spaces import SectionSpace, build_space


def log_bergman_diag(space: SectionSpace, z) -> np.ndarray:
    """log P_N(z, z); -inf exactly on the common zero set of the basis."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = geometry.weight_log(space.model, space.degree, z)
    if space.model.chart == geometry.PLANE:
        # the plane bases are orthogonal monomials (identity transform), so
        # the diagonal can be summed in log space; |z|^(2j) would overflow
        # doubles at the radii the trace quadrature visits.
        with np.errstate(divide="ignore", invalid="ignore"):
            ls = 2.0 * np.log(np.abs(z))
            j = np.arange(space.dim, dtype=float)
            log_sq = j[:, None] * ls[None, :] - 2.0 * space.log_scales[:, None]
        log_sq[0, :] = -2.0 * space.log_scales[0]  # j=0 term, constant in z
        return logsumexp(log_sq, axis=0) + w
    b = space.basis_values(z)
    with np.errstate(divide="ignore"):
        log_sq = 2.0 * np.log(np.abs(b))
    return logsumexp(log_sq, axis=0) + w


def bergman_diag(space: SectionSpace, z):
    """Bergman kernel diagonal P_N(z, z), a nonnegative real."""
    scalar = np.isscalar(z) or np.ndim(z) == 0
    out = np.exp(log_bergman_diag(space, z))
    return float(out[0]) if scalar else out


@dataclass
class BergmanProfile:
    """P_N(z, z) sampled on a grid of chart points."""

    space: SectionSpace
    grid: np.ndarray
    values: np.ndarray
    log_values: np.ndarray

    @classmethod
    def compute(cls, space: SectionSpace, grid) -> "BergmanProfile":
        grid = np.atleast_1d(np.asarray(grid, dtype=complex))
        logs = log_bergman_diag(space, grid)
        return cls(space=space, grid=grid, values=np.exp(logs),
                   log_values=logs)

    def to_csv(self) -> str:
        lines = ["re,im,P_N,logP_N"]
        for z, v, lv in zip(self.grid, self.values, self.log_values):
            lines.append(f"{z.real:.17g},{z.imag:.17g},{v:.17g},{lv:.17g}")
        return "\r\n".join(lines) + "\r\n"


# ---------------------------------------------------------------------------
# trace identity

def trace_check(space: SectionSpace, quad_tol: float = 1e-10) -> float:
    """Base-measure integral of P_N divided by the dimension.

    Orthonormality forces the ratio to be exactly 1; the quadrature is a
    consistency check of the whole construction.  Plane models integrate
    radially (P_N is rotation invariant because the monomial Gram is
    diagonal); the hyperbolic model re-runs the Petersson quadrature on the
    orthonormal basis with a different fundamental-domain split so the check
    is not a tautology.
    """
    model = space.model
    if model.kind == geometry.HYPERBOLIC_GAMMA2:
        return _trace_hyperbolic(space)

    def log_g(s):
        z = np.sqrt(s).astype(complex)
        with np.errstate(over="ignore", divide="ignore"):
            dens = np.real(geometry.base_density(model, z))
            return log_bergman_diag(space, z) + np.log(dens) + math.log(math.pi)

    n = space.degree
    alpha = 2.0 * n * model.delta if model.kind == geometry.POINCARE_WEIGHTED \
        else 0.0
    x_max = alpha + 12.0 * math.sqrt(max(alpha, 1.0)) + 95.0
    log_tr = log_radial_integral(log_g, x_max=x_max, rel_tol=quad_tol)
    return math.exp(log_tr) / space.dim


def _trace_hyperbolic(space: SectionSpace) -> float:
    from .cuspforms import CuspPreconditioner, petersson_gram
    pre = CuspPreconditioner(space.degree)
    c = pre.rows(space.m_strip)
    lam = space.log_scales
    combo = {k: space.transform.T @ (np.exp(-lam)[:, None] * v)
             for k, v in c.items()}
    a, o = petersson_gram(combo, space.degree, split_height=1.25)
    return float(np.real(np.trace(a * np.exp(o)))) / space.dim


# ---------------------------------------------------------------------------
# leading coefficient

@dataclass
class LeadingCoeffFit:
    """Least-squares fit of P_N(z, z) = b0*N + b1 over a list of degrees."""

    point: complex
    N_list: list
    values: np.ndarray
    b0: float
    b1: float
    max_residual: float
    predicted_b0: float

    @property
    def relative_error(self) -> float:
        return abs(self.b0 - self.predicted_b0) / abs(self.predicted_b0)


def leading_coeff_fit(model: geometry.WeightModel, N_list, z,
                      spaces: dict | None = None) -> LeadingCoeffFit:
    """Fit the leading Bergman coefficient at a point and compare with the
    curvature-to-base density ratio predicted for it.

    ``spaces`` may supply prebuilt section spaces keyed by degree to avoid
    repeated orthonormalization.
    """
    N_list = list(N_list)
    if len(N_list) < 3 or any(a >= b for a, b in zip(N_list, N_list[1:])):
        raise ModelConstructionError(
            "need at least three strictly increasing degrees to fit")
    vals = []
    for n in N_list:
        sp = spaces.get(n) if spaces else None
        if sp is None:
            sp = build_space(model, n)
        vals.append(bergman_diag(sp, z))
    vals = np.array(vals)
    design = np.stack([np.array(N_list, dtype=float),
                       np.ones(len(N_list))], axis=1)
    coef, _, rank, _ = np.linalg.lstsq(design, vals, rcond=None)
    if rank < 2:
        raise ModelConstructionError("degenerate leading-coefficient fit")
    resid = np.max(np.abs(design @ coef - vals))
    pred = float(np.real(geometry.curvature_density(model, complex(z)))
                 / np.real(geometry.base_density(model, complex(z))))
    return LeadingCoeffFit(point=complex(z), N_list=N_list, values=vals,
                           b0=float(coef[0]), b1=float(coef[1]),
                           max_residual=float(resid), predicted_b0=pred)


# ---------------------------------------------------------------------------
# Fubini-Study pullback density

def fs_pullback_density(space: SectionSpace, z, fd_step: float = 1e-3,
                        flag_tol: float = 1e-3) -> float:
    """Density at z of the normalized pullback of the round form.

    Returns (1/N)[N*curvature_density(z) + laplacian(log P_N)(z)/(4 pi)],
    the Laplacian by a 5-point stencil with Richardson extrapolation from
    steps ``fd_step`` and ``2*fd_step``; a relative disagreement of the two
    stencils above ``flag_tol`` emits a warning.
    """
    z = complex(z)
    h = fd_step
    if space.model.chart == geometry.UPPER_HALF_PLANE and z.imag <= 2 * h:
        raise DomainError("stencil leaves the upper half plane; shrink fd_step")
    stencil = np.array([z, z + h, z - h, z + 1j * h, z - 1j * h,
                        z + 2 * h, z - 2 * h, z + 2j * h, z - 2j * h])
    lp = log_bergman_diag(space, stencil)
    if not np.all(np.isfinite(lp)):
        raise ModelConstructionError(
            "P_N vanishes within the stencil (base-locus proximity)")
    lap_h = (lp[1] + lp[2] + lp[3] + lp[4] - 4.0 * lp[0]) / h ** 2
    lap_2h = (lp[5] + lp[6] + lp[7] + lp[8] - 4.0 * lp[0]) / (2 * h) ** 2
    lap = (4.0 * lap_h - lap_2h) / 3.0
    n = space.degree
    curv = float(np.real(geometry.curvature_density(space.model, z, degree=n)))
    dens = (curv + lap / (4.0 * math.pi)) / n
    scale = max(abs(dens), abs(curv) / n, 1e-12)
    if abs(lap_h - lap_2h) / (4.0 * math.pi * n) > flag_tol * scale:
        warnings.warn(
            f"pullback stencil disagreement at {z}: steps {h} and {2*h} "
            f"differ beyond {flag_tol} relative", stacklevel=2)
    return dens

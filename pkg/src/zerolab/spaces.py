"""Finite-dimensional L2 section spaces and random sections.

For the plane models the raw basis is the monomials z^j; the weighted inner
product is radial, so the Gram matrix is diagonal and only the log-norms
need quadrature.  For the hyperbolic model the raw basis is the theta
monomials of :mod:`zerolab.cuspforms` and the Gram is a full Petersson
matrix.  All normalization constants are kept in log space so that degrees
of a few hundred survive double precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import geometry
from .cuspforms import (CUSP_ZONES, CuspPreconditioner, ThetaMonomial,
                        cusp_basis, cusp_dim, eval_qseries, petersson_gram,
                        qseries_tail_ratio)
from .errors import ModelConstructionError, TruncationError
from ._quad import log_radial_integral
from ._rng import derive_seed, generator

FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# radial norms for the plane models

def _log_density(model: geometry.WeightModel, s: np.ndarray) -> np.ndarray:
    z = np.sqrt(s).astype(complex)
    # the quadrature tail visits radii where (1+s)^2 overflows; the density
    # underflows to 0 there and the log-space sum drops the nodes cleanly
    with np.errstate(over="ignore", divide="ignore"):
        return np.log(np.real(geometry.base_density(model, z)))


def log_monomial_norm(model: geometry.WeightModel, degree: int, j: int,
                      rel_tol: float = 1e-11) -> float:
    """log of ||z^j||^2 in the degree-N weighted L2 product.

    The integral is pi * int_0^inf s^j (1+s)^(-N) * (log weight)^... * rho(s) ds
    in the variable s = r^2; see the weight conventions in geometry.
    """
    n = degree
    delta = model.delta if model.kind == geometry.POINCARE_WEIGHTED else 0.0
    alpha = 2.0 * n * delta

    def log_g(s):
        out = j * np.log(s) - n * np.log1p(s) + _log_density(model, s) \
            + math.log(math.pi)
        if delta > 0:
            out = out + alpha * np.log(np.log(model.offset + s))
        return out

    beta = max(1.0, float(n - j))
    x_max = alpha / beta + 12.0 * math.sqrt(max(alpha, 1.0)) / beta \
        + 80.0 / beta + 15.0
    return log_radial_integral(log_g, x_max=x_max, rel_tol=rel_tol)


def poly_dim(model: geometry.WeightModel, degree: int) -> int:
    if model.kind == geometry.FUBINI_STUDY:
        return degree + 1
    # weighted L2 polynomials at bundle power N are exactly degree <= N-1
    return degree


def gram_matrix(model: geometry.WeightModel, degree: int,
                rel_tol: float = 1e-11) -> np.ndarray:
    """Raw Gram matrix of the monomial basis (plane models only).

    Off-diagonal entries vanish by radial symmetry and are returned as exact
    zeros; tests cross-check this against two-dimensional quadrature.
    """
    if model.kind == geometry.HYPERBOLIC_GAMMA2:
        raise ModelConstructionError("use build_space for the hyperbolic model")
    d = poly_dim(model, degree)
    logs = [log_monomial_norm(model, degree, j, rel_tol) for j in range(d)]
    return np.diag(np.exp(logs))


def fs_log_norm_exact(degree: int, j: int) -> float:
    """Closed-form oracle: ||z^j||^2 = j!(N-j)!/(N+1)! for the round model."""
    from scipy.special import gammaln
    n = degree
    return float(gammaln(j + 1) + gammaln(n - j + 1) - gammaln(n + 2))


def orthonormalize(gram: np.ndarray) -> np.ndarray:
    """Lower-triangular T with T^H G T = I, via a reversed Cholesky.

    Raises with an eigenvalue report if the input is not positive definite.
    """
    gram = np.asarray(gram, dtype=complex)
    if not np.allclose(gram, gram.conj().T, rtol=1e-10, atol=1e-13 * np.max(np.abs(gram))):
        raise ModelConstructionError("Gram matrix is not Hermitian")
    try:
        flipped = np.flip(gram)
        c = np.linalg.cholesky(flipped)
    except np.linalg.LinAlgError:
        ev = np.linalg.eigvalsh(gram)
        raise ModelConstructionError(
            f"Gram matrix not positive definite (eigenvalues {ev.min():.3e}"
            f" .. {ev.max():.3e})")
    upper = np.flip(c)  # gram = upper @ upper^H
    t = scipy.linalg.solve_triangular(upper, np.eye(len(gram), dtype=complex),
                                      lower=False)
    return t.conj().T  # lower triangular


# ---------------------------------------------------------------------------
# section spaces

@dataclass
class SectionSpace:
    """Orthonormalized space of holomorphic sections at a fixed degree."""

    model: geometry.WeightModel
    degree: int
    dim: int
    log_scales: np.ndarray          # per raw-basis-element log normalizations
    gram: np.ndarray                # Gram of the scaled raw basis
    transform: np.ndarray           # lower-triangular, T^H gram T = I
    # For polynomial models the raw basis is the monomials z^j; for the
    # hyperbolic model it is the echelon cusp basis q^(i+1) + O(q^(d+1)).
    # hyperbolic only:
    monomials: list[ThetaMonomial] | None = None
    qexp: np.ndarray | None = None  # orthonormal basis q-coefficients
    qexp_tail: float = 0.0          # tail ratio at the working height
    m_strip: int = 0

    def __post_init__(self):
        res = self.transform.conj().T @ self.gram @ self.transform \
            - np.eye(self.dim)
        if np.max(np.abs(res)) > 1e-8:
            raise ModelConstructionError(
                f"orthonormalization residual {np.max(np.abs(res)):.2e}")

    # -- evaluation ---------------------------------------------------------

    def basis_values(self, z) -> np.ndarray:
        """Orthonormal basis values in the chart trivialization, shape (dim, len(z))."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.model.kind == geometry.HYPERBOLIC_GAMMA2:
            return np.stack([eval_qseries(c, z) for c in self.qexp])
        powers = z[None, :] ** np.arange(self.dim)[:, None]
        scaled = powers * np.exp(-self.log_scales)[:, None]
        return self.transform.T @ scaled

    def monomial_coefficients(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficients of the section in the raw monomial basis z^k."""
        if self.model.kind == geometry.HYPERBOLIC_GAMMA2:
            raise ModelConstructionError("polynomial models only")
        return np.exp(-self.log_scales) * (self.transform @ coeffs)

    def monomial_log_coefficients(self, coeffs: np.ndarray):
        """Monomial coefficients as (phases, log magnitudes).

        The per-monomial normalizations exp(-log_scales) overflow doubles
        for the weighted model beyond degree ~100; root finding only needs
        the projective class, so the log representation suffices.
        """
        if self.model.kind == geometry.HYPERBOLIC_GAMMA2:
            raise ModelConstructionError("polynomial models only")
        c = self.transform @ np.asarray(coeffs, dtype=complex)
        mag = np.abs(c)
        with np.errstate(divide="ignore"):
            logmag = np.log(mag) - self.log_scales
        phases = np.where(mag > 0, c / np.where(mag > 0, mag, 1.0), 0.0)
        return phases, logmag

    def to_dict(self) -> dict:
        d = {
            "format_version": FORMAT_VERSION,
            "model": self.model.params(),
            "degree": self.degree,
            "dim": self.dim,
            "log_scales": self.log_scales.tolist(),
            "gram_re": np.real(self.gram).tolist(),
            "gram_im": np.imag(self.gram).tolist(),
            "transform_re": np.real(self.transform).tolist(),
            "transform_im": np.imag(self.transform).tolist(),
        }
        if self.model.kind == geometry.HYPERBOLIC_GAMMA2:
            d["monomials"] = [[m.p, m.r, m.s] for m in self.monomials]
            d["qexp_re"] = np.real(self.qexp).tolist()
            d["qexp_im"] = np.imag(self.qexp).tolist()
            d["qexp_tail"] = self.qexp_tail
            d["m_strip"] = self.m_strip
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SectionSpace":
        if d.get("format_version") != FORMAT_VERSION:
            raise ModelConstructionError("unknown cache format version")
        p = d["model"]
        kind = p["kind"]
        if kind == geometry.FUBINI_STUDY:
            model = geometry.fubini_study()
        elif kind == geometry.POINCARE_WEIGHTED:
            model = geometry.poincare_weighted(p["epsilon"], p["delta"], p["offset"])
        else:
            model = geometry.hyperbolic_gamma2(p["cusp_height"])
        kwargs = {}
        if kind == geometry.HYPERBOLIC_GAMMA2:
            kwargs = {
                "monomials": [ThetaMonomial(p=a, r=b, s=c)
                              for a, b, c in d["monomials"]],
                "qexp": np.array(d["qexp_re"]) + 1j * np.array(d["qexp_im"]),
                "qexp_tail": d["qexp_tail"],
                "m_strip": d["m_strip"],
            }
        return cls(
            model=model, degree=d["degree"], dim=d["dim"],
            log_scales=np.array(d["log_scales"]),
            gram=np.array(d["gram_re"]) + 1j * np.array(d["gram_im"]),
            transform=np.array(d["transform_re"]) + 1j * np.array(d["transform_im"]),
            **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "SectionSpace":
        return cls.from_dict(json.loads(text))


def build_space(model: geometry.WeightModel, degree: int,
                rel_tol: float = 1e-11, eval_tail_tol: float = 1e-3,
                m_eval_cap: int = 4000,
                split_height: float = 1.0) -> SectionSpace:
    """Construct the orthonormalized section space at the given degree."""
    if model.kind == geometry.HYPERBOLIC_GAMMA2:
        return _build_hyperbolic(model, degree, eval_tail_tol, m_eval_cap,
                                 split_height)
    d = poly_dim(model, degree)
    log_norms = np.array([log_monomial_norm(model, degree, j, rel_tol)
                          for j in range(d)])
    return SectionSpace(
        model=model, degree=degree, dim=d, log_scales=0.5 * log_norms,
        gram=np.eye(d, dtype=complex), transform=np.eye(d, dtype=complex))


def _build_hyperbolic(model, degree, eval_tail_tol, m_eval_cap, split_height):
    n = degree
    d = cusp_dim(n)
    if d < 1:
        raise ModelConstructionError(f"empty cusp space at N = {n}")
    monos = cusp_basis(n)
    pre = CuspPreconditioner(n)
    m_strip = max(80, 6 * n)
    cq = pre.rows(m_strip)
    a, o = petersson_gram(cq, n, split_height=split_height)
    diag = np.real(np.diagonal(a))
    if np.any(diag <= 0):
        raise ModelConstructionError("nonpositive Petersson norm; increase truncation")
    lam = 0.5 * (np.diagonal(o) + np.log(diag))
    gram = a * np.exp(o - lam[:, None] - lam[None, :])
    gram = 0.5 * (gram + gram.conj().T)
    ev = np.linalg.eigvalsh(gram)
    if ev.min() <= 1e-13 * ev.max():
        raise ModelConstructionError(
            f"Petersson Gram nearly singular (eigenvalues {ev.min():.3e} .. "
            f"{ev.max():.3e}); insufficient quadrature or truncation")
    t = orthonormalize(gram)

    m_eval = max(200, 12 * n)
    while True:
        c = pre.rows(m_eval, zones=CUSP_ZONES[:1])["inf"]
        e = t.T @ (np.exp(-lam)[:, None] * c)
        tail = max(qseries_tail_ratio(row, model.cusp_height) for row in e)
        if tail < eval_tail_tol or m_eval >= m_eval_cap:
            break
        m_eval = min(2 * m_eval, m_eval_cap)
    if tail >= eval_tail_tol:
        raise TruncationError(
            f"q-expansion tail {tail:.2e} at height {model.cusp_height} "
            f"exceeds {eval_tail_tol} even at M_q = {m_eval}")
    return SectionSpace(
        model=model, degree=n, dim=d, log_scales=lam, gram=gram, transform=t,
        monomials=monos, qexp=e, qexp_tail=tail, m_strip=m_strip)


# ---------------------------------------------------------------------------
# random sections

@dataclass
class RandomSection:
    """Coefficient vector in the orthonormal basis; zeros depend only on
    the projective class."""

    space: SectionSpace
    coeffs: np.ndarray
    seed_tag: int = 0

    def __post_init__(self):
        if not np.any(self.coeffs != 0):
            raise ModelConstructionError("zero section")

    def values(self, z) -> np.ndarray:
        """Trivialization values at z (complex array in, complex array out)."""
        return self.coeffs @ self.space.basis_values(z)

    def log_weighted_sq(self, z) -> np.ndarray:
        """log(|s(z)|^2_h) including the degree-N weight; overflow safe."""
        vals = self.values(z)
        w = geometry.weight_log(self.space.model, self.space.degree, z)
        with np.errstate(divide="ignore"):
            return 2.0 * np.log(np.abs(vals)) + w


def sample_section(space: SectionSpace, seed: int) -> RandomSection:
    """Draw i.i.d. standard complex Gaussian coordinates in the orthonormal
    basis; projectivized this is the Fubini-Study ensemble."""
    rng = generator(seed)
    re = rng.standard_normal(space.dim)
    im = rng.standard_normal(space.dim)
    return RandomSection(space=space, coeffs=(re + 1j * im) / math.sqrt(2.0),
                         seed_tag=seed)


def sample_seed(master_seed: int, degree: int, index: int) -> int:
    return derive_seed(master_seed, degree, index)

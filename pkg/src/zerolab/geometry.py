"""Geometric models: charts, Hermitian weights, base metrics and limit densities.

Three concrete models are provided:

* ``FUBINI_STUDY`` -- polynomials on the plane with the round metric on the
  hyperplane bundle and the normalized Fubini-Study area as base measure.
* ``POINCARE_WEIGHTED`` -- polynomials on the plane with a log-log corrected
  weight near infinity and the matching complete base metric.  With the
  compatibility choice ``delta = 2*pi*epsilon`` the curvature form of the
  weight coincides with the base form.
* ``HYPERBOLIC_GAMMA2`` -- powers of the canonical bundle on the modular
  curve of level two, i.e. cusp forms of even weight on the upper half plane,
  with the hyperbolic area as base measure.

All densities are reported with respect to Lebesgue measure ``dx dy`` of the
chart.  The convention used throughout: ``i*dd^bar(u)`` has Lebesgue density
``laplacian(u)/2``, hence ``(i/2pi)*dd^bar(u)`` has density
``laplacian(u)/(4*pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DomainError, ModelConstructionError, QuadratureError

FUBINI_STUDY = "FUBINI_STUDY"
POINCARE_WEIGHTED = "POINCARE_WEIGHTED"
HYPERBOLIC_GAMMA2 = "HYPERBOLIC_GAMMA2"

PLANE = "PLANE"
UPPER_HALF_PLANE = "UPPER_HALF_PLANE"

# sup of 6*(1-t)^2*sqrt(t) over [0,1], attained at t = 1/5; gradient bound
# of the cubic bump at unit radius.
_BUMP_GRAD_CONST = 6.0 * (4.0 / 5.0) ** 2 / math.sqrt(5.0)
# sup of 24*t*(1-t) + 6*(1-t)^2 over [0,1], attained at t = 1/3; Hessian
# bound of the cubic bump at unit radius.
_BUMP_HESS_CONST = 8.0


@dataclass(frozen=True)
class WeightModel:
    """A chart, a Hermitian weight on the line bundle and a base metric.

    Use the factory functions :func:`fubini_study`, :func:`poincare_weighted`
    and :func:`hyperbolic_gamma2`; the constructor does not validate.
    """

    kind: str
    epsilon: float = 0.0
    delta: float = 0.0
    offset: float = 0.0  # a^2 in ||s0||^2 = 1/(a^2+|z|^2)
    cusp_height: float = 0.0

    @property
    def chart(self) -> str:
        return UPPER_HALF_PLANE if self.kind == HYPERBOLIC_GAMMA2 else PLANE

    def params(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == POINCARE_WEIGHTED:
            d.update(epsilon=self.epsilon, delta=self.delta, offset=self.offset)
        if self.kind == HYPERBOLIC_GAMMA2:
            d["cusp_height"] = self.cusp_height
        return d


def fubini_study() -> WeightModel:
    return WeightModel(kind=FUBINI_STUDY)


def poincare_weighted(epsilon: float = 0.05, delta: float | None = None,
                      offset: float | None = None) -> WeightModel:
    """Plane model with log-log weight correction of strength ``epsilon``.

    ``delta`` defaults to the compatibility value ``2*pi*epsilon``, which
    makes the curvature density of the weight equal to the base density.
    Passing another value is allowed (it is needed to realize a model whose
    leading Bergman coefficient is non-constant) but breaks that identity.
    """
    if epsilon <= 0:
        raise ModelConstructionError("epsilon must be positive")
    if delta is None:
        delta = 2.0 * math.pi * epsilon
    if delta <= 0:
        raise ModelConstructionError("delta must be positive")
    if offset is None:
        offset = math.e ** 2
    if offset < math.e ** 2 - 1e-12:
        # -log||s0||^2 = log(offset + |z|^2) must stay >= 2 so that the
        # log-log term is smooth and real on the whole plane.
        raise ModelConstructionError("offset below e^2 breaks -log||s0||^2 >= 2")
    model = WeightModel(kind=POINCARE_WEIGHTED, epsilon=epsilon, delta=delta,
                        offset=offset)
    _check_positive_density(model)
    return model


def hyperbolic_gamma2(cusp_height: float = 0.25) -> WeightModel:
    if cusp_height <= 0:
        raise ModelConstructionError("cusp_height must be positive")
    return WeightModel(kind=HYPERBOLIC_GAMMA2, cusp_height=cusp_height)


def _check_positive_density(model: WeightModel, rmax: float = 1e6, n: int = 400):
    # radial grid, log-spaced out to rmax plus the origin
    r = np.concatenate([[0.0], np.logspace(-3, np.log10(rmax), n)])
    dens = base_density(model, r.astype(complex))
    if np.any(dens <= 0):
        bad = r[np.argmin(dens)]
        raise ModelConstructionError(
            f"base-metric density nonpositive at |z| = {bad:.6g} "
            f"(value {dens.min():.3e}); decrease epsilon")


# ---------------------------------------------------------------------------
# densities and weights

def _check_chart(model: WeightModel, z):
    if model.chart == UPPER_HALF_PLANE:
        y = np.imag(z)
        if np.any(y <= 0):
            raise DomainError("point not in the upper half plane")


def weight_log(model: WeightModel, degree: int, z):
    """Log of the degree-``degree`` Hermitian weight at ``z``.

    For the plane models this is ``-N*log(1+|z|^2)`` plus, for the weighted
    model, the log-log correction ``2*N*delta*log(log(a^2+|z|^2))``; for the
    hyperbolic model it is ``2*N*log(Im tau)``.
    """
    _check_chart(model, z)
    z = np.asarray(z, dtype=complex)
    if model.kind == HYPERBOLIC_GAMMA2:
        return 2.0 * degree * np.log(np.imag(z))
    s = np.abs(z) ** 2
    out = -degree * np.log1p(s)
    if model.kind == POINCARE_WEIGHTED:
        biglog = np.log(model.offset + s)  # = -log||s0||^2 >= 2
        out = out + 2.0 * degree * model.delta * np.log(biglog)
    return out


def _loglog_laplacian(model: WeightModel, s):
    """Laplacian of log(log(a^2+|z|^2)) as a function of s = |z|^2."""
    a2 = model.offset
    big = np.log(a2 + s)
    return 4.0 * (a2 * big - s) / ((a2 + s) ** 2 * big ** 2)


def base_density(model: WeightModel, z):
    """Density of the base area measure w.r.t. Lebesgue measure of the chart."""
    _check_chart(model, z)
    z = np.asarray(z, dtype=complex)
    if model.kind == HYPERBOLIC_GAMMA2:
        return 1.0 / np.imag(z) ** 2
    s = np.abs(z) ** 2
    fs = 1.0 / (math.pi * (1.0 + s) ** 2)
    if model.kind == FUBINI_STUDY:
        return fs
    # Theta_eps = omega_FS - i*eps*dd^bar log(-log||s0||^2)^2; the correction
    # has Lebesgue density -eps * laplacian(log(-log||s0||^2)).
    return fs - model.epsilon * _loglog_laplacian(model, s)


def curvature_density(model: WeightModel, z, degree: int = 1):
    """Density of ``(i/2pi) R^{L^degree}`` w.r.t. Lebesgue measure.

    Computed from the analytic Laplacian of the weight potential; equals
    ``degree/(4*pi) * laplacian(-weight_log(model, 1, .))``.
    """
    _check_chart(model, z)
    z = np.asarray(z, dtype=complex)
    if model.kind == HYPERBOLIC_GAMMA2:
        return degree / (2.0 * math.pi * np.imag(z) ** 2)
    s = np.abs(z) ** 2
    fs = 1.0 / (math.pi * (1.0 + s) ** 2)
    if model.kind == FUBINI_STUDY:
        return degree * fs
    return degree * (fs - model.delta / (2.0 * math.pi)
                     * _loglog_laplacian(model, s))


# ---------------------------------------------------------------------------
# regions

@dataclass(frozen=True)
class Region:
    """An axis-aligned box or an annulus in a chart."""

    chart: str
    shape: str  # "box" | "annulus"
    bounds: tuple  # box: (xmin, xmax, ymin, ymax); annulus: (cx, cy, rmin, rmax)

    def __post_init__(self):
        if self.shape == "box":
            xmin, xmax, ymin, ymax = self.bounds
            if not (xmin < xmax and ymin < ymax):
                raise ModelConstructionError("box has empty interior")
            if self.chart == UPPER_HALF_PLANE and ymin <= 0:
                raise ModelConstructionError("box must lie in the upper half plane")
        elif self.shape == "annulus":
            _, _, rmin, rmax = self.bounds
            if not (0 <= rmin < rmax):
                raise ModelConstructionError("annulus has empty interior")
        else:
            raise ModelConstructionError(f"unknown region shape {self.shape!r}")

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.shape == "box":
            xmin, xmax, ymin, ymax = self.bounds
            return ((z.real >= xmin) & (z.real <= xmax)
                    & (z.imag >= ymin) & (z.imag <= ymax))
        cx, cy, rmin, rmax = self.bounds
        r = np.abs(z - (cx + 1j * cy))
        return (r >= rmin) & (r <= rmax)


def box(xmin, xmax, ymin, ymax, chart: str = PLANE) -> Region:
    return Region(chart=chart, shape="box", bounds=(xmin, xmax, ymin, ymax))


def disk(center: complex, radius: float, chart: str = PLANE) -> Region:
    return Region(chart=chart, shape="annulus",
                  bounds=(center.real, center.imag, 0.0, radius))


def annulus(center: complex, rmin: float, rmax: float, chart: str = PLANE) -> Region:
    return Region(chart=chart, shape="annulus",
                  bounds=(center.real, center.imag, rmin, rmax))


def predicted_mass(model: WeightModel, region: Region | None,
                   rel_tol: float = 1e-8) -> float:
    """Integral of the curvature density over the region.

    For the hyperbolic model this is the hyperbolic volume divided by 2*pi.
    ``region=None`` is treated as the empty region.
    """
    if region is None:
        return 0.0

    def f(x, y):
        return float(np.real(curvature_density(model, complex(x, y))))

    if region.shape == "box":
        xmin, xmax, ymin, ymax = region.bounds
        val, err = integrate.dblquad(lambda y, x: f(x, y), xmin, xmax,
                                     ymin, ymax, epsabs=0, epsrel=rel_tol)
    else:
        cx, cy, rmin, rmax = region.bounds

        def fr(theta, r):
            z = complex(cx + r * math.cos(theta), cy + r * math.sin(theta))
            return float(np.real(curvature_density(model, z))) * r

        val, err = integrate.dblquad(fr, rmin, rmax, 0.0, 2.0 * math.pi,
                                     epsabs=0, epsrel=rel_tol)
    if val != 0 and err > 100 * rel_tol * abs(val) + 1e-14:
        raise QuadratureError("predicted_mass quadrature did not converge",
                              achieved=err / max(abs(val), 1e-300))
    return val


# ---------------------------------------------------------------------------
# test forms

@dataclass(frozen=True)
class TestForm:
    """Cubic bump ``amp*(1 - |z-c|^2/r^2)^3`` supported on a disk.

    The three-fold vanishing at the boundary makes the bump C^2; the stored
    ``c2_norm`` is an analytic upper bound for the C^2 norm, so no numerical
    differentiation of test forms is ever needed.
    """

    center: complex
    radius: float
    amplitude: float = 1.0
    c2_norm: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.radius <= 0 or self.amplitude <= 0:
            raise ModelConstructionError("test form needs positive radius and amplitude")
        bound = max(1.0, _BUMP_GRAD_CONST / self.radius,
                    _BUMP_HESS_CONST / self.radius ** 2)
        object.__setattr__(self, "c2_norm", self.amplitude * bound)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        t = np.abs(z - self.center) ** 2 / self.radius ** 2
        return self.amplitude * np.clip(1.0 - t, 0.0, None) ** 3

    def scaled(self, c: float) -> "TestForm":
        return TestForm(center=self.center, radius=self.radius,
                        amplitude=self.amplitude * c)

    @property
    def support(self) -> Region:
        return disk(self.center, self.radius)

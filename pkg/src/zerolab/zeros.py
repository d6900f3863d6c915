"""Zero extraction for holomorphic sections.

Two extraction methods live here.  Polynomial sections are handled globally
by Aberth-Ehrlich simultaneous iteration (companion-matrix eigenvalues as a
low-degree fallback).  Arbitrary sections - in practice cusp forms, and
polynomials when cross-checking - are counted inside rectangles by the
argument principle, accumulating the continuous phase of the section along
the boundary rather than integrating f'/f, which would need separate
derivative expansions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import BoundaryZeroError, DomainError, NonConvergenceError

ROOTS = "ROOTS"
ARGUMENT_PRINCIPLE = "ARGUMENT_PRINCIPLE"

CLUSTER_TOL = 1e-7  # relative distance below which roots merge
_SPLIT = 0.53819149  # off-center box split fraction


@dataclass(frozen=True)
class Zero:
    location: complex
    multiplicity: int
    residual: float


@dataclass
class ZeroSet:
    points: list
    region: geometry.Region
    method: str
    total_count: int

    def __post_init__(self):
        if self.total_count != sum(p.multiplicity for p in self.points):
            raise DomainError("total_count does not match multiplicities")

    def locations(self) -> np.ndarray:
        return np.array([p.location for p in self.points], dtype=complex)

    def multiplicities(self) -> np.ndarray:
        return np.array([p.multiplicity for p in self.points], dtype=int)

    def count_in(self, region: geometry.Region) -> int:
        if not self.points:
            return 0
        inside = region.contains(self.locations())
        return int(np.sum(self.multiplicities()[inside]))

    # -- serialization ------------------------------------------------------

    def to_csv(self) -> str:
        lines = ["re,im,multiplicity,residual"]
        for p in self.points:
            lines.append(f"{p.location.real:.17g},{p.location.imag:.17g},"
                         f"{p.multiplicity},{p.residual:.17g}")
        return "\r\n".join(lines) + "\r\n"

    def to_json(self) -> str:
        return json.dumps({
            "method": self.method,
            "region": {"chart": self.region.chart,
                       "shape": self.region.shape,
                       "bounds": list(self.region.bounds)},
            "total_count": self.total_count,
            "cluster_tol": CLUSTER_TOL,
            "points": [[p.location.real, p.location.imag, p.multiplicity,
                        p.residual] for p in self.points],
        })


# ---------------------------------------------------------------------------
# polynomial roots

def _poly_val(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    return np.polynomial.polynomial.polyval(z, coeffs)


def _balanced(phases: np.ndarray, logmag: np.ndarray):
    """Monic balanced coefficients from a log-magnitude representation.

    Substituting z = s*w with log s = max_k (log|a_k/a_d|)/(deg-k) makes
    every scaled coefficient magnitude <= 1 with the leading one exactly 1.
    Only usable when the coefficient spread fits in doubles; the weighted
    model needs the log-space iteration below instead.  Returns (b, log_s).
    """
    deg = len(logmag) - 1
    la = logmag - logmag[-1]
    ks = np.arange(deg)
    finite = np.isfinite(la[:deg])
    if np.any(finite):
        log_s = float(np.max(la[:deg][finite] / (deg - ks[finite])))
    else:
        log_s = 0.0
    lb = la + (np.arange(deg + 1) - deg) * log_s
    return phases * np.exp(lb), log_s


def _newton_polygon_radii(logmag: np.ndarray) -> np.ndarray:
    """Per-root initial magnitudes from the Newton polygon.

    The upper convex hull of (k, log|a_k|) assigns, for each hull segment
    from (k1, l1) to (k2, l2), k2 - k1 roots of magnitude about
    exp((l1 - l2)/(k2 - k1)).  Assumes a_0 and the leading coefficient are
    nonzero (origin roots are deflated before this is called).
    """
    deg = len(logmag) - 1
    hull = []
    for p in [(k, lm) for k, lm in enumerate(logmag) if np.isfinite(lm)]:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (p[0] - x1) <= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    radii = np.empty(deg)
    for (k1, l1), (k2, l2) in zip(hull, hull[1:]):
        radii[k1:k2] = math.exp((l1 - l2) / (k2 - k1))
    return radii


def _log_poly_terms(phases, logmag, k, w):
    """Scaled term matrix exp(t - max) e^{i k arg w} and the max exponents."""
    logw = np.log(np.maximum(np.abs(w), 1e-300))
    t = logmag[:, None] + k[:, None] * logw[None, :]
    m = np.max(t, axis=0)
    ew = phases[:, None] * np.exp(t - m[None, :]
                                  + 1j * k[:, None] * np.angle(w)[None, :])
    return ew, m


def _aberth_log(phases: np.ndarray, logmag: np.ndarray, max_iter: int = 400):
    """Aberth-Ehrlich on a polynomial given by coefficient phases and log
    magnitudes, with all evaluations in log space.

    The monomial normalizations of the weighted models spread the
    coefficients over hundreds of e-folds, so no single float rescaling can
    represent the polynomial; every Newton ratio here is formed from
    per-point renormalized term sums.  Initial guesses take their moduli
    from the Newton polygon.  Returns (roots, converged mask, relative
    backward errors).
    """
    deg = len(logmag) - 1
    k = np.arange(deg + 1, dtype=float)
    with np.errstate(divide="ignore"):
        lk = np.log(k)
    la_d = logmag + lk  # coefficients of the derivative, shifted down one

    radii = _newton_polygon_radii(logmag)
    ang = 2.0 * math.pi * (np.arange(deg) + 0.5) / deg + 0.4
    w = radii * np.exp(1j * ang)
    done = np.zeros(deg, dtype=bool)
    resid = np.full(deg, np.inf)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(max_iter):
            act = np.nonzero(~done)[0]  # converged roots stay as repellers
            wa = w[act]
            ew, m = _log_poly_terms(phases, logmag, k, wa)
            p_rel = np.sum(ew, axis=0)
            resid[act] = np.abs(p_rel) / np.sum(np.abs(ew), axis=0)
            ed, m2 = _log_poly_terms(phases, la_d, k - 1.0, wa)
            d_rel = np.sum(ed, axis=0)
            newton = np.where(d_rel != 0,
                              np.exp(m - m2) * p_rel / d_rel, 0.0)
            diff = wa[:, None] - w[None, :]
            diff[np.arange(len(act)), act] = np.inf
            sigma = np.sum(1.0 / diff, axis=1)
            denom = 1.0 - newton * sigma
            step = np.where(np.abs(denom) > 1e-30, newton / denom, newton)
            step = np.where(np.isfinite(step), step, 0.0)
            w[act] = wa - step
            done[act] |= np.abs(step) <= 1e-15 * np.abs(w[act])
            done[act] |= resid[act] <= 1e-14  # backward error at rounding
            if np.all(done):
                break
    done |= resid <= 1e-11  # stalled iterate sitting on a root
    done &= np.isfinite(w)
    return w, done, resid


def _merge_clusters(roots: np.ndarray, residuals: np.ndarray):
    """Greedy merge of roots closer than CLUSTER_TOL x local scale."""
    order = np.lexsort((roots.imag, roots.real))
    merged = []  # [sum, count, max residual]
    for idx in order:
        z, r = roots[idx], residuals[idx]
        placed = False
        for m in merged:
            c = m[0] / m[1]
            if abs(z - c) < CLUSTER_TOL * max(1.0, abs(c)):
                m[0] += z
                m[1] += 1
                m[2] = max(m[2], r)
                placed = True
                break
        if not placed:
            merged.append([z, 1, r])
    return [Zero(location=m[0] / m[1], multiplicity=m[1], residual=m[2])
            for m in merged]


def poly_roots(section) -> ZeroSet:
    """Global zero set of a polynomial-model section.

    Residuals are relative backward errors: |sum of terms| over the sum of
    term magnitudes at the root.
    """
    phases, logmag = section.space.monomial_log_coefficients(section.coeffs)
    while len(logmag) > 1 and not np.isfinite(logmag[-1]):
        phases, logmag = phases[:-1], logmag[:-1]
    deg = len(logmag) - 1
    if deg == 0:
        region = geometry.box(-1.0, 1.0, -1.0, 1.0)
        return ZeroSet(points=[], region=region, method=ROOTS, total_count=0)

    # roots at the origin show up as vanishing low-order coefficients
    m0 = int(np.argmax(np.isfinite(logmag)))
    phases, logmag = phases[m0:], logmag[m0:]

    if len(logmag) > 1:
        w, ok, resid = _aberth_log(phases, logmag)
        if not np.all(ok):
            b, log_s = _balanced(phases, logmag)
            # the float fallback is only trustworthy when no coefficient
            # underflows in the balanced representation
            faithful = bool(np.all((np.abs(b) > 0)
                                   == np.isfinite(logmag)))
            if len(logmag) - 1 <= 64 and faithful:
                w = math.exp(log_s) \
                    * np.polynomial.polynomial.polyroots(b)
                k = np.arange(len(logmag), dtype=float)
                ew, _ = _log_poly_terms(phases, logmag, k, w)
                resid = np.abs(np.sum(ew, axis=0)) \
                    / np.sum(np.abs(ew), axis=0)
            else:
                raise NonConvergenceError(
                    f"{int(np.sum(~ok))} roots unconverged at degree {deg}",
                    indices=list(np.nonzero(~ok)[0]))
        roots = np.concatenate([np.zeros(m0, dtype=complex), w])
        residuals = np.concatenate([np.zeros(m0), resid])
    else:
        roots = np.zeros(m0, dtype=complex)
        residuals = np.zeros(m0)
    points = _merge_clusters(roots, residuals)
    lim = float(np.max(np.abs(roots))) + 1.0
    lim = max(lim, 3.0)
    region = geometry.box(-lim, lim, -lim, lim)
    return ZeroSet(points=points, region=region, method=ROOTS,
                   total_count=deg)


# ---------------------------------------------------------------------------
# argument-principle box counting

def _section_callable(section):
    if callable(section):
        return section
    return section.values


def _phase_around(f, corners, tol, n0=13, max_halvings=40):
    """Total continuous phase increment of f around a closed polyline.

    Each edge is refined by bisection until consecutive phase steps are
    below pi/2, which guarantees no winding is missed on analytic arcs.
    A zero on (or numerically hugging) the contour shows up either as an
    exact zero value or as a midpoint dipping far below its neighbors;
    both raise BoundaryZeroError so the caller can subdivide the box.
    """
    def arg_ratio(u, v):
        r = v / u
        return math.atan2(r.imag, r.real)

    total = 0.0
    for k in range(len(corners)):
        z0, z1 = corners[k], corners[(k + 1) % len(corners)]
        t = np.linspace(0.0, 1.0, n0 + 1)
        pts = z0 + (z1 - z0) * t
        vals = f(pts)
        stack = [(pts[i], pts[i + 1], complex(vals[i]), complex(vals[i + 1]), 0)
                 for i in range(n0 - 1, -1, -1)]
        while stack:
            a, b2, fa, fb, depth = stack.pop()
            if fa == 0 or fb == 0:
                raise BoundaryZeroError(
                    f"f vanishes on segment [{a:.6g}, {b2:.6g}]")
            mid = 0.5 * (a + b2)
            fm = complex(f(np.array([mid]))[0])
            if fm == 0 or abs(fm) <= tol * max(abs(fa), abs(fb)):
                raise BoundaryZeroError(
                    f"|f| dips below {tol:.1e} x local scale near {mid:.6g}")
            s1 = arg_ratio(fa, fm)
            s2 = arg_ratio(fm, fb)
            # accept only when the two half-steps confirm each other; a
            # single two-point step below pi/2 can alias a fast winding
            if abs(s1) + abs(s2) < 0.5 * math.pi:
                total += s1 + s2
                continue
            if depth >= max_halvings:
                raise BoundaryZeroError(
                    f"phase step not resolving on segment [{a:.6g}, {b2:.6g}]")
            # keep orientation: process (a,mid) then (mid,b)
            stack.append((mid, b2, fm, fb, depth + 1))
            stack.append((a, mid, fa, fm, depth + 1))
    return total


def count_zeros_box(section, box, tol: float = 1e-9,
                    winding_hint: int | None = None, _depth: int = 0) -> int:
    """Number of zeros (with multiplicity) inside an axis-aligned box.

    ``box`` is a box Region or a (xmin, xmax, ymin, ymax) tuple.  When the
    boundary passes too close to a zero the box is quartered (depth <= 12)
    and the counts summed.

    ``winding_hint`` bounds the zero count inside the box; the boundary is
    initially sampled finely enough (an odd number of segments per edge,
    so monomial symmetries cannot alias) that a winding of that size
    cannot slip through the pi/2 phase-step test.  When the section comes
    from a SectionSpace the space dimension is used automatically.
    """
    f = _section_callable(section)
    if winding_hint is None:
        winding_hint = getattr(getattr(section, "space", None), "dim", 4)
    n0 = max(13, 2 * winding_hint + 5)
    n0 += 1 - n0 % 2
    if isinstance(box, geometry.Region):
        if box.shape != "box":
            raise DomainError("argument-principle counting needs a box region")
        x0, x1, y0, y1 = box.bounds
    else:
        x0, x1, y0, y1 = box
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1),
               complex(x0, y1)]
    try:
        total = _phase_around(f, corners, tol, n0=n0)
        n = total / (2.0 * math.pi)
        count = int(round(n))
        if abs(n - count) > 1e-6 or count < 0:
            raise BoundaryZeroError(
                f"winding number {n:.8f} is not a nonnegative integer")
    except BoundaryZeroError:
        if _depth >= 12:
            raise
        # split slightly off center so a zero sitting exactly on a split
        # point cannot stay on the boundary at every depth
        xm = x0 + _SPLIT * (x1 - x0)
        ym = y0 + _SPLIT * (y1 - y0)
        return sum(count_zeros_box(f, sub, tol, winding_hint, _depth + 1)
                   for sub in ((x0, xm, y0, ym), (xm, x1, y0, ym),
                               (x0, xm, ym, y1), (xm, x1, ym, y1)))
    return count


# ---------------------------------------------------------------------------
# hyperbolic zero sets

def _localize(f, box_bounds, tol, hint, diameter_tol=1e-4):
    """Refine a counted box until each zero cluster has small diameter."""
    x0, x1, y0, y1 = box_bounds
    count = count_zeros_box(f, box_bounds, tol, winding_hint=hint)
    if count == 0:
        return []
    diam = math.hypot(x1 - x0, y1 - y0)
    if diam < diameter_tol:
        center = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        return [Zero(location=center, multiplicity=count, residual=diam)]
    xm = x0 + _SPLIT * (x1 - x0)
    ym = y0 + _SPLIT * (y1 - y0)
    out = []
    found = 0
    for sub in ((x0, xm, y0, ym), (xm, x1, y0, ym),
                (x0, xm, ym, y1), (xm, x1, ym, y1)):
        # children cannot hold more zeros than this box: shrink the hint so
        # deep refinement stops oversampling tiny boundaries
        sub_zeros = _localize(f, sub, tol, min(hint, count), diameter_tol)
        found += sum(z.multiplicity for z in sub_zeros)
        out.extend(sub_zeros)
    if found != count:
        raise BoundaryZeroError(
            f"lost zeros while refining box {box_bounds}: {found} != {count}")
    return out


def zero_set_hyperbolic(section, region: geometry.Region | None,
                        grid_depth: int = 3, tol: float = 1e-9) -> ZeroSet:
    """Zeros of a cusp-form section inside a box region of the upper half
    plane, localized to diameter < 1e-4 by argument-principle refinement."""
    if region is None:
        return ZeroSet(points=[], method=ARGUMENT_PRINCIPLE, total_count=0,
                       region=geometry.box(0.0, 1.0, 0.5, 1.5,
                                           chart=geometry.UPPER_HALF_PLANE))
    if region.shape != "box":
        raise DomainError("hyperbolic zero search needs a box region")
    model = section.space.model
    if region.bounds[2] < model.cusp_height:
        raise DomainError(
            f"region dips below the cusp height {model.cusp_height}")
    f = _section_callable(section)
    hint = getattr(getattr(section, "space", None), "dim", 4)
    x0, x1, y0, y1 = region.bounds
    n = 2 ** grid_depth
    points = []
    for i in range(n):
        for j in range(n):
            sub = (x0 + (x1 - x0) * i / n, x0 + (x1 - x0) * (i + 1) / n,
                   y0 + (y1 - y0) * j / n, y0 + (y1 - y0) * (j + 1) / n)
            points.extend(_localize(f, sub, tol, hint))
    points.sort(key=lambda p: (p.location.real, p.location.imag))
    return ZeroSet(points=points, region=region, method=ARGUMENT_PRINCIPLE,
                   total_count=sum(p.multiplicity for p in points))


def _in_fundamental_domain(z: np.ndarray, y0: float) -> np.ndarray:
    """Membership in the truncated fundamental domain of the theta group.

    Interior: |Re| < 1, |2 tau +- 1| > 1; truncation removes the horoball
    y' > 1/y0 at each of the cusps 0, +-1 and caps the strip at y = 1/y0.
    """
    x, y = z.real, z.imag
    inside = (np.abs(x) < 1.0) & (np.abs(2 * z - 1) > 1.0) \
        & (np.abs(2 * z + 1) > 1.0) & (y < 1.0 / y0)
    for cusp in (0.0, 1.0, -1.0):
        # horoball at the cusp of height 1/y0: disk of radius y0/2
        inside &= np.abs(z - (cusp + 0.5j * y0)) > 0.5 * y0
    return inside


def fundamental_domain_zeros(section, y0: float | None = None,
                             grid_depth: int = 3, tol: float = 1e-9) -> ZeroSet:
    """Interior zeros of a cusp form in the truncated fundamental domain.

    Counts zeros inside a covering box of the domain and keeps those whose
    localized centers lie in the truncated domain.  The top height is the
    horoball cut 1/y0, above which generic forms have no zeros anyway.
    """
    model = section.space.model
    if y0 is None:
        y0 = model.cusp_height
    y_top = 1.0 / y0
    cover = geometry.box(-1.0, 1.0, y0, y_top,
                         chart=geometry.UPPER_HALF_PLANE)
    full = zero_set_hyperbolic(section, cover, grid_depth=grid_depth, tol=tol)
    kept = [p for p in full.points
            if bool(_in_fundamental_domain(np.array([p.location]), y0)[0])]
    return ZeroSet(points=kept, region=cover, method=ARGUMENT_PRINCIPLE,
                   total_count=sum(p.multiplicity for p in kept))

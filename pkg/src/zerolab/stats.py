"""Equidistribution statistics for zero sets.

A zero set is paired against C^2 bump test forms; the empirical pairing
``(1/N) * sum multiplicity * phi(zero)`` is compared with the predicted mass
``int phi * curvature_density``.  Ensembles of random sections produce
discrepancy records, which feed a log-log rate fit and an exceptional-set
frequency count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry, zeros
from .errors import DomainError, ZerolabError
from ._quad import disk_integral
from .spaces import SectionSpace, sample_section, sample_seed

_EPS_FLOOR = float(np.finfo(float).eps)


@dataclass(frozen=True)
class DiscrepancyRecord:
    model: str
    N: int
    sample_id: int
    testform_id: int
    empirical: float
    predicted: float
    discrepancy: float
    c2_norm: float
    seed: int


# ---------------------------------------------------------------------------
# pairings

def _support_in_region(support: geometry.Region, region: geometry.Region):
    """The bump support is a disk; check it sits inside the region."""
    cx, cy, _, r = support.bounds
    if region.shape == "box":
        xmin, xmax, ymin, ymax = region.bounds
        ok = (cx - r >= xmin and cx + r <= xmax
              and cy - r >= ymin and cy + r <= ymax)
    else:
        rcx, rcy, rmin, rmax = region.bounds
        d = math.hypot(cx - rcx, cy - rcy)
        ok = d + r <= rmax and d - r >= rmin
    if not ok:
        raise DomainError(
            f"test-form support (disk of radius {r} at {cx}+{cy}i) is not "
            f"contained in the zero-set region {region.bounds}")


def pair_empirical(zeroset: zeros.ZeroSet, testform: geometry.TestForm,
                   N: int) -> float:
    """(1/N) * sum over zeros of multiplicity * phi(location)."""
    _support_in_region(testform.support, zeroset.region)
    if not zeroset.points:
        return 0.0
    vals = testform(zeroset.locations())
    return float(np.sum(zeroset.multiplicities() * vals)) / N


def pair_predicted(model: geometry.WeightModel, testform: geometry.TestForm,
                   rel_tol: float = 1e-8) -> float:
    """Integral of phi against the degree-1 curvature density."""
    center = testform.center
    if model.chart == geometry.UPPER_HALF_PLANE \
            and center.imag <= testform.radius:
        raise DomainError("test-form support leaves the upper half plane")

    def f(z):
        return np.real(geometry.curvature_density(model, z)) * testform(z)

    return disk_integral(f, center, testform.radius, rel_tol=rel_tol)


def bump_dictionary(centers, radii) -> list:
    """Product dictionary of bump test forms (len(centers)*len(radii))."""
    return [geometry.TestForm(center=complex(c), radius=float(r))
            for c in centers for r in radii]


def default_dictionary(model: geometry.WeightModel) -> list:
    """The 12-bump dictionary (3 centers x 4 radii) used by the experiments."""
    if model.chart == geometry.UPPER_HALF_PLANE:
        centers = [0.0 + 0.9j, -0.3 + 1.1j, 0.35 + 0.75j]
        radii = [0.12, 0.2, 0.28, 0.35]
    else:
        centers = [0.0, 0.9, -0.45 + 0.78j]
        radii = [0.35, 0.55, 0.75, 0.95]
    return bump_dictionary(centers, radii)


# ---------------------------------------------------------------------------
# ensembles

@dataclass
class EnsembleResult:
    records: list
    failures: list  # (sample_id, message)

    @property
    def failed_count(self) -> int:
        return len(self.failures)


def _one_sample(space: SectionSpace, testforms, predicted, region,
                master_seed: int, index: int):
    seed = sample_seed(master_seed, space.degree, index)
    section = sample_section(space, seed)
    n = space.degree
    if space.model.chart == geometry.UPPER_HALF_PLANE:
        zs = zeros.zero_set_hyperbolic(section, region)
    else:
        zs = zeros.poly_roots(section)
    recs = []
    for tid, (phi, pred) in enumerate(zip(testforms, predicted)):
        emp = pair_empirical(zs, phi, n)
        recs.append(DiscrepancyRecord(
            model=space.model.kind, N=n, sample_id=index, testform_id=tid,
            empirical=emp, predicted=pred, discrepancy=emp - pred,
            c2_norm=phi.c2_norm, seed=seed))
    return recs


def _one_sample_safe(args):
    space, testforms, predicted, region, master_seed, index = args
    try:
        return index, _one_sample(space, testforms, predicted, region,
                                  master_seed, index), None
    except ZerolabError as exc:
        return index, None, f"{type(exc).__name__}: {exc}"


def ensemble_discrepancy(space: SectionSpace, testforms, M: int, seed: int,
                         workers: int = 1,
                         region: geometry.Region | None = None) -> EnsembleResult:
    """Discrepancy records for M independent sections.

    Per-sample seeds are derived from (seed, degree, sample index), so the
    output is a pure function of the arguments: scheduling and the worker
    count cannot change any record.  Failed samples are excluded and
    reported in ``failures``.
    """
    if M < 1:
        raise DomainError("need at least one sample")
    if space.model.chart == geometry.UPPER_HALF_PLANE and region is None:
        raise DomainError("hyperbolic ensembles need an explicit box region")
    predicted = [pair_predicted(space.model, phi) for phi in testforms]
    tasks = [(space, testforms, predicted, region, seed, i) for i in range(M)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_one_sample_safe, tasks,
                                chunksize=max(1, M // (4 * workers))))
    else:
        raw = [_one_sample_safe(t) for t in tasks]
    raw.sort(key=lambda r: r[0])
    records, failures = [], []
    for index, recs, err in raw:
        if err is None:
            records.extend(recs)
        else:
            failures.append((index, err))
    return EnsembleResult(records=records, failures=failures)


def records_to_csv(records) -> str:
    lines = ["model,N,sample_id,testform_id,empirical,predicted,"
             "discrepancy,c2_norm,seed"]
    for r in records:
        lines.append(f"{r.model},{r.N},{r.sample_id},{r.testform_id},"
                     f"{r.empirical:.17g},{r.predicted:.17g},"
                     f"{r.discrepancy:.17g},{r.c2_norm:.17g},{r.seed}")
    return "\r\n".join(lines) + "\r\n"


# ---------------------------------------------------------------------------
# rate fits

@dataclass
class RateFit:
    N_list: list
    statistic: np.ndarray       # per-N statistic used for the fit
    mean_statistic: np.ndarray  # reported alongside
    slope: float
    intercept: float
    residuals: np.ndarray
    normalized: np.ndarray      # N * statistic / log N
    floored: bool = False       # nonpositive statistics replaced by eps

    def to_json(self) -> str:
        return json.dumps({
            "N_list": list(map(int, self.N_list)),
            "statistic": self.statistic.tolist(),
            "mean_statistic": self.mean_statistic.tolist(),
            "slope": self.slope,
            "intercept": self.intercept,
            "residuals": self.residuals.tolist(),
            "normalized": self.normalized.tolist(),
            "floored": self.floored,
        })


def rate_fit(N_list, stats, mean_stats=None) -> RateFit:
    """Least-squares log-log fit of a per-N statistic."""
    N_list = list(N_list)
    if len(N_list) < 3 or any(a >= b for a, b in zip(N_list, N_list[1:])):
        raise DomainError("rate fit needs >= 3 strictly increasing degrees")
    stats = np.asarray(stats, dtype=float)
    floored = bool(np.any(stats <= 0))
    stats = np.maximum(stats, _EPS_FLOOR)
    x = np.log(np.array(N_list, dtype=float))
    y = np.log(stats)
    design = np.stack([x, np.ones_like(x)], axis=1)
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = design @ coef - y
    if mean_stats is None:
        mean_stats = stats
    return RateFit(
        N_list=N_list, statistic=stats,
        mean_statistic=np.asarray(mean_stats, dtype=float),
        slope=float(coef[0]), intercept=float(coef[1]), residuals=resid,
        normalized=np.array(N_list) * stats / np.log(N_list), floored=floored)


def normalized_discrepancies(records) -> dict:
    """Per-N arrays of |discrepancy| / C2-norm, one entry per record."""
    out = {}
    for r in records:
        out.setdefault(r.N, []).append(abs(r.discrepancy) / r.c2_norm)
    return {n: np.array(v) for n, v in sorted(out.items())}


def ensemble_rate_fit(records) -> RateFit:
    """Rate fit of the median normalized discrepancy across an ensemble.

    The median (over samples and the test-form dictionary) is robust to the
    exceptional set; the mean is carried along for reporting.
    """
    groups = normalized_discrepancies(records)
    ns = sorted(groups)
    med = [float(np.median(groups[n])) for n in ns]
    mean = [float(np.mean(groups[n])) for n in ns]
    return rate_fit(ns, med, mean_stats=mean)


def exceptional_fraction(records, lambda_of_N) -> dict:
    """Per-N fraction of samples whose worst normalized discrepancy over the
    dictionary exceeds lambda_N / N.

    ``lambda_of_N`` is a callable N -> lambda_N (or a mapping).
    """
    lam = lambda_of_N if callable(lambda_of_N) else lambda_of_N.__getitem__
    worst = {}
    for r in records:
        key = (r.N, r.sample_id)
        v = abs(r.discrepancy) / r.c2_norm
        worst[key] = max(worst.get(key, 0.0), v)
    counts, hits = {}, {}
    for (n, _), v in worst.items():
        counts[n] = counts.get(n, 0) + 1
        hits[n] = hits.get(n, 0) + (1 if v > lam(n) / n else 0)
    return {n: hits[n] / counts[n] for n in sorted(counts)}


def default_lambda(N: int) -> float:
    """The growth lambda_N = (log N)^1.1 used in the reports."""
    return math.log(N) ** 1.1

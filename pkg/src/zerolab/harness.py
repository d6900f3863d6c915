"""Experiment orchestration: configs, caching, persistence.

A single JSON document describes an experiment (model, degrees, sample
count, seed, region, test-form dictionary, tolerances, output locations).
Every run writes into ``<outdir>/<confighash>/``; the hash covers all
numerically relevant keys, so results can never be silently mixed across
configurations, and Gram-matrix caches keyed the same way are safe to
reuse.  Given the config and master seed, every output byte except timings
is reproducible, independent of the worker count.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bergman, geometry, stats, zeros
from .errors import ConfigError, ZerolabError
from .spaces import SectionSpace, build_space, sample_section, sample_seed

_MODEL_KINDS = (geometry.FUBINI_STUDY, geometry.POINCARE_WEIGHTED,
                geometry.HYPERBOLIC_GAMMA2)

_DEFAULT_TOLERANCES = {
    "quadrature": 1e-11,
    "root_residual": 1e-9,
    "q_tail": 1e-3,
}


@dataclass
class ExperimentConfig:
    model: dict
    N_list: list
    samples: int
    master_seed: int
    region: dict | None = None
    testforms: dict | None = None
    tolerances: dict = field(default_factory=lambda: dict(_DEFAULT_TOLERANCES))
    outdir: str = "runs"
    workers: int = 1

    # -- construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        missing = {"model", "N_list", "samples", "master_seed"} - set(d)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}")
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    # -- validation ---------------------------------------------------------

    def validate(self):
        if not isinstance(self.model, dict) or "kind" not in self.model:
            raise ConfigError("model must be an object with a 'kind'")
        if self.model["kind"] not in _MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.model['kind']!r}")
        try:
            self.build_model()
        except ZerolabError as exc:
            raise ConfigError(f"invalid model parameters: {exc}")
        if not self.N_list:
            raise ConfigError("N_list must be nonempty")
        if any(int(n) != n or n < 1 for n in self.N_list):
            raise ConfigError("N_list entries must be positive integers")
        if any(a >= b for a, b in zip(self.N_list, self.N_list[1:])):
            raise ConfigError("N_list must be strictly increasing")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigError("master_seed must fit in 64 bits")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for key, val in self.tolerances.items():
            if key not in _DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {key!r}")
            if not val > 0:
                raise ConfigError(f"tolerance {key!r} must be positive")
        model = self.build_model()
        region = self.build_region()
        if region is not None and region.chart != model.chart:
            raise ConfigError("region chart does not match the model chart")
        if model.kind == geometry.HYPERBOLIC_GAMMA2:
            if region is None:
                raise ConfigError("the hyperbolic model needs a box region")
            if region.shape != "box":
                raise ConfigError("hyperbolic regions must be boxes")
            if region.bounds[2] < model.cusp_height:
                raise ConfigError(
                    f"region dips below the cusp height {model.cusp_height}")
        self.build_testforms()  # raises on bad dictionary parameters

    # -- derived objects ----------------------------------------------------

    def build_model(self) -> geometry.WeightModel:
        p = self.model
        kind = p["kind"]
        if kind == geometry.FUBINI_STUDY:
            return geometry.fubini_study()
        if kind == geometry.POINCARE_WEIGHTED:
            return geometry.poincare_weighted(
                p.get("epsilon", 0.05), p.get("delta"), p.get("offset"))
        return geometry.hyperbolic_gamma2(p.get("cusp_height", 0.25))

    def build_region(self) -> geometry.Region | None:
        if self.region is None:
            return None
        r = self.region
        try:
            return geometry.Region(chart=r["chart"], shape=r["shape"],
                                   bounds=tuple(r["bounds"]))
        except (KeyError, TypeError, ValueError, ZerolabError) as exc:
            raise ConfigError(f"invalid region: {exc}")

    def build_testforms(self) -> list:
        model = self.build_model()
        if self.testforms is None:
            return stats.default_dictionary(model)
        try:
            centers = [complex(c[0], c[1]) for c in self.testforms["centers"]]
            radii = [float(r) for r in self.testforms["radii"]]
            return stats.bump_dictionary(centers, radii)
        except (KeyError, TypeError, IndexError, ZerolabError) as exc:
            raise ConfigError(f"invalid test-form dictionary: {exc}")

    # -- hashing and overrides ----------------------------------------------

    def config_hash(self) -> str:
        """Hash of the numerically relevant keys (not outdir or workers)."""
        d = self.to_dict()
        d.pop("outdir")
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_overrides(self, assignments) -> "ExperimentConfig":
        """Apply dotted-path overrides like ``model.epsilon=0.1``."""
        d = self.to_dict()
        for text in assignments:
            if "=" not in text:
                raise ConfigError(f"override {text!r} is not key=value")
            path, raw = text.split("=", 1)
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            node = d
            keys = path.split(".")
            for k in keys[:-1]:
                if not isinstance(node.get(k), dict):
                    node[k] = {}
                node = node[k]
            node[keys[-1]] = value
        return ExperimentConfig.from_dict(d)


# ---------------------------------------------------------------------------
# run records and artifact handling

@dataclass
class RunRecord:
    config_hash: str
    outdir: str
    files: list
    timings: dict
    failures: list
    cache_hits: dict  # degree -> bool

    def to_json(self) -> str:
        return json.dumps({
            "config_hash": self.config_hash,
            "outdir": self.outdir,
            "files": self.files,
            "timings": self.timings,
            "failures": self.failures,
            "cache_hits": {str(k): v for k, v in self.cache_hits.items()},
        }, indent=2, sort_keys=True)


def _write(path: Path, text: str, config_hash: str, files: list):
    """Write an artifact with the config hash on a leading pragma line."""
    if path.suffix == ".json":
        body = text
    else:
        body = f"# config_hash={config_hash}\r\n" + text
    path.write_text(body)
    files.append(path.name)


class SpaceCache:
    """Disk cache of orthonormalized section spaces, keyed by the model
    parameters, degree and tolerances."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.hits = {}

    def key(self, config: ExperimentConfig, degree: int) -> str:
        blob = json.dumps({"model": config.model, "degree": degree,
                           "tolerances": config.tolerances},
                          sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def get(self, config: ExperimentConfig, degree: int) -> SectionSpace:
        path = self.root / f"space_{self.key(config, degree)}.json"
        if path.exists():
            self.hits[degree] = True
            return SectionSpace.from_json(path.read_text())
        self.hits[degree] = False
        model = config.build_model()
        space = build_space(model, degree,
                            rel_tol=config.tolerances["quadrature"],
                            eval_tail_tol=config.tolerances["q_tail"])
        self.root.mkdir(parents=True, exist_ok=True)
        path.write_text(space.to_json())
        return space


def _prepare(config: ExperimentConfig):
    h = config.config_hash()
    out = Path(config.outdir) / h
    out.mkdir(parents=True, exist_ok=True)
    cache = SpaceCache(Path(config.outdir) / "cache")
    return h, out, cache


# ---------------------------------------------------------------------------
# experiment families

def cmd_equidistribute(config: ExperimentConfig) -> RunRecord:
    """Zero-equidistribution ensemble: discrepancy records, rate fit,
    exceptional-set fractions."""
    h, out, cache = _prepare(config)
    files, timings, failures = [], {}, []
    testforms = config.build_testforms()
    region = config.build_region()
    records = []
    for n in config.N_list:
        t0 = time.perf_counter()
        space = cache.get(config, n)
        timings[f"space_N{n}"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        res = stats.ensemble_discrepancy(
            space, testforms, config.samples, config.master_seed,
            workers=config.workers, region=region)
        timings[f"ensemble_N{n}"] = time.perf_counter() - t0
        records.extend(res.records)
        failures.extend([f"N={n} sample={i}: {msg}"
                         for i, msg in res.failures])
    _write(out / "records.csv", stats.records_to_csv(records), h, files)

    lines = [f"equidistribution run over N = {list(config.N_list)}, "
             f"M = {config.samples}",
             f"failed samples: {len(failures)}"]
    if len(config.N_list) >= 3:
        fit = stats.ensemble_rate_fit(records)
        _write(out / "ratefit.json", fit.to_json(), h, files)
        lines.append(f"median normalized discrepancy log-log slope: "
                     f"{fit.slope:.4f}")
        lines.append("reference: lambda_N/N with lambda_N = (log N)^1.1 "
                     "has slope -> -1")
        for n, s, m in zip(fit.N_list, fit.statistic, fit.mean_statistic):
            ref = stats.default_lambda(n) / n
            lines.append(f"  N={n}: median={s:.6e} mean={m:.6e} "
                         f"lambda_N/N={ref:.6e}")
        frac = stats.exceptional_fraction(records, stats.default_lambda)
        lines.append("exceptional fraction (lambda_N = (log N)^1.1): "
                     + ", ".join(f"N={n}: {f:.3f}"
                                 for n, f in frac.items()))
    _write(out / "summary.txt", "\n".join(lines) + "\n", h, files)
    rec = RunRecord(config_hash=h, outdir=str(out), files=files,
                    timings=timings, failures=failures,
                    cache_hits=dict(cache.hits))
    _finish(out, rec, config, files)
    return rec


def _bergman_grid(config: ExperimentConfig) -> np.ndarray:
    region = config.build_region()
    if region is not None and region.shape == "box":
        xmin, xmax, ymin, ymax = region.bounds
    else:
        xmin, xmax, ymin, ymax = -1.5, 1.5, -1.5, 1.5
    xs = np.linspace(xmin, xmax, 8)
    ys = np.linspace(ymin, ymax, 8)
    return (xs[:, None] + 1j * ys[None, :]).ravel()


def cmd_bergman(config: ExperimentConfig) -> RunRecord:
    """Bergman diagnostics: kernel profiles, trace ratios, leading
    coefficient fit, pullback deviations."""
    if len(config.N_list) < 3:
        raise ConfigError("bergman fits need at least 3 degrees")
    h, out, cache = _prepare(config)
    files, timings, failures = [], {}, []
    model = config.build_model()
    grid = _bergman_grid(config)
    spaces = {}
    csv_lines = ["N,re,im,P_N,logP_N"]
    summary = [f"bergman run over N = {list(config.N_list)}"]
    for n in config.N_list:
        t0 = time.perf_counter()
        spaces[n] = cache.get(config, n)
        timings[f"space_N{n}"] = time.perf_counter() - t0
        prof = bergman.BergmanProfile.compute(spaces[n], grid)
        for z, v, lv in zip(prof.grid, prof.values, prof.log_values):
            csv_lines.append(f"{n},{z.real:.17g},{z.imag:.17g},"
                             f"{v:.17g},{lv:.17g}")
        t0 = time.perf_counter()
        ratio = bergman.trace_check(spaces[n])
        timings[f"trace_N{n}"] = time.perf_counter() - t0
        summary.append(f"  N={n}: trace ratio - 1 = {ratio - 1:.3e}")
    _write(out / "bergman.csv", "\r\n".join(csv_lines) + "\r\n", h, files)

    fit_points = [0.0, 0.5, -0.5 + 0.5j] if model.chart == geometry.PLANE \
        else [complex(np.mean(grid.real), np.mean(grid.imag))]
    for z in fit_points:
        fit = bergman.leading_coeff_fit(model, config.N_list, z,
                                        spaces=spaces)
        summary.append(f"  b0 fit at {z}: {fit.b0:.6f} vs predicted "
                       f"{fit.predicted_b0:.6f} "
                       f"(rel err {fit.relative_error:.2e})")
        n_top = config.N_list[-1]
        dev = abs(bergman.fs_pullback_density(spaces[n_top], z)
                  - float(np.real(geometry.curvature_density(model, z))))
        summary.append(f"  pullback deviation at {z}, N={n_top}: {dev:.3e} "
                       f"(N*dev = {n_top * dev:.3e})")
    _write(out / "summary.txt", "\n".join(summary) + "\n", h, files)
    rec = RunRecord(config_hash=h, outdir=str(out), files=files,
                    timings=timings, failures=failures,
                    cache_hits=dict(cache.hits))
    _finish(out, rec, config, files)
    return rec


def cmd_cuspforms(config: ExperimentConfig) -> RunRecord:
    """Cusp-form zero counting in a region of the upper half plane."""
    model = config.build_model()
    if model.kind != geometry.HYPERBOLIC_GAMMA2:
        raise ConfigError("cuspforms runs need the hyperbolic model")
    h, out, cache = _prepare(config)
    files, timings, failures = [], {}, []
    region = config.build_region()
    predicted = geometry.predicted_mass(model, region)
    csv_lines = ["model,N,sample_id,count,normalized,predicted,seed"]
    summary = [f"cusp-form zero counts in {region.bounds}, "
               f"predicted mass {predicted:.6f}"]
    for n in config.N_list:
        t0 = time.perf_counter()
        space = cache.get(config, n)
        timings[f"space_N{n}"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        means = []
        for i in range(config.samples):
            seed = sample_seed(config.master_seed, n, i)
            try:
                section = sample_section(space, seed)
                # counts only: the boundary walk is far cheaper than
                # localizing every zero
                count = zeros.count_zeros_box(section, region)
            except ZerolabError as exc:
                failures.append(f"N={n} sample={i}: "
                                f"{type(exc).__name__}: {exc}")
                continue
            means.append(count / n)
            csv_lines.append(f"{model.kind},{n},{i},{count},"
                             f"{count / n:.17g},{predicted:.17g},{seed}")
        timings[f"count_N{n}"] = time.perf_counter() - t0
        mean = float(np.mean(means)) if means else float("nan")
        summary.append(f"  N={n}: mean (1/N)count = {mean:.6f}, deviation "
                       f"{abs(mean - predicted):.6f}")
    _write(out / "records.csv", "\r\n".join(csv_lines) + "\r\n", h, files)
    _write(out / "summary.txt", "\n".join(summary) + "\n", h, files)
    rec = RunRecord(config_hash=h, outdir=str(out), files=files,
                    timings=timings, failures=failures,
                    cache_hits=dict(cache.hits))
    _finish(out, rec, config, files)
    return rec


def _finish(out: Path, rec: RunRecord, config: ExperimentConfig, files: list):
    files.append("manifest.json")
    manifest = json.loads(rec.to_json())
    manifest["config"] = config.to_dict()
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True))

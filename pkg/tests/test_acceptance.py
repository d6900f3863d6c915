"""End-to-end quantitative checks for the three geometric models.

Each test pins one advertised property of the laboratory at a stated
tolerance: exact Gram oracles, Bergman constancy and traces, the leading
coefficient of the kernel expansion, pullback convergence rates,
equidistribution of zero ensembles, exceptional-set decay, cusp-form zero
statistics, cross-method zero counting, dimension laws, and bytewise
determinism of the experiment harness.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from zerolab import bergman as B
from zerolab import geometry as G
from zerolab import harness as H
from zerolab import spaces as S
from zerolab import stats as st
from zerolab import zeros as Z
from zerolab.cuspforms import cusp_dim

WORKERS = 8


# ---------------------------------------------------------------------------
# shared fixtures

@pytest.fixture(scope="module")
def pw_spaces():
    """Weighted-model spaces at the ensemble degrees."""
    model = G.poincare_weighted()
    return model, {n: S.build_space(model, n) for n in (25, 50, 100, 200)}


@pytest.fixture(scope="module")
def equi_run(tmp_path_factory):
    """The equidistribution ensemble shared by the rate and determinism
    checks: M = 200 weighted-model samples at each of four degrees."""
    outdir = tmp_path_factory.mktemp("equi")
    cfg = H.ExperimentConfig.from_dict({
        "model": {"kind": G.POINCARE_WEIGHTED},
        "N_list": [25, 50, 100, 200],
        "samples": 200,
        "master_seed": 20260823,
        "outdir": str(outdir),
        "workers": WORKERS,
    })
    t0 = time.monotonic()
    rec = H.cmd_equidistribute(cfg)
    return cfg, rec, time.monotonic() - t0


def test_criterion_1_fs_gram_oracle():
    t0 = time.monotonic()
    model = G.fubini_study()
    for n in range(1, 51):
        for j in range(n + 1):
            got = S.log_monomial_norm(model, n, j)
            want = S.fs_log_norm_exact(n, j)
            assert abs(got - want) < 1e-8
    assert time.monotonic() - t0 < 10.0


def test_criterion_2_bergman_constancy_and_traces():
    rng = np.random.default_rng(1)
    grid = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    for n in (3, 10, 30):
        sp = S.build_space(G.fubini_study(), n)
        vals = B.bergman_diag(sp, grid)
        assert np.max(np.abs(vals - (n + 1))) < 1e-8 * (n + 1)
        assert abs(B.trace_check(sp) - 1.0) < 1e-8
    for n in (10, 40):
        sp = S.build_space(G.poincare_weighted(), n)
        assert abs(B.trace_check(sp) - 1.0) < 1e-6


def test_criterion_3_leading_coefficient():
    t0 = time.monotonic()
    model = G.poincare_weighted()  # delta = 2*pi*epsilon: prediction is 1
    ns = [40, 80, 120, 160, 200]
    spaces = {n: S.build_space(model, n) for n in ns}
    for z in (0.0, 0.5, -0.5 + 0.5j, 0.9, -0.3 - 0.6j):
        fit = B.leading_coeff_fit(model, ns, z, spaces=spaces)
        assert fit.predicted_b0 == pytest.approx(1.0)
        assert fit.relative_error < 0.05
    assert time.monotonic() - t0 < 120.0


def test_criterion_4_pullback_rates(pw_spaces):
    points = (0.3, -0.4 + 0.2j, 0.5j, 0.7 - 0.3j, 0.1 + 0.6j)
    ns = (25, 50, 100, 200)

    # generic delta: base and curvature differ, deviation decays like 1/N
    generic = G.poincare_weighted(0.05, delta=0.45)
    gsp = {n: S.build_space(generic, n) for n in ns}
    for z in points:
        curv = float(np.real(G.curvature_density(generic, z)))
        scaled = [n * abs(B.fs_pullback_density(gsp[n], z) - curv)
                  for n in ns]
        assert max(scaled) <= 3.0 * min(scaled)

    # base = curvature (delta = 2*pi*epsilon): deviation decays like 1/N^2
    model, spaces = pw_spaces
    for z in points:
        curv = float(np.real(G.curvature_density(model, z)))
        scaled = [n ** 2 * abs(B.fs_pullback_density(spaces[n], z) - curv)
                  for n in ns]
        assert max(scaled) <= 3.0 * min(scaled)


def test_criterion_5_equidistribution_rate(equi_run):
    cfg, rec, elapsed = equi_run
    assert elapsed < 600.0
    assert rec.failures == []
    fit = json.loads((Path(rec.outdir) / "ratefit.json").read_text())
    med = fit["statistic"]
    assert fit["N_list"] == [25, 50, 100, 200]
    assert all(a > b for a, b in zip(med, med[1:]))  # strictly decreasing
    assert fit["slope"] <= -0.7


def test_criterion_6_exceptional_set_decay(pw_spaces):
    model, spaces = pw_spaces
    forms = st.default_dictionary(model)
    records = []
    for n in (50, 100, 200):
        res = st.ensemble_discrepancy(spaces[n], forms, M=500,
                                      seed=20260823, workers=WORKERS)
        assert res.failures == []
        records.extend(res.records)
    frac = st.exceptional_fraction(records, st.default_lambda)
    assert list(frac) == [50, 100, 200]
    assert frac[50] >= frac[100] >= frac[200]


def test_criterion_7_cusp_form_zero_statistics(tmp_path):
    cfg = H.ExperimentConfig.from_dict({
        "model": {"kind": G.HYPERBOLIC_GAMMA2},
        "N_list": [10, 20, 30],
        "samples": 50,
        "master_seed": 17,
        "region": {"chart": G.UPPER_HALF_PLANE, "shape": "box",
                   "bounds": [-0.5, 0.5, 0.4, 1.5]},
        "outdir": str(tmp_path / "runs"),
    })
    t0 = time.monotonic()
    rec = H.cmd_cuspforms(cfg)
    elapsed = time.monotonic() - t0
    assert elapsed < 1800.0
    assert rec.failures == []
    lines = (Path(rec.outdir) / "records.csv").read_bytes().decode() \
        .strip().split("\r\n")[2:]
    by_n = {}
    for line in lines:
        _, n, _, _, normalized, predicted, _ = line.split(",")
        by_n.setdefault(int(n), []).append(float(normalized))
        pred = float(predicted)
    means = {n: float(np.mean(v)) for n, v in by_n.items()}
    assert sorted(means) == [10, 20, 30]
    assert all(len(v) == 50 for v in by_n.values())
    assert abs(means[30] - pred) < 0.15 * pred
    devs = [abs(means[n] - pred) for n in (10, 20, 30)]
    assert devs[0] > devs[1] > devs[2]


def test_criterion_8_cross_method_agreement(pw_spaces):
    # 150 polynomial sections: root finding and the argument principle must
    # report identical counts in a fixed box
    model, spaces = pw_spaces
    fs = {n: S.build_space(G.fubini_study(), n) for n in (10, 50, 100)}
    box = (-1.07, 0.93, -0.96, 1.04)
    checked = 0
    for n in (10, 50, 100):
        for i in range(25):
            for sp in (fs[n], spaces[n] if n in spaces
                       else S.build_space(model, n)):
                sec = S.sample_section(sp, S.sample_seed(77, n, i))
                want = Z.poly_roots(sec).count_in(G.box(*box))
                assert Z.count_zeros_box(sec, box) == want
                checked += 1
    assert checked == 150


def test_criterion_8_hyperbolic_interior_counts():
    # with the truncation horoballs shrunk, every interior zero is captured
    # and the count matches the dimension-forced value N - 3 exactly
    for n in (5, 6, 8):
        model = G.hyperbolic_gamma2(0.12)
        sp = S.build_space(model, n)
        for i in range(2):
            sec = S.sample_section(sp, S.sample_seed(31, n, i))
            zs = Z.fundamental_domain_zeros(sec)
            assert zs.total_count == n - 3
    # at the default truncation the interior can only lose zeros to the
    # cusp neighborhoods, never gain them
    sp = S.build_space(G.hyperbolic_gamma2(), 12)
    sec = S.sample_section(sp, S.sample_seed(31, 12, 0))
    assert Z.fundamental_domain_zeros(sec).total_count <= 12 - 3


def test_criterion_9_dimension_laws():
    for n in (3, 7, 20):
        assert S.build_space(G.fubini_study(), n).dim == n + 1
        assert S.build_space(G.poincare_weighted(), n).dim == n
        assert cusp_dim(n) == n - 2
    assert S.build_space(G.hyperbolic_gamma2(), 6).dim == 4


def test_criterion_10_bytewise_determinism(equi_run):
    cfg, rec, _ = equi_run
    first = (Path(rec.outdir) / "records.csv").read_bytes()
    rec2 = H.cmd_equidistribute(cfg)
    second = (Path(rec2.outdir) / "records.csv").read_bytes()
    assert rec2.outdir == rec.outdir
    assert first == second

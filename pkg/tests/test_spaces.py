import math

import numpy as np
import pytest
from scipy.special import gammaln

from zerolab import geometry as G
from zerolab import spaces as S
from zerolab.errors import ModelConstructionError


def test_fs_norms_match_beta_closed_form():
    # ||z^j||^2 = j!(N-j)!/(N+1)! -- Beta-integral oracle
    for n in (1, 4, 9):
        for j in range(n + 1):
            got = S.log_monomial_norm(G.fubini_study(), n, j)
            want = S.fs_log_norm_exact(n, j)
            assert abs(got - want) < 1e-10


def test_dimension_laws():
    assert S.poly_dim(G.fubini_study(), 17) == 18
    assert S.poly_dim(G.poincare_weighted(), 17) == 17
    from zerolab.cuspforms import cusp_dim
    assert cusp_dim(17) == 15


def test_gram_matrix_diagonal():
    g = S.gram_matrix(G.fubini_study(), 4)
    assert np.allclose(g, np.diag(np.diagonal(g)))
    want = np.exp([S.fs_log_norm_exact(4, j) for j in range(5)])
    assert np.allclose(np.diagonal(g), want, rtol=1e-10)


def test_orthonormalize_random_gram():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    gram = a @ a.conj().T + 6 * np.eye(6)
    t = S.orthonormalize(gram)
    assert np.allclose(t.conj().T @ gram @ t, np.eye(6), atol=1e-12)
    # lower triangular: echelon structure is preserved
    assert np.allclose(t, np.tril(t))


def test_orthonormalize_rejects_indefinite():
    with pytest.raises(ModelConstructionError):
        S.orthonormalize(np.diag([1.0, -1.0]))


def test_build_space_plane_and_evaluation():
    sp = S.build_space(G.fubini_study(), 3)
    assert sp.dim == 4
    z = np.array([0.3 + 0.1j, -1.0 + 0j])
    vals = sp.basis_values(z)
    # orthonormal monomials: z^j * sqrt((N+1)!/(j!(N-j)!))
    for j in range(4):
        scale = math.exp(-0.5 * S.fs_log_norm_exact(3, j))
        assert np.allclose(vals[j], z ** j * scale, rtol=1e-12)


def test_monomial_log_coefficients_match_direct():
    sp = S.build_space(G.fubini_study(), 5)
    sec = S.sample_section(sp, 9)
    direct = sp.monomial_coefficients(sec.coeffs)
    ph, lm = sp.monomial_log_coefficients(sec.coeffs)
    assert np.allclose(ph * np.exp(lm), direct, rtol=1e-12)


def test_random_section_reproducible_and_projective():
    sp = S.build_space(G.poincare_weighted(), 6)
    a = S.sample_section(sp, 123)
    b = S.sample_section(sp, 123)
    assert np.array_equal(a.coeffs, b.coeffs)
    c = S.sample_section(sp, 124)
    assert not np.array_equal(a.coeffs, c.coeffs)
    z = np.array([0.2 + 0.1j])
    scaled = S.RandomSection(space=sp, coeffs=5j * a.coeffs)
    assert np.allclose(scaled.values(z), 5j * a.values(z))


def test_seed_derivation_decorrelates():
    s1 = S.sample_seed(1, 10, 0)
    s2 = S.sample_seed(1, 10, 1)
    s3 = S.sample_seed(1, 11, 0)
    s4 = S.sample_seed(2, 10, 0)
    assert len({s1, s2, s3, s4}) == 4


def test_space_serialization_round_trip():
    sp = S.build_space(G.poincare_weighted(), 5)
    back = S.SectionSpace.from_json(sp.to_json())
    assert back.degree == sp.degree and back.dim == sp.dim
    assert np.allclose(back.log_scales, sp.log_scales)
    z = np.array([0.4 - 0.2j])
    assert np.allclose(back.basis_values(z), sp.basis_values(z))


def test_weighted_gram_positive_definite_at_high_degree():
    sp = S.build_space(G.poincare_weighted(), 150)
    assert sp.dim == 150
    assert np.all(np.isfinite(sp.log_scales))

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landau_breather.errors import ClusterAmbiguous
from landau_breather.lattice import assemble_free_hamiltonian, make_geometry
from landau_breather.spectral import (SpectralData, compress, count_in_interval, direct_sum,
                                      eigendecompose, extract_level_projector, smallest_eigenvalue)
from landau_breather.ucp import balls_indicator, free_spectrum

FOUR_PI = 4 * math.pi


def random_hermitian(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (g + g.conj().T)


def test_eigendecompose_residual_and_orthonormality(rng):
    h = random_hermitian(rng, 50)
    spec = eigendecompose(h, want_vectors=True)
    v, w = spec.eigenvectors, spec.eigenvalues
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(h @ v - v * w)) < 1e-10
    assert np.max(np.abs(v.conj().T @ v - np.eye(50))) < 1e-10


def test_count_closed_interval():
    spec = SpectralData(np.array([0.0, 1.0, 1.0, 2.0, 3.0]))
    assert count_in_interval(spec, 1.0, 2.0) == 3
    assert count_in_interval(spec, 1.5, 1.9) == 0
    with pytest.raises(ValueError):
        count_in_interval(spec, 2.0, 1.0)


def test_counting_function_is_monotone(rng):
    spec = eigendecompose(random_hermitian(rng, 30))
    e = np.linspace(-20, 20, 400)
    n = spec.counting_function(e)
    assert np.all(np.diff(n) >= 0) and n[0] == 0 and n[-1] == 30


def test_free_landau_count_in_window():
    g = make_geometry(FOUR_PI, 1, 8)
    spec = eigendecompose(assemble_free_hamiltonian(g))
    assert count_in_interval(spec, FOUR_PI / 2, 3 * FOUR_PI / 2) == 8


@pytest.mark.parametrize("multiple, rank", [(1, 8), (2, 32)])
def test_lowest_level_projector_rank(multiple, rank):
    g = make_geometry(FOUR_PI, multiple, 8)
    p = extract_level_projector(free_spectrum(g), g, 1)
    assert p.rank == rank
    assert p.cluster_width < 0.05 * FOUR_PI
    assert np.max(np.abs(p.basis.conj().T @ p.basis - np.eye(rank))) < 1e-10


def test_second_level_projector():
    g = make_geometry(FOUR_PI, 1, 8)
    p = extract_level_projector(free_spectrum(g), g, 2)
    assert p.rank == 8
    assert np.mean(p.eigenvalues) == pytest.approx(3 * FOUR_PI, rel=0.05)


def test_unresolved_level_is_ambiguous():
    g = make_geometry(FOUR_PI, 1, 8)
    with pytest.raises(ClusterAmbiguous):
        extract_level_projector(free_spectrum(g), g, 12)


def test_projector_needs_vectors():
    g = make_geometry(FOUR_PI, 1, 8)
    with pytest.raises(ValueError):
        extract_level_projector(eigendecompose(assemble_free_hamiltonian(g)), g, 1)


@pytest.fixture(scope="module")
def lowest():
    g = make_geometry(FOUR_PI, 1, 8)
    return g, extract_level_projector(free_spectrum(g), g, 1)


def test_compress_identity_and_zero(lowest):
    g, p = lowest
    np.testing.assert_allclose(compress(p, np.ones(g.dimension)), np.eye(8), atol=1e-12)
    np.testing.assert_array_equal(compress(p, np.zeros(g.dimension)), np.zeros((8, 8)))


def test_compress_matches_dense_product(lowest, rng):
    g, p = lowest
    d = rng.uniform(size=g.dimension)
    np.testing.assert_allclose(compress(p, d), p.basis.conj().T @ np.diag(d) @ p.basis, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_compressed_nonnegative_diagonal_is_psd(seed):
    g = make_geometry(FOUR_PI, 1, 8)
    p = extract_level_projector(free_spectrum(g), g, 1)
    d = np.random.default_rng(seed).uniform(size=g.dimension) ** 4
    assert smallest_eigenvalue(compress(p, d)) >= -1e-12


def test_cell_indicators_resolve_identity(lowest):
    """Indicators of the unit cells partition the torus, so their compressions sum to 1."""
    g, p = lowest
    pts = g.grid_points()
    cells = np.floor(pts + 0.5).astype(int)
    total = np.zeros((8, 8), dtype=complex)
    for c in {tuple(x) for x in cells}:
        total += compress(p, np.all(cells == c, axis=1).astype(float))
    np.testing.assert_allclose(total, np.eye(8), atol=1e-12)


def test_direct_sum_rank(lowest):
    g, p1 = lowest
    p2 = extract_level_projector(free_spectrum(g), g, 2)
    s = direct_sum([p1, p2])
    assert s.rank == 16
    np.testing.assert_allclose(compress(s, np.ones(g.dimension)), np.eye(16), atol=1e-12)


def test_compressed_ball_indicator_bounded(lowest):
    g, p = lowest
    w = balls_indicator(g, [(0.0, 0.0)], 0.3)
    ev = np.linalg.eigvalsh(compress(p, w))
    assert -1e-12 <= ev[0] and ev[-1] <= 1 + 1e-12


def test_spectrum_csv(tmp_path):
    p = tmp_path / "s.csv"
    SpectralData(np.array([1.0, 2.5])).to_csv(p)
    assert p.read_text().splitlines() == ["eigenvalue", "1", "2.5"]

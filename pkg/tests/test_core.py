import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from beamlab.core import (
    DirectionGrid,
    ResponseField,
    coverage_from_gains,
    coverage_profile,
    gain,
    gain_matrix,
    make_direction_grid,
    nearest_rank,
)
from beamlab.errors import ParameterError, ShapeError

from conftest import loop_gain


# direction grid -------------------------------------------------------------

def test_default_grid_size_and_region():
    g = make_direction_grid(5809, 100)
    assert g.n_points == 5809
    assert np.array_equal(g.region_mask, g.theta <= 100)
    assert g.theta[g.region_mask].max() <= 100 < g.theta[~g.region_mask].min()
    # equal-area lattice: region share tracks the cap area (1 - cos 100deg) / 2
    assert abs(g.n_region / g.n_points - (1 - math.cos(math.radians(100))) / 2) < 1e-3


def test_two_point_grid():
    g = make_direction_grid(2, 180)
    assert g.n_points == 2
    assert g.region_mask.all()
    u = g.unit_vectors()
    assert u[0, 2] > 0 > u[1, 2]
    assert u[0] @ u[1] < -0.5


@pytest.mark.parametrize("n", [2, 17, 1000, 5809])
def test_grid_invariants(n):
    g = make_direction_grid(n, 100)
    u = g.unit_vectors()
    assert np.allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-12, rtol=0)
    assert len(set(g.points)) == n
    assert (g.theta >= 0).all() and (g.theta <= 180).all()
    assert (g.phi >= 0).all() and (g.phi < 360).all()


def test_grid_nearest_neighbor_uniformity():
    g = make_direction_grid(1000, 180)
    u = g.unit_vectors()
    # brute-force pairwise scan
    nn = np.empty(len(u))
    for i in range(len(u)):
        d = np.sqrt(((u - u[i]) ** 2).sum(axis=1))
        d[i] = np.inf
        nn[i] = d.min()
    cell_area = nn**2
    assert cell_area.var() < 0.1 * cell_area.mean() ** 2
    assert cell_area.std() / cell_area.mean() < math.sqrt(0.1)


def test_grid_is_deterministic():
    a = make_direction_grid(777, 95.5)
    b = make_direction_grid(777, 95.5)
    assert a.theta.tobytes() == b.theta.tobytes()
    assert a.phi.tobytes() == b.phi.tobytes()
    assert a == b


@pytest.mark.parametrize("n, tmax", [(1, 100), (0, 100), (2.5, 100), (10, 0), (10, 181), (10, -5)])
def test_grid_rejects_bad_parameters(n, tmax):
    with pytest.raises(ParameterError):
        make_direction_grid(n, tmax)


def test_explicit_grid_mask():
    g = DirectionGrid([0.0, 90.0, 100.0, 100.5, 180.0], [0, 10, 20, 30, 40], 100.0)
    assert g.region_mask.tolist() == [True, True, True, False, False]


# gain -----------------------------------------------------------------------

def test_gain_single_element():
    assert gain([1, 0], [1, 0]) == 1.0


def test_gain_matched_filter_pair():
    assert gain([1, 1j], np.array([1, -1j]) / np.sqrt(2)) == pytest.approx(2.0, rel=1e-15)


def test_gain_matches_scalar_loop():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m = rng.normal(size=24) + 1j * rng.normal(size=24)
        w = rng.normal(size=24) + 1j * rng.normal(size=24)
        w /= np.linalg.norm(w)
        ref = loop_gain(m, w)
        assert abs(gain(m, w) - ref) <= 1e-10 * ref


def test_gain_errors():
    with pytest.raises(ShapeError):
        gain([1, 2, 3], [1, 0])
    with pytest.raises(ParameterError):
        gain([1, 1], [1, 1])


complex_vec = arrays(
    np.complex128,
    8,
    elements=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
)


@settings(max_examples=200, deadline=None)
@given(complex_vec, complex_vec)
def test_rank_one_identity(m, w):
    n = np.linalg.norm(w)
    if n < 1e-6:
        return
    w = w / n
    M = m.reshape(1, -1)
    quad = (w.conj() @ M.conj().T @ M @ w).real
    g = gain(m, w)
    assert g >= 0
    assert abs(g - quad) <= 1e-10 * max(quad, 1e-300) + 1e-300


@settings(max_examples=100, deadline=None)
@given(complex_vec, complex_vec)
def test_matched_filter_is_optimal(m, w):
    if np.linalg.norm(m) < 1e-6 or np.linalg.norm(w) < 1e-6:
        return
    w = w / np.linalg.norm(w)
    mf = m.conj() / np.linalg.norm(m)
    best = gain(m, mf)
    assert best == pytest.approx(np.vdot(m, m).real, rel=1e-10)
    assert gain(m, w) <= best * (1 + 1e-10)


def test_gain_matrix_agrees_with_gain():
    rng = np.random.default_rng(0)
    R = rng.normal(size=(20, 6)) + 1j * rng.normal(size=(20, 6))
    W = rng.normal(size=(5, 6)) + 1j * rng.normal(size=(5, 6))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    G = gain_matrix(R, W)
    for i in range(20):
        for c in range(5):
            assert G[i, c] == pytest.approx(gain(R[i], W[c]), rel=1e-12)


# coverage -------------------------------------------------------------------

def _field(grid, rng, nt=4):
    resp = rng.normal(size=(grid.n_points, nt)) + 1j * rng.normal(size=(grid.n_points, nt))
    return ResponseField(grid, resp, np.arange(1, nt + 1), "t")


def test_singleton_codebook_coverage():
    rng = np.random.default_rng(1)
    grid = make_direction_grid(60, 120)
    f = _field(grid, rng)
    w = np.array([0.5, 0.5j, -0.5, 0.5])
    rep = coverage_profile(f, [w], grid, restrict=False)
    for i in range(grid.n_points):
        assert rep.per_point_gain[i] == pytest.approx(gain(f.responses[i], w), rel=1e-12)


def test_nearest_rank_percentile_example():
    grid = make_direction_grid(100, 180)
    gains = np.arange(1.0, 101.0)[np.random.default_rng(0).permutation(100)][:, None]
    rep = coverage_from_gains(gains, grid, restrict=True, percentiles=(20, 50, 80))
    assert rep.percentiles_linear[20] == 20.0
    assert rep.percentiles[20] == pytest.approx(13.0103, abs=5e-5)
    assert rep.percentiles_linear[50] == 50.0
    assert rep.percentiles_linear[80] == 80.0


def test_nearest_rank_edges():
    s = np.array([1.0, 2.0, 3.0])
    assert nearest_rank(s, 0) == 1.0
    assert nearest_rank(s, 100) == 3.0
    assert nearest_rank(s, 34) == 2.0
    with pytest.raises(ParameterError):
        nearest_rank(s, 101)


def test_pointwise_max_by_enumeration():
    grid = DirectionGrid([10.0, 50.0, 90.0], [0.0, 0.0, 0.0], 180.0)
    M = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], dtype=complex)
    f = ResponseField(grid, M, [1, 2], "hand")
    W = [np.array([1.0, 0.0]), np.array([0.6, 0.8])]
    rep = coverage_profile(f, W, grid, restrict=False)
    expect = [max(loop_gain(M[i], w) for w in W) for i in range(3)]
    assert rep.per_point_gain.tolist() == pytest.approx(expect, rel=1e-12)
    # 1.0, 0.64, 1.96
    assert expect == pytest.approx([1.0, 0.64, 1.96])
    assert rep.best_codeword.tolist() == [0, 1, 1]
    assert rep.mean_linear == pytest.approx(np.mean(expect), rel=1e-12)


def test_restricted_mean_uses_region_only():
    rng = np.random.default_rng(5)
    grid = make_direction_grid(300, 100)
    f = _field(grid, rng)
    w = np.array([1.0, 0, 0, 0])
    rep = coverage_profile(f, [w], grid, restrict=True)
    assert rep.region_restricted
    assert rep.mean_linear == pytest.approx(rep.per_point_gain[grid.region_mask].mean(), rel=1e-12)
    full = coverage_profile(f, [w], grid, restrict=False)
    assert full.mean_linear == pytest.approx(full.per_point_gain.mean(), rel=1e-12)


def test_empty_codebook_rejected():
    grid = make_direction_grid(10, 100)
    f = _field(grid, np.random.default_rng(0))
    with pytest.raises(ParameterError):
        coverage_profile(f, [], grid)


def test_field_on_other_grid_rejected():
    f = _field(make_direction_grid(10, 100), np.random.default_rng(0))
    with pytest.raises(ShapeError):
        coverage_profile(f, [np.ones(4) / 2], make_direction_grid(11, 100))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_appending_codeword_never_lowers_coverage(seed, n):
    rng = np.random.default_rng(seed)
    grid = make_direction_grid(40, 100)
    f = _field(grid, rng)
    W = rng.normal(size=(n + 1, 4)) + 1j * rng.normal(size=(n + 1, 4))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    a = coverage_profile(f, W[:n], grid)
    b = coverage_profile(f, W, grid)
    # BLAS may round a shared column differently for different codebook widths
    assert (b.per_point_gain >= a.per_point_gain * (1 - 1e-12)).all()
    assert b.mean_linear >= a.mean_linear * (1 - 1e-12)
    pcts = [b.percentiles[p] for p in (20, 50, 80)]
    assert pcts == sorted(pcts)


def test_field_validation():
    grid = make_direction_grid(5, 100)
    with pytest.raises(ShapeError):
        ResponseField(grid, np.ones((4, 2)), [1, 2])
    with pytest.raises(ShapeError):
        ResponseField(grid, np.ones((5, 2)), [1])
    bad = np.ones((5, 2), dtype=complex)
    bad[0, 0] = np.nan
    from beamlab.errors import NumericalError

    with pytest.raises(NumericalError):
        ResponseField(grid, bad, [1, 2])

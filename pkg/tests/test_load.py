import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from mmwcell.load import (SIZE_BIAS, VORONOI_SHAPE, DiscreteDist, LoadDists,
                          LoadModel, load_pmfs, tagged_load, tagged_mean,
                          tagged_pmf, typical_load, typical_mean, typical_pmf)

# (7/9)^3.5 frozen from a 30-digit evaluation
K_1_1_0 = 0.414948650981


def test_typical_normalizes():
    n = np.arange(0, 2001)
    assert typical_pmf(1.0, 1.0, n).sum() == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("ratio", [0.5, 1.0, 10.0])
def test_typical_mean(ratio):
    n = np.arange(0, 4000)
    pm = typical_pmf(ratio, 1.0, n)
    assert float(np.dot(n, pm)) == pytest.approx(ratio, abs=1e-8)
    assert typical_mean(ratio, 1.0) == ratio


def test_typical_frozen_value():
    assert typical_pmf(1.0, 1.0, 0) == pytest.approx(K_1_1_0, rel=1e-9)


@pytest.mark.parametrize("ratio", [0.3, 1.0, 10.0])
def test_tagged_mean_matches_closed_form(ratio):
    n = np.arange(1, 6000)
    pm = tagged_pmf(ratio, 1.0, n)
    assert pm.sum() == pytest.approx(1.0, abs=1e-9)
    got = float(np.dot(n, pm))
    assert got == pytest.approx(tagged_mean(ratio, 1.0), abs=1e-6)


def test_tagged_mean_constant_is_size_bias():
    # the commonly printed "1.28" is the two-decimal display of 1 + 1/3.5
    assert SIZE_BIAS == pytest.approx(9.0 / 7.0, rel=1e-15)
    assert tagged_mean(10.0, 1.0) == pytest.approx(1.0 + SIZE_BIAS * 10.0, rel=1e-15)


def test_tagged_concentrates_without_other_users():
    assert tagged_pmf(1e-12, 1.0, 1) == pytest.approx(1.0, abs=1e-10)
    assert typical_pmf(1e-12, 1.0, 0) == pytest.approx(1.0, abs=1e-10)
    assert tagged_pmf(1.0, 1.0, 0) == 0.0


def test_degenerate_c_zero():
    assert typical_pmf(0.0, 1.0, 0) == 1.0
    assert typical_pmf(0.0, 1.0, 3) == 0.0
    assert tagged_pmf(0.0, 1.0, 1) == pytest.approx(1.0, rel=1e-14)


def test_domain_errors():
    with pytest.raises(ValueError):
        typical_pmf(1.0, 0.0, 1)
    with pytest.raises(ValueError):
        tagged_pmf(-1.0, 1.0, 1)
    with pytest.raises(ValueError):
        typical_pmf(1.0, 1.0, 1.5)


def test_log_gamma_stability_large_n():
    val = typical_pmf(1e5, 1.0, 10**5)
    assert np.isfinite(val) and val > 0.0


def test_truncation_mass():
    for ratio in (0.5, 5.0, 50.0):
        d = typical_load(ratio, 1.0, 1e-9)
        assert 1.0 - d.mass <= 1e-9
        t = tagged_load(ratio, 1.0, 1e-9)
        assert 1.0 - t.mass <= 1e-9
        assert t.support[0] == 1


def test_load_pmfs_assignments():
    model = LoadModel(user_density=1000e-6, bs_density=100e-6, abs_fraction=0.5)
    on_abs = load_pmfs(model, "abs", eps=1e-9)
    on_bs = load_pmfs(model, "bs", eps=1e-9)
    assert isinstance(on_abs, LoadDists)
    # A-BS branch: the user's cell is the A-BS cell
    assert np.array_equal(on_abs.n_u.support, on_abs.n_uw.support)
    assert np.array_equal(on_abs.n_u.probs, on_abs.n_uw.probs)
    assert on_abs.n_b.support[0] == 0          # typical law
    assert on_bs.n_b.support[0] == 1           # tagged law
    # all four underlying PMFs normalize under the truncation
    for d in (on_abs.n_u, on_abs.n_b, on_bs.n_uw, on_bs.n_b):
        assert d.mass == pytest.approx(1.0, abs=1e-8)
    # stated means
    assert on_bs.n_b.mean == pytest.approx(
        tagged_mean(model.bs_density * 0.5, model.bs_density * 0.5), abs=1e-6)
    assert on_bs.n_b.mean == pytest.approx(1.0 + SIZE_BIAS, abs=1e-6)


def test_load_pmfs_omega_one():
    model = LoadModel(user_density=1000e-6, bs_density=100e-6, abs_fraction=1.0)
    dists = load_pmfs(model, "abs")
    assert dists.n_b.support[0] == 0
    assert dists.n_b.probs[0] == pytest.approx(1.0, rel=1e-14)


def test_point_mass_injection():
    d = DiscreteDist.point(3.7)
    assert d.mean == 3.7 and d.mass == 1.0


def _voronoi_load_counts(ratio, n_cells, rng):
    """Planar nearest-neighbor (true Voronoi) Monte Carlo on a torus:
    counts of users per BS cell, and per cell-of-a-random-user."""
    side = math.sqrt(n_cells)  # unit BS density
    n_bs = rng.poisson(n_cells)
    n_u = rng.poisson(ratio * n_cells)
    bs = rng.random((n_bs, 2)) * side
    users = rng.random((n_u, 2)) * side
    tree = cKDTree(bs, boxsize=side)
    _, owner = tree.query(users)
    counts = np.bincount(owner, minlength=n_bs)
    # typical: counts over BSs; tagged: count of the cell containing a user
    return counts, counts[owner]


@pytest.mark.parametrize("ratio", [1.0, 10.0])
def test_pmfs_against_voronoi_monte_carlo(ratio, rng):
    counts, tagged_counts = _voronoi_load_counts(ratio, 30000, rng)
    hi = int(tagged_counts.max()) + 1
    emp_typ = np.bincount(counts, minlength=hi) / counts.size
    emp_tag = np.bincount(tagged_counts, minlength=hi) / tagged_counts.size
    n = np.arange(hi)
    tv_typ = 0.5 * np.abs(emp_typ - typical_pmf(ratio, 1.0, n)).sum()
    tv_tag = 0.5 * np.abs(emp_tag - tagged_pmf(ratio, 1.0, n)).sum()
    assert tv_typ <= 0.05, f"typical TV {tv_typ}"
    assert tv_tag <= 0.05, f"tagged TV {tv_tag}"


def test_voronoi_shape_constant_exposed():
    assert VORONOI_SHAPE == 3.5

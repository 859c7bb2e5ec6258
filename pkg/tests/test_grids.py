"""Quadrature grid invariants."""

import numpy as np
import pytest

from invsqrg import MomentumGrid


def _check_invariants(grid):
    assert np.all(np.diff(grid.nodes) > 0)
    assert grid.nodes[0] > 0.0
    assert grid.nodes[-1] < grid.cutoff
    assert np.all(grid.weights > 0)
    assert abs(grid.weights.sum() - grid.cutoff) <= 1e-12 * grid.cutoff


def test_gauss_legendre_invariants():
    rng = np.random.default_rng(11)
    for _ in range(25):
        cutoff = float(rng.uniform(1e-3, 1e3))
        n = int(rng.integers(2, 500))
        _check_invariants(MomentumGrid.gauss_legendre(cutoff, n))


def test_gauss_legendre_integrates_polynomials():
    grid = MomentumGrid.gauss_legendre(2.0, 20)
    # exact for degree <= 2n-1
    for k in (0, 1, 5, 17):
        exact = 2.0 ** (k + 1) / (k + 1)
        assert abs(np.sum(grid.weights * grid.nodes**k) - exact) < 1e-12 * exact


def test_two_panel():
    grid = MomentumGrid.two_panel(1.0, 400, 0.01)
    _check_invariants(grid)
    assert grid.n == 400
    assert np.count_nonzero(grid.nodes < 0.01) == 200
    with pytest.raises(ValueError):
        MomentumGrid.two_panel(1.0, 100, 1.5)


def test_composite():
    grid = MomentumGrid.composite([0.0, 0.1, 0.5, 1.0], [10, 20, 30])
    _check_invariants(grid)
    assert grid.n == 60
    with pytest.raises(ValueError):
        MomentumGrid.composite([0.1, 0.5], [10])
    with pytest.raises(ValueError):
        MomentumGrid.composite([0.0, 0.5, 0.4], [10, 10])
    with pytest.raises(ValueError):
        MomentumGrid.composite([0.0, 1.0], [10, 10])


def test_validation_rejects_bad_grids():
    good = MomentumGrid.gauss_legendre(1.0, 8)
    with pytest.raises(ValueError):
        MomentumGrid(cutoff=1.0, nodes=good.nodes[::-1], weights=good.weights)
    with pytest.raises(ValueError):
        MomentumGrid(cutoff=1.0, nodes=good.nodes, weights=-good.weights)
    with pytest.raises(ValueError):
        MomentumGrid(cutoff=0.5, nodes=good.nodes, weights=good.weights)
    with pytest.raises(ValueError):
        MomentumGrid(cutoff=1.0, nodes=good.nodes, weights=2 * good.weights)


def test_grid_arrays_are_frozen():
    grid = MomentumGrid.gauss_legendre(1.0, 8)
    with pytest.raises(ValueError):
        grid.nodes[0] = 0.5

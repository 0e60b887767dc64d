"""Cell-index queries checked against a brute-force neighbour scan."""

import numpy as np
import pytest

from chemosim import CellIndex, Domain
from conftest import brute_neighbors


def _random_config(rng):
    periodic = bool(rng.integers(0, 2))
    size = float(rng.uniform(0.5, 3.0))
    domain = Domain.square(size, periodic=periodic)
    n = int(rng.integers(0, 80))
    pos = rng.uniform(domain.lo, domain.hi, (n, 2))
    cell_side = float(rng.uniform(0.02, 1.5) * size)
    return domain, pos, cell_side


def test_query_matches_brute_force_on_random_configs():
    rng = np.random.default_rng(1234)
    for _ in range(200):
        domain, pos, cell_side = _random_config(rng)
        index = CellIndex.build(pos, domain, cell_side)
        for _ in range(4):
            point = rng.uniform(domain.lo, domain.hi)
            radius = float(rng.uniform(0.01, 1.2) * domain.size[0])
            found = index.query(point, radius)
            ids, dx, dist = brute_neighbors(pos, domain, point, radius)
            assert [nb.id for nb in found] == list(ids)
            for k, nb in enumerate(found):
                assert nb.distance == dist[k]
                assert np.array_equal(nb.dx, dx[k])


def test_neighbors_ascending_and_coincident_included():
    domain = Domain.square(1.0)
    pos = np.array([[0.2, 0.2], [0.0, 0.0], [0.21, 0.2], [-0.4, -0.4]])
    index = CellIndex.build(pos, domain, 0.1)
    found = index.query([0.2, 0.2], 0.05)
    assert [nb.id for nb in found] == [0, 2]
    assert found[0].distance == 0.0


def test_periodic_seam_neighbour_found():
    domain = Domain.square(1.0, periodic=True)
    pos = np.array([[0.49, 0.0]])
    index = CellIndex.build(pos, domain, 0.1)
    found = index.query([-0.49, 0.0], 0.05)
    assert len(found) == 1
    assert found[0].distance == pytest.approx(0.02, abs=1e-15)
    assert found[0].dx[0] == pytest.approx(-0.02, abs=1e-15)


def test_reflecting_never_wraps():
    domain = Domain.square(1.0, periodic=False)
    pos = np.array([[0.49, 0.0]])
    index = CellIndex.build(pos, domain, 0.1)
    assert index.query([-0.49, 0.0], 0.05) == []


def test_radius_larger_than_domain_returns_each_particle_once():
    domain = Domain.square(1.0, periodic=True)
    rng = np.random.default_rng(5)
    pos = rng.uniform(-0.5, 0.5, (40, 2))
    index = CellIndex.build(pos, domain, 0.3)
    found = index.query([0.0, 0.0], 5.0)
    assert [nb.id for nb in found] == list(range(40))


def test_boundary_inclusion_is_closed():
    domain = Domain.square(2.0)
    pos = np.array([[0.5, 0.0], [0.5 + 1e-12, 0.0]])
    index = CellIndex.build(pos, domain, 0.25)
    found = index.query([0.0, 0.0], 0.5)
    assert [nb.id for nb in found] == [0]


def test_bucket_membership_and_order():
    domain = Domain.square(1.0)
    pos = np.array([[-0.45, -0.45], [0.45, 0.45], [-0.44, -0.44], [0.0, 0.0]])
    index = CellIndex.build(pos, domain, 0.5)
    assert list(index.n_cells) == [2, 2]
    assert list(index.bucket(0, 0)) == [0, 2]
    assert list(index.bucket(1, 1)) == [1, 3]
    assert list(index.bucket(1, 0)) == []


def test_effective_cell_side_never_below_requested():
    rng = np.random.default_rng(9)
    for _ in range(200):
        size = float(rng.uniform(0.1, 10.0))
        cell_side = float(rng.uniform(0.01, 3.0) * size)
        domain = Domain.square(size)
        index = CellIndex.build(np.empty((0, 2)), domain, cell_side)
        # a request wider than the box degenerates to a single full-size cell
        expected_floor = min(cell_side, size)
        assert np.all(index.eff_side >= expected_floor - 1e-12 * size)
        assert np.all(index.n_cells >= 1)
        assert np.allclose(index.eff_side * index.n_cells, domain.size)


def test_upper_edge_particle_is_clipped_into_last_cell():
    domain = Domain.square(1.0)
    index = CellIndex.build(np.array([[0.5, 0.5]]), domain, 0.25)
    assert list(index.cell_xy[0]) == [3, 3]


def test_build_rejects_bad_inputs():
    domain = Domain.square(1.0)
    with pytest.raises(ValueError, match="outside the domain"):
        CellIndex.build(np.array([[0.6, 0.0]]), domain, 0.1)
    with pytest.raises(ValueError, match="cell_side"):
        CellIndex.build(np.zeros((1, 2)), domain, 0.0)
    with pytest.raises(ValueError, match="shape"):
        CellIndex.build(np.zeros((3, 3)), domain, 0.1)
    with pytest.raises(ValueError, match="outside the domain"):
        CellIndex.build(np.array([[np.nan, 0.0]]), domain, 0.1)


def test_query_rejects_bad_inputs():
    domain = Domain.square(1.0)
    index = CellIndex.build(np.zeros((1, 2)), domain, 0.1)
    with pytest.raises(ValueError, match="radius"):
        index.query([0.0, 0.0], 0.0)
    with pytest.raises(ValueError, match="outside the domain"):
        index.query([0.7, 0.0], 0.1)


def test_wrap_displacement_convention():
    domain = Domain.square(1.0, periodic=True)
    d = domain.wrap_displacement(np.array([0.75, -0.75]))
    assert d[0] == pytest.approx(-0.25, abs=1e-15)
    assert d[1] == pytest.approx(0.25, abs=1e-15)
    # exactly half the box stays put rather than flipping sign
    d = domain.wrap_displacement(np.array([0.5, 0.0]))
    assert d[0] == 0.5
    nd = Domain.square(1.0, periodic=False)
    d = nd.wrap_displacement(np.array([0.75, -0.75]))
    assert d[0] == 0.75 and d[1] == -0.75


def test_domain_validation_and_contains():
    with pytest.raises(ValueError, match="size"):
        Domain.square(0.0)
    domain = Domain.square(2.0)
    inside = domain.contains([[0.0, 0.0], [1.0, 1.0], [1.0001, 0.0]])
    assert list(inside) == [True, True, False]

import numpy as np
import pytest

from lgcalab.lattice import (
    HEX6,
    SQUARE4,
    LatticeState,
    Topology,
    direction_vectors,
    directions,
    exact_momentum_units,
    neighbor,
    opposite,
    propagate,
)


def test_direction_counts_and_dimension():
    assert Topology(SQUARE4, 4, 4).z == 4
    assert Topology(HEX6, 4, 4).z == 6
    assert Topology(HEX6, 4, 4).d == 2


def test_hex_requires_even_height():
    with pytest.raises(ValueError, match="even height"):
        Topology(HEX6, 6, 5)


def test_square_neighbor_unit_shift():
    topo = Topology(SQUARE4, 8, 8)
    assert neighbor(topo, (0, 0), 1) == (1, 0)  # E
    assert neighbor(topo, (0, 0), 2) == (0, 1)  # N


def test_square_neighbor_periodic_wrap():
    topo = Topology(SQUARE4, 8, 8)
    assert neighbor(topo, (7, 0), 1) == (0, 0)
    assert neighbor(topo, (0, 0), 3) == (7, 0)
    assert neighbor(topo, (0, 0), 4) == (0, 7)


def test_hex_opposite_direction_returns_to_start():
    # exhaustive over a 6x6 lattice: step i then i+3 is the identity
    topo = Topology(HEX6, 6, 6)
    for y in range(6):
        for x in range(6):
            for i in range(1, 7):
                mid = neighbor(topo, (x, y), i)
                assert neighbor(topo, mid, opposite(HEX6, i)) == (x, y), (x, y, i)


def test_unit_vectors_sum_to_zero():
    assert direction_vectors(SQUARE4).sum(axis=0).tolist() == [0.0, 0.0]
    assert np.abs(direction_vectors(HEX6).sum(axis=0)).max() < 1e-12
    for kind in (SQUARE4, HEX6):
        cx, cy = exact_momentum_units(kind)
        assert cx.sum() == 0 and cy.sum() == 0


def test_hex_unit_vector_angles():
    vecs = direction_vectors(HEX6)
    assert np.allclose(vecs[0], [1.0, 0.0])
    assert np.allclose(vecs[1], [0.5, np.sqrt(3) / 2])
    # opposite pairs cancel exactly
    for i in range(1, 7):
        j = opposite(HEX6, i)
        assert np.abs(vecs[i - 1] + vecs[j - 1]).max() < 1e-15


def test_direction_objects():
    dirs = directions(SQUARE4)
    assert [d.name for d in dirs] == ["E", "N", "W", "S"]
    assert dirs[0].index == 1


def test_state_is_immutable_and_validates_bits():
    topo = Topology(SQUARE4, 4, 4)
    state = LatticeState.empty(topo)
    with pytest.raises(ValueError):
        LatticeState(topo, np.full((4, 4), 0b10000, dtype=np.uint8))
    with pytest.raises(Exception):
        state.occupations[0, 0] = 1


def test_propagate_moves_single_particle_east():
    topo = Topology(SQUARE4, 8, 8)
    occ = np.zeros((8, 8), dtype=np.uint8)
    occ[3, 3] = 0b0001  # E particle at (3, 3)
    state = propagate(LatticeState(topo, occ))
    assert state.time == 1
    assert state.occupations[3, 4] == 0b0001
    assert state.particle_count() == 1


@pytest.mark.parametrize("kind,dims", [(SQUARE4, (6, 4)), (HEX6, (5, 4))])
def test_propagate_preserves_per_direction_counts(kind, dims):
    topo = Topology(kind, *dims)
    gen = np.random.default_rng(7)
    occ = gen.integers(0, 1 << topo.z, size=(topo.height, topo.width), dtype=np.uint8)
    state = LatticeState(topo, occ)
    before = state.direction_counts()
    after = propagate(state).direction_counts()
    assert (before == after).all()


def test_propagate_orbit_returns_initial_state():
    # an east mover shifts cyclically, so width*height steps are a multiple
    # of its orbit length
    topo = Topology(SQUARE4, 5, 3)
    occ = np.zeros((3, 5), dtype=np.uint8)
    occ[1, 2] = 0b0001
    state = LatticeState(topo, occ)
    current = state
    for _ in range(topo.width * topo.height):
        current = propagate(current)
    assert (current.occupations == state.occupations).all()


@pytest.mark.parametrize("kind,dims", [(SQUARE4, (6, 6)), (HEX6, (6, 6))])
def test_propagate_is_a_bijection(kind, dims):
    # inverse built from the neighbor map directly: scatter each bit back
    topo = Topology(kind, *dims)
    gen = np.random.default_rng(11)
    occ = gen.integers(0, 1 << topo.z, size=dims, dtype=np.uint8)
    state = LatticeState(topo, occ)
    forward = propagate(state)

    restored = np.zeros_like(occ)
    for y in range(topo.height):
        for x in range(topo.width):
            for i in range(1, topo.z + 1):
                nx, ny = neighbor(topo, (x, y), opposite(kind, i))
                restored[ny, nx] |= ((forward.occupations[y, x] >> (i - 1)) & 1) << (i - 1)
    assert (restored == occ).all()


def test_hex_propagate_follows_neighbor_map():
    topo = Topology(HEX6, 6, 6)
    for i in range(1, 7):
        for pos in [(0, 0), (3, 2), (5, 5), (2, 3)]:
            occ = np.zeros((6, 6), dtype=np.uint8)
            occ[pos[1], pos[0]] = 1 << (i - 1)
            out = propagate(LatticeState(topo, occ))
            nx, ny = neighbor(topo, pos, i)
            assert out.occupations[ny, nx] == 1 << (i - 1)
            assert out.particle_count() == 1

"""Lattice geometry, occupation-number storage, and collisionless propagation.

Two topologies are supported: the square lattice with z=4 directions and the
hexagonal lattice with z=6 directions, both with periodic boundaries.  The
hexagonal lattice is embedded brick-wall style in a rectangular array: odd
rows sit half a cell to the right of even rows, so every site keeps O(1)
neighbor lookup and the occupation bits stay densely packed.  The embedding
requires an even number of rows, otherwise the vertical wrap would flip row
parity and break the neighbor structure.

Coordinates are (x, y) with x running east and y running north.  Direction
indices are 1-based: square4 has E,N,W,S = 1..4; hex6 has i = 1..6 at angles
60*(i-1) degrees, so direction 1 points along +x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SQUARE4 = "square4"
HEX6 = "hex6"

# Exact direction components.  Square components are in units of 1 lattice
# spacing; hex x-components are in units of 1/2 and y-components in units of
# sqrt(3)/2, which makes every momentum sum exact integer arithmetic.
_SQUARE_CX = np.array([1, 0, -1, 0], dtype=np.int64)
_SQUARE_CY = np.array([0, 1, 0, -1], dtype=np.int64)
_HEX_CX_HALVES = np.array([2, 1, -1, -2, -1, 1], dtype=np.int64)
_HEX_CY_ROOT3_HALVES = np.array([0, 1, 1, 0, -1, -1], dtype=np.int64)

_SQUARE_NAMES = ("E", "N", "W", "S")
_HEX_NAMES = ("E", "NE", "NW", "W", "SW", "SE")

POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


@dataclass(frozen=True)
class Direction:
    """One lattice direction: 1-based index plus its unit vector c_i."""

    index: int
    name: str
    unit_vector: tuple[float, float]


@dataclass(frozen=True)
class Topology:
    """Periodic lattice of ``width`` x ``height`` sites."""

    kind: str
    width: int
    height: int
    boundary: str = "periodic"

    def __post_init__(self):
        if self.kind not in (SQUARE4, HEX6):
            raise ValueError(f"unknown lattice kind: {self.kind!r}")
        if self.boundary != "periodic":
            raise ValueError("only periodic boundaries are supported")
        if self.width < 1 or self.height < 1:
            raise ValueError("lattice dimensions must be positive")
        if self.kind == HEX6 and self.height % 2:
            raise ValueError(
                "hex6 requires an even height: the brick-wall embedding wraps "
                "rows periodically and row parity must survive the wrap"
            )

    @property
    def z(self) -> int:
        return 4 if self.kind == SQUARE4 else 6

    @property
    def d(self) -> int:
        return 2

    @property
    def n_sites(self) -> int:
        return self.width * self.height


def directions(kind: str) -> tuple[Direction, ...]:
    """All z directions of a lattice kind, in index order.

    Hex unit vectors equal (cos(pi (i-1) / 3), sin(pi (i-1) / 3)) but are
    built from the exact half-integer components so that opposite pairs and
    whole-set sums cancel exactly in floating point.
    """
    if kind == SQUARE4:
        return tuple(
            Direction(i + 1, _SQUARE_NAMES[i], (float(_SQUARE_CX[i]), float(_SQUARE_CY[i])))
            for i in range(4)
        )
    if kind == HEX6:
        root3_half = math.sqrt(3.0) / 2.0
        return tuple(
            Direction(
                i + 1,
                _HEX_NAMES[i],
                (_HEX_CX_HALVES[i] / 2.0, _HEX_CY_ROOT3_HALVES[i] * root3_half),
            )
            for i in range(6)
        )
    raise ValueError(f"unknown lattice kind: {kind!r}")


def direction_vectors(kind: str) -> np.ndarray:
    """(z, 2) float array of unit vectors c_i."""
    return np.array([d.unit_vector for d in directions(kind)], dtype=np.float64)


def exact_momentum_units(kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Integer direction components for exact momentum bookkeeping.

    square4: (cx, cy) in lattice units.  hex6: cx in units of 1/2 and cy in
    units of sqrt(3)/2.
    """
    if kind == SQUARE4:
        return _SQUARE_CX, _SQUARE_CY
    if kind == HEX6:
        return _HEX_CX_HALVES, _HEX_CY_ROOT3_HALVES
    raise ValueError(f"unknown lattice kind: {kind!r}")


def opposite(kind: str, index: int) -> int:
    """Index of the reversed direction (1-based)."""
    z = 4 if kind == SQUARE4 else 6
    return (index - 1 + z // 2) % z + 1


def _dir_index(direction) -> int:
    return direction.index if isinstance(direction, Direction) else int(direction)


def _neighbor_arrays(topology: Topology, xs, ys, index: int):
    """Vectorized neighbor coordinates one step along direction ``index``.

    Single source of truth for the hex brick-wall convention: on even rows
    the NE neighbor is straight up, on odd rows it is up-right (and mirrored
    for NW/SW/SE).
    """
    w, h = topology.width, topology.height
    if topology.kind == SQUARE4:
        dx = int(_SQUARE_CX[index - 1])
        dy = int(_SQUARE_CY[index - 1])
        return (xs + dx) % w, (ys + dy) % h
    odd = ys & 1
    if index == 1:
        return (xs + 1) % w, ys
    if index == 4:
        return (xs - 1) % w, ys
    if index == 2:  # NE
        return (xs + odd) % w, (ys + 1) % h
    if index == 3:  # NW
        return (xs - 1 + odd) % w, (ys + 1) % h
    if index == 5:  # SW
        return (xs - 1 + odd) % w, (ys - 1) % h
    if index == 6:  # SE
        return (xs + odd) % w, (ys - 1) % h
    raise ValueError(f"direction index out of range: {index}")


def neighbor(topology: Topology, pos: tuple[int, int], direction) -> tuple[int, int]:
    """Site one lattice spacing along c_i from ``pos``, wrapped periodically."""
    x, y = pos
    if not (0 <= x < topology.width and 0 <= y < topology.height):
        raise ValueError(f"position {pos} out of bounds")
    index = _dir_index(direction)
    if not 1 <= index <= topology.z:
        raise ValueError(f"direction index out of range: {index}")
    nx, ny = _neighbor_arrays(topology, np.int64(x), np.int64(y), index)
    return int(nx), int(ny)


@dataclass(frozen=True)
class UnitsConfig:
    """Time step and lattice spacing; v = delta_r / delta_t."""

    delta_t: float = 1.0
    delta_r: float = 1.0

    def __post_init__(self):
        if self.delta_t <= 0 or self.delta_r <= 0:
            raise ValueError("delta_t and delta_r must be positive")

    @property
    def v(self) -> float:
        return self.delta_r / self.delta_t


@dataclass(frozen=True)
class LatticeState:
    """Immutable snapshot: one z-bit occupation mask per site.

    ``occupations[y, x]`` holds bit i-1 for direction i, so at most one
    particle per (site, direction) is representable at all -- the exclusion
    principle is structural.
    """

    topology: Topology
    occupations: np.ndarray = field(repr=False)
    time: int = 0

    def __post_init__(self):
        occ = np.ascontiguousarray(self.occupations, dtype=np.uint8)
        if occ.shape != (self.topology.height, self.topology.width):
            raise ValueError(
                f"occupations shape {occ.shape} does not match lattice "
                f"{self.topology.height}x{self.topology.width}"
            )
        if occ.max(initial=0) >> self.topology.z:
            raise ValueError("occupation mask uses bits beyond z directions")
        if self.time < 0:
            raise ValueError("time must be nonnegative")
        occ = occ.copy()
        occ.flags.writeable = False
        object.__setattr__(self, "occupations", occ)

    @classmethod
    def empty(cls, topology: Topology) -> "LatticeState":
        return cls(topology, np.zeros((topology.height, topology.width), dtype=np.uint8))

    def direction_plane(self, index: int) -> np.ndarray:
        """0/1 plane of direction ``index`` (1-based)."""
        return (self.occupations >> (index - 1)) & 1

    def planes(self) -> np.ndarray:
        """(z, H, W) array of per-direction occupation bits."""
        z = self.topology.z
        return np.stack([(self.occupations >> i) & 1 for i in range(z)])

    def particle_count(self) -> int:
        return int(POPCOUNT8[self.occupations].sum(dtype=np.int64))

    def direction_counts(self) -> np.ndarray:
        """Global per-direction mass sum_r n_i(r), exact integers."""
        z = self.topology.z
        return np.array(
            [int(((self.occupations >> i) & 1).sum(dtype=np.int64)) for i in range(z)],
            dtype=np.int64,
        )

    def momentum_units(self) -> tuple[int, int]:
        """Total momentum in exact integer units (see exact_momentum_units)."""
        cx, cy = exact_momentum_units(self.topology.kind)
        counts = self.direction_counts()
        return int(np.dot(counts, cx)), int(np.dot(counts, cy))


@lru_cache(maxsize=None)
def _propagation_sources(topology: Topology) -> np.ndarray:
    """(z, H*W) flat indices: source site of the particle arriving at each site.

    propagate writes out_i(r) = in_i(r - c_i), i.e. the source of direction i
    at r is the neighbor along the opposite direction.
    """
    w, h = topology.width, topology.height
    xs, ys = np.meshgrid(np.arange(w, dtype=np.int64), np.arange(h, dtype=np.int64))
    maps = np.empty((topology.z, h * w), dtype=np.int64)
    for i in range(1, topology.z + 1):
        sx, sy = _neighbor_arrays(topology, xs, ys, opposite(topology.kind, i))
        maps[i - 1] = (sy * w + sx).ravel()
    return maps


def propagate_occupations(topology: Topology, occupations: np.ndarray) -> np.ndarray:
    """Shift every direction plane one lattice spacing along its direction."""
    sources = _propagation_sources(topology)
    flat = occupations.reshape(-1)
    out = np.zeros_like(flat)
    for i in range(topology.z):
        out |= ((flat[sources[i]] >> i) & 1) << i
    return out.reshape(occupations.shape)


def propagate(state: LatticeState) -> LatticeState:
    """Collisionless streaming step: n_i(r + c_i, t+1) = n_i(r, t)."""
    occ = propagate_occupations(state.topology, state.occupations)
    return LatticeState(state.topology, occ, state.time + 1)

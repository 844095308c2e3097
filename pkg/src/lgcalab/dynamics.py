"""Collision operators for the HPP and FHP lattice gases.

FHP two-body collisions deflect an isolated head-on pair by 60 degrees, with
a per-site random bit q choosing the rotation sense; three-body symmetric
collisions bounce back.  HPP rotates an isolated head-on pair by 90 degrees
and needs no randomness.  Site updates go through an exhaustively verified
lookup table: every entry conserves particle number and momentum exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import (
    HEX6,
    SQUARE4,
    LatticeState,
    Topology,
    exact_momentum_units,
    propagate_occupations,
)

HPP = "hpp"
FHP = "fhp"

_MODEL_KIND = {HPP: SQUARE4, FHP: HEX6}


def _bit(state: int, index: int, z: int) -> int:
    """Occupation n_i for 1-based direction index, indices wrapping mod z."""
    return (state >> ((index - 1) % z)) & 1


def fhp_two_body_flag(state: int, i: int) -> int:
    """D_i: 1 iff directions i and i+3 hold an isolated head-on pair.

    D_i = n_i n_{i+3} (1-n_{i+1})(1-n_{i+2})(1-n_{i+4})(1-n_{i+5})
    """
    n = lambda k: _bit(state, k, 6)
    return n(i) * n(i + 3) * (1 - n(i + 1)) * (1 - n(i + 2)) * (1 - n(i + 4)) * (1 - n(i + 5))


def fhp_three_body_flag(state: int, i: int) -> int:
    """T_i: 1 iff directions i, i+2, i+4 hold an isolated symmetric triple.

    T_i = n_i n_{i+2} n_{i+4} (1-n_{i+1})(1-n_{i+3})(1-n_{i+5})
    """
    n = lambda k: _bit(state, k, 6)
    return n(i) * n(i + 2) * n(i + 4) * (1 - n(i + 1)) * (1 - n(i + 3)) * (1 - n(i + 5))


def fhp_collide_site(state: int, q: int) -> int:
    """Post-collision 6-bit site state.

    out_i = n_i + Omega_i with
    Omega_i = -D_i + q D_{i-1} + (1-q) D_{i+1} - T_i + T_{i+3};
    q = 1 rotates a head-on pair one way, q = 0 the other.
    """
    out = 0
    for i in range(1, 7):
        omega = (
            -fhp_two_body_flag(state, i)
            + q * fhp_two_body_flag(state, i - 1)
            + (1 - q) * fhp_two_body_flag(state, i + 1)
            - fhp_three_body_flag(state, i)
            + fhp_three_body_flag(state, i + 3)
        )
        n_out = _bit(state, i, 6) + omega
        if n_out not in (0, 1):
            raise AssertionError(f"collision term left occupation {n_out} for state {state:06b}")
        out |= n_out << (i - 1)
    return out


def hpp_collide_site(state: int) -> int:
    """Post-collision 4-bit site state: lone head-on pairs rotate 90 degrees."""
    ew = 0b0101  # directions 1 (E) and 3 (W)
    ns = 0b1010  # directions 2 (N) and 4 (S)
    if state == ew:
        return ns
    if state == ns:
        return ew
    return state


@dataclass(frozen=True)
class CollisionTable:
    """Exhaustive site-state map, indexed [q, state].  HPP ignores q."""

    model: str
    entries: np.ndarray

    @property
    def kind(self) -> str:
        return _MODEL_KIND[self.model]

    @property
    def z(self) -> int:
        return 4 if self.model == HPP else 6


def _verify_conservation(model: str, entries: np.ndarray) -> None:
    """Mass and momentum per entry, exact; a violation is an implementation bug."""
    z = 4 if model == HPP else 6
    cx, cy = exact_momentum_units(_MODEL_KIND[model])
    for q in (0, 1):
        for state in range(1 << z):
            out = int(entries[q, state])
            in_bits = [(state >> i) & 1 for i in range(z)]
            out_bits = [(out >> i) & 1 for i in range(z)]
            if sum(in_bits) != sum(out_bits):
                raise RuntimeError(
                    f"{model} collision table violates mass conservation at state {state:b}"
                )
            for c in (cx, cy):
                if int(np.dot(in_bits, c)) != int(np.dot(out_bits, c)):
                    raise RuntimeError(
                        f"{model} collision table violates momentum conservation at state {state:b}"
                    )


def build_collision_table(model: str) -> CollisionTable:
    """Tabulate the site collision operation over all 2^z states x q in {0,1}."""
    if model not in (HPP, FHP):
        raise ValueError(f"unknown model: {model!r}")
    z = 4 if model == HPP else 6
    entries = np.zeros((2, 1 << z), dtype=np.uint8)
    for state in range(1 << z):
        if model == HPP:
            out = hpp_collide_site(state)
            entries[0, state] = out
            entries[1, state] = out
        else:
            entries[0, state] = fhp_collide_site(state, 0)
            entries[1, state] = fhp_collide_site(state, 1)
    _verify_conservation(model, entries)
    return CollisionTable(model, entries)


@dataclass(frozen=True)
class RandomPolicy:
    """Counter-based Bernoulli(1/2) bits q(r, t), keyed on (seed, time, x, y).

    Each time step draws the whole lattice of bits from a Philox stream with
    key (seed, domain) and counter block selected by t, so q at a given
    (seed, time, x, y) never depends on evaluation order or on how the
    lattice is partitioned across workers.
    """

    seed: int
    domain: int = 0

    def generator(self, time: int) -> np.random.Generator:
        key = np.array([self.seed & 0xFFFFFFFFFFFFFFFF, self.domain], dtype=np.uint64)
        counter = np.array([0, 0, time & 0xFFFFFFFFFFFFFFFF, 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def q_field(self, time: int, shape: tuple[int, int]) -> np.ndarray:
        """(H, W) array of q bits for one time step."""
        return self.generator(time).integers(0, 2, size=shape, dtype=np.uint8)

    def q_at(self, time: int, shape: tuple[int, int], x: int, y: int) -> int:
        return int(self.q_field(time, shape)[y, x])


def collide(state: LatticeState, table: CollisionTable, rng: RandomPolicy) -> LatticeState:
    """Replace every site via table lookup with its (site, step)-keyed q bit."""
    if table.kind != state.topology.kind:
        raise ValueError(
            f"collision table for {table.model!r} does not match lattice kind "
            f"{state.topology.kind!r}"
        )
    q = rng.q_field(state.time, state.occupations.shape)
    occ = table.entries[q, state.occupations]
    return LatticeState(state.topology, occ, state.time)


def step(state: LatticeState, table: CollisionTable, rng: RandomPolicy) -> LatticeState:
    """One full update: collide, then propagate; deterministic given the seed."""
    collided = collide(state, table, rng)
    occ = propagate_occupations(state.topology, collided.occupations)
    return LatticeState(state.topology, occ, state.time + 1)


def run(
    state: LatticeState,
    table: CollisionTable,
    rng: RandomPolicy,
    steps: int,
    callback=None,
) -> LatticeState:
    """Advance ``steps`` full updates; callback(state) after each one."""
    for _ in range(steps):
        state = step(state, table, rng)
        if callback is not None:
            callback(state)
    return state


def random_state(
    topology: Topology, density: float, seed: int, time: int = 0, domain: int = 1
) -> LatticeState:
    """Independent Bernoulli(density/z) occupation per (site, direction)."""
    z = topology.z
    if not 0.0 <= density <= z:
        raise ValueError(f"density must lie in [0, {z}]")
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, domain], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    u = gen.random((z, topology.height, topology.width))
    occ = np.zeros((topology.height, topology.width), dtype=np.uint8)
    for i in range(z):
        occ |= (u[i] < density / z).astype(np.uint8) << i
    return LatticeState(topology, occ, time)

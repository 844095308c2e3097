"""Probabilistic-choice agents, their synchronous composition, and the
derived discrete-time Markov chain.

Agents are finite branch lists (probability, action, successor); the only
action in scope is the clock tick, so a system of n agents steps as one
global synchronous choice: the probability of a successor multiset is the
sum, over branch assignments, of the product of branch probabilities.  For
the active/passive colony this collapses to a binomial transition matrix
over the number of active agents, which is what `colony_matrix` builds
directly; `compose_step` keeps the literal product expansion as the exact
(exponential, hence guarded) semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import NumericalError

TICK = "✓"  # the clock tick, the only action in scope

_PROB_TOL = 1e-12
_COMPOSE_GUARD = 16


@dataclass(frozen=True)
class Branch:
    prob: float
    next: str
    action: str = TICK

    def __post_init__(self):
        if not 0.0 < self.prob <= 1.0:
            raise ValueError("branch probability must lie in (0, 1]")
        if self.action != TICK:
            raise ValueError(f"only the tick action {TICK!r} is supported")


@dataclass(frozen=True)
class AgentDef:
    """Named agent with a probabilistic choice over successor agents."""

    name: str
    branches: tuple[Branch, ...]

    def __post_init__(self):
        if not self.branches:
            raise ValueError(f"agent {self.name!r} has no branches")
        total = math.fsum(b.prob for b in self.branches)
        if abs(total - 1.0) > _PROB_TOL:
            raise ValueError(f"agent {self.name!r} branch probabilities sum to {total!r}")


@dataclass(frozen=True)
class ProcessState:
    """Multiset of agent names, canonically ordered."""

    counts: tuple[tuple[str, int], ...]

    @classmethod
    def from_counts(cls, counts: Mapping[str, int]) -> "ProcessState":
        items = tuple(sorted((name, int(c)) for name, c in counts.items() if c))
        if any(c < 0 for _, c in items):
            raise ValueError("agent counts must be nonnegative")
        return cls(items)

    @property
    def total(self) -> int:
        return sum(c for _, c in self.counts)

    def count(self, name: str) -> int:
        return dict(self.counts).get(name, 0)


def _defs_by_name(defs: Iterable[AgentDef]) -> dict[str, AgentDef]:
    by_name = {}
    for d in defs:
        if d.name in by_name:
            raise ValueError(f"duplicate agent definition {d.name!r}")
        by_name[d.name] = d
    for d in by_name.values():
        for b in d.branches:
            if b.next not in by_name:
                raise ValueError(f"agent {d.name!r} branches to undefined {b.next!r}")
    return by_name


def compose_step(
    defs: Iterable[AgentDef], state: ProcessState
) -> dict[ProcessState, float]:
    """Exact one-tick distribution of the synchronous composition.

    Expands every assignment of one branch per agent instance and multiplies
    the branch probabilities, so it is exponential in the number of agents
    and refuses systems larger than 16.
    """
    by_name = _defs_by_name(defs)
    for name, _ in state.counts:
        if name not in by_name:
            raise ValueError(f"state contains undefined agent {name!r}")
    if state.total > _COMPOSE_GUARD:
        raise ValueError(f"exact expansion guarded at {_COMPOSE_GUARD} agents")

    # distribution over (successor multiset) built instance by instance
    dist: dict[tuple[tuple[str, int], ...], float] = {(): 1.0}
    for name, count in state.counts:
        branches = by_name[name].branches
        for _ in range(count):
            new_dist: dict[tuple[tuple[str, int], ...], float] = {}
            for partial, prob in dist.items():
                counts = dict(partial)
                for b in branches:
                    counts[b.next] = counts.get(b.next, 0) + 1
                    key = tuple(sorted(counts.items()))
                    new_dist[key] = new_dist.get(key, 0.0) + prob * b.prob
                    counts[b.next] -= 1
                    if not counts[b.next]:
                        del counts[b.next]
            dist = new_dist
    return {ProcessState(key): p for key, p in dist.items()}


ACTIVE = "Active"
PASSIVE = "Passive"


def colony_defs(p: float) -> tuple[AgentDef, AgentDef]:
    """The two colony agents: Active may fall passive with probability p,
    Passive stays passive forever."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    active = AgentDef(ACTIVE, (Branch(p, PASSIVE), Branch(1.0 - p, ACTIVE)))
    passive = AgentDef(PASSIVE, (Branch(1.0, PASSIVE),))
    return active, passive


def colony_state(n: int, active: int) -> ProcessState:
    if not 0 <= active <= n:
        raise ValueError("active count must lie in [0, n]")
    return ProcessState.from_counts({ACTIVE: active, PASSIVE: n - active})


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix over an ordered state list."""

    states: tuple
    p: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.p, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] != len(self.states):
            raise ValueError("transition matrix shape does not match the state list")
        if np.any(p < 0.0):
            raise ValueError("transition probabilities must be nonnegative")
        if p.size and np.abs(p.sum(axis=1) - 1.0).max() > _PROB_TOL:
            raise ValueError("transition matrix rows must sum to 1")
        p.flags.writeable = False
        object.__setattr__(self, "p", p)

    @property
    def n_states(self) -> int:
        return len(self.states)


def colony_matrix(n: int, p: float) -> TransitionMatrix:
    """Markov chain of the n-agent colony over active counts i = 0..n.

    P[i -> k] = C(i, k) p^(i-k) (1-p)^k for k <= i: each of the i active
    agents independently stays active with probability 1-p.
    """
    if n < 1:
        raise ValueError("colony size n must be at least 1")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    matrix = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        for k in range(i + 1):
            matrix[i, k] = math.comb(i, k) * p ** (i - k) * (1.0 - p) ** k
    return TransitionMatrix(tuple(range(n + 1)), matrix)


def simulate(
    chain: TransitionMatrix, start: int, steps: int, trials: int, seed: int
) -> np.ndarray:
    """Sampled trajectories, shape (trials, steps+1) of state indices.

    Trial randomness comes from a Philox counter stream laid out as
    (trial, step), so each trial's path is a fixed function of
    (seed, trial) and results do not depend on evaluation order.
    """
    if not 0 <= start < chain.n_states:
        raise ValueError("start state index out of range")
    if steps < 0 or trials < 1:
        raise ValueError("steps must be >= 0 and trials >= 1")
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, 3], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    u = gen.random((trials, steps))

    cdf = np.cumsum(chain.p, axis=1)
    cdf[:, -1] = 1.0  # guard the rounding edge
    paths = np.empty((trials, steps + 1), dtype=np.int64)
    paths[:, 0] = start
    for t in range(steps):
        rows = cdf[paths[:, t]]
        paths[:, t + 1] = (u[:, t : t + 1] >= rows).sum(axis=1)
    return paths


@dataclass(frozen=True)
class ChainAnalysis:
    states: tuple
    distributions: np.ndarray  # (steps+1, n_states); row t = law of A_t
    expected_absorption: float  # mean steps to hit states[0] from the start


def analyze(chain: TransitionMatrix, start: int, steps: int) -> ChainAnalysis:
    """Exact distribution at each tick plus the expected time to states[0].

    The distribution rows are start_row @ P^t; the hitting time comes from
    first-step analysis, solving (I - Q) h = 1 over the non-target states.
    """
    if not 0 <= start < chain.n_states:
        raise ValueError("start state index out of range")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    dists = np.empty((steps + 1, chain.n_states))
    row = np.zeros(chain.n_states)
    row[start] = 1.0
    dists[0] = row
    for t in range(steps):
        row = row @ chain.p
        dists[t + 1] = row

    if start == 0:
        hitting = 0.0
    else:
        q = chain.p[1:, 1:]
        system = np.eye(chain.n_states - 1) - q
        try:
            h = np.linalg.solve(system, np.ones(chain.n_states - 1))
        except np.linalg.LinAlgError as exc:
            raise NumericalError("hitting-time system is singular") from exc
        hitting = float(h[start - 1])
    return ChainAnalysis(chain.states, dists, hitting)

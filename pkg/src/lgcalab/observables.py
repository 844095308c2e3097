"""Macroscopic observables of the lattice gas and their predicted values.

Occupation probabilities N_i are estimated by block/time averaging of the
Boolean fields; density, momentum and the momentum tensor follow as direction
sums.  The equilibrium occupations, pressure and kinematic viscosity are the
closed-form endpoints of the multiscale analysis of the FHP gas, kept here as
predictors so simulations can be validated against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lattice import (
    HEX6,
    LatticeState,
    Topology,
    UnitsConfig,
    direction_vectors,
    exact_momentum_units,
)
from .dynamics import FHP, RandomPolicy, build_collision_table, step


@dataclass(frozen=True)
class FhpConstants:
    """Lattice constants of the FHP gas (z=6 directions, d=2 dimensions).

    C4 = z / (d (d+2)) is fixed so that the lattice-viscosity term equals
    -dt v^2 / (2 (d+2)); for z=6, d=2 that gives C4 = 3/4.
    """

    units: UnitsConfig = field(default_factory=UnitsConfig)
    z: int = 6
    d: int = 2

    @property
    def a(self) -> float:
        return 1.0 / self.z

    @property
    def b(self) -> float:
        return self.d / self.z

    @property
    def c2(self) -> float:
        return self.z / self.d

    @property
    def c4(self) -> float:
        return self.z / (self.d * (self.d + 2))

    @property
    def v(self) -> float:
        return self.units.v

    def g(self, rho) -> np.ndarray | float:
        """Density factor of the quadratic equilibrium term; G(3) = 0."""
        rho = np.asarray(rho, dtype=np.float64)
        out = (2.0 / 3.0) * (3.0 - rho) / (6.0 - rho)
        return out if out.ndim else float(out)

    def reduced_density(self, rho) -> np.ndarray | float:
        return np.asarray(rho, dtype=np.float64) / self.z

    def collision_factor(self, rho) -> np.ndarray | float:
        """Lambda(rho) = 2 s (1-s)^3 with s = rho/6; positive on (0, 6)."""
        s = np.asarray(rho, dtype=np.float64) / self.z
        out = 2.0 * s * (1.0 - s) ** 3
        return out if out.ndim else float(out)


def _check_rho_open_interval(rho, z: int) -> None:
    r = np.asarray(rho, dtype=np.float64)
    if np.any(r <= 0.0) or np.any(r >= z):
        raise ValueError(f"density must lie strictly inside (0, {z})")


@dataclass(frozen=True)
class OccupationField:
    """Per-cell estimates of N_i = <n_i>, averaged over B x B sites, W steps."""

    topology: Topology
    values: np.ndarray  # (cells_y, cells_x, z), each in [0, 1]
    block: int
    window: int

    def __post_init__(self):
        v = self.values
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ValueError("occupation estimates must lie in [0, 1]")


@dataclass(frozen=True)
class MacroField:
    """Density rho, velocity u and momentum tensor Pi per cell."""

    rho: np.ndarray  # (cells_y, cells_x)
    u: np.ndarray  # (cells_y, cells_x, 2), zero wherever rho is zero
    pi: np.ndarray  # (cells_y, cells_x, 2, 2)


def estimate_occupation(
    history: Sequence[LatticeState], block: int = 1, window: int | None = None
) -> OccupationField:
    """Arithmetic mean of n_i over B x B site blocks and the last W states."""
    if len(history) == 0:
        raise ValueError("history is empty")
    if window is None:
        window = len(history)
    if window < 1 or window > len(history):
        raise ValueError("window must satisfy 1 <= W <= len(history)")
    topo = history[0].topology
    if topo.width % block or topo.height % block:
        raise ValueError("block size must divide the lattice dimensions")

    z = topo.z
    acc = np.zeros((z, topo.height, topo.width), dtype=np.float64)
    for state in history[-window:]:
        if state.topology != topo:
            raise ValueError("history mixes lattice topologies")
        acc += state.planes()
    acc /= window
    cy, cx = topo.height // block, topo.width // block
    blocked = acc.reshape(z, cy, block, cx, block).mean(axis=(2, 4))
    return OccupationField(topo, np.moveaxis(blocked, 0, -1), block, window)


def macro_fields(occ: OccupationField, units: UnitsConfig | None = None) -> MacroField:
    """rho = sum_i N_i, rho u = sum_i v_i N_i, Pi_ab = sum_i v_ia v_ib N_i."""
    units = units or UnitsConfig()
    vel = units.v * direction_vectors(occ.topology.kind)  # (z, 2)
    n = occ.values
    rho = n.sum(axis=-1)
    momentum = n @ vel  # (cy, cx, 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(rho[..., None] > 0.0, momentum / np.where(rho == 0.0, 1.0, rho)[..., None], 0.0)
    pi = np.einsum("yxi,ia,ib->yxab", n, vel, vel)
    return MacroField(rho, u, pi)


def equilibrium_occupation(rho, u, consts: FhpConstants | None = None) -> np.ndarray:
    """Second-order equilibrium occupations N_i(0)(rho, u) of the FHP gas.

    N_i = a rho + (b rho / v^2) v_i.u + (rho G(rho) / v^4) Q_iab u_a u_b with
    Q_iab = v_ia v_ib - (v^2/d) delta_ab.  Valid for |u| small compared to v;
    the quadratic truncation degrades above roughly 0.3 v.

    ``rho`` broadcasts against ``u[..., 2]``; the result has a trailing
    direction axis of length 6.
    """
    consts = consts or FhpConstants()
    _check_rho_open_interval(rho, consts.z)
    rho = np.asarray(rho, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if u.shape[-1] != 2:
        raise ValueError("u must have a trailing axis of length 2")
    v = consts.v
    vel = v * direction_vectors(HEX6)  # (6, 2)
    q_tensor = np.einsum("ia,ib->iab", vel, vel) - (v * v / consts.d) * np.eye(2)

    lin = np.einsum("ia,...a->...i", vel, u)
    quad = np.einsum("iab,...a,...b->...i", q_tensor, u, u)
    g = consts.g(rho)
    return (
        consts.a * rho[..., None]
        + (consts.b / v**2) * rho[..., None] * lin
        + (rho * g)[..., None] / v**4 * quad
    )


def pressure(rho, u_squared, consts: FhpConstants | None = None):
    """p = a C2 v^2 rho - [C2/d - C4] rho G(rho) u^2."""
    consts = consts or FhpConstants()
    _check_rho_open_interval(rho, consts.z)
    rho = np.asarray(rho, dtype=np.float64)
    u2 = np.asarray(u_squared, dtype=np.float64)
    v2 = consts.v**2
    out = consts.a * consts.c2 * v2 * rho - (consts.c2 / consts.d - consts.c4) * rho * consts.g(rho) * u2
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ViscosityPrediction:
    nu_coll: float
    nu_lattice: float
    nu_total: float


def predicted_viscosity(rho: float, consts: FhpConstants | None = None) -> ViscosityPrediction:
    """Kinematic viscosity nu = dt v^2 b C4 (1/Lambda - 1/2) of the FHP gas.

    nu_coll = dt v^2 b C4 / Lambda comes from collisions; the lattice part
    -dt v^2 / (2 (d+2)) is the discreteness correction, independent of rho.
    """
    consts = consts or FhpConstants()
    _check_rho_open_interval(rho, consts.z)
    lam = consts.collision_factor(rho)
    if lam == 0.0:
        raise ValueError("collision factor vanishes at this density")
    dt_v2 = consts.units.delta_t * consts.v**2
    nu_coll = dt_v2 * consts.b * consts.c4 / lam
    nu_lattice = -dt_v2 / (2.0 * (consts.d + 2))
    return ViscosityPrediction(nu_coll, nu_lattice, nu_coll + nu_lattice)


@dataclass(frozen=True)
class ShearWaveResult:
    """Outcome of one shear-wave decay measurement.

    ``ok`` is False when the fit could not establish a decaying amplitude;
    callers must treat that as a failed measurement, not an exception.
    """

    nu: float
    ok: bool
    slope: float
    k1: float
    amplitudes: np.ndarray
    fit_steps: int


def _row_velocity_profile(state: LatticeState, mean_rho: float) -> np.ndarray:
    """Mean x-velocity per lattice row, in units of v."""
    cx, _ = exact_momentum_units(state.topology.kind)
    scale = 0.5 if state.topology.kind == HEX6 else 1.0  # hex cx is in halves
    planes = state.planes()  # (z, H, W)
    px = np.tensordot(scale * cx.astype(np.float64), planes, axes=1).sum(axis=1)
    return px / (state.topology.width * mean_rho)


def measure_viscosity(
    width: int,
    height: int,
    rho: float,
    u0: float,
    steps: int,
    seed: int,
    consts: FhpConstants | None = None,
) -> ShearWaveResult:
    """Shear-wave decay probe of the FHP viscosity.

    Initializes occupation probabilities at the local equilibrium for
    u_x(y) = u0 sin(2 pi y / H), samples each n_i as an independent
    Bernoulli, runs the gas, and fits ln|u_hat(k1, t)| against t.  Returns
    nu = -slope / k1^2 with k1 = 2 pi / L, where L is the lattice height in
    lattice units (H delta_r), the same coordinate the sine profile is laid
    out in.  Rows of the hex embedding are physically sqrt(3)/2 spacings
    apart, so this row-coordinate convention reports 4/3 of the decay
    coefficient expressed in physical distance.
    """
    consts = consts or FhpConstants()
    _check_rho_open_interval(rho, consts.z)
    if not 0.0 < u0 <= 0.1 * consts.v:
        raise ValueError("amplitude u0 must lie in (0, 0.1 v]")
    topo = Topology(HEX6, width, height)

    rows = np.arange(height, dtype=np.float64)
    phase = np.sin(2.0 * math.pi * rows / height)
    u_rows = np.zeros((height, 2))
    u_rows[:, 0] = u0 * phase
    n_eq = equilibrium_occupation(rho, u_rows, consts)  # (H, 6)

    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, 2], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    u_rand = gen.random((height, width, 6))
    occ = np.zeros((height, width), dtype=np.uint8)
    for i in range(6):
        occ |= (u_rand[:, :, i] < n_eq[:, None, i]).astype(np.uint8) << i
    state = LatticeState(topo, occ, 0)

    mean_rho = state.particle_count() / topo.n_sites
    table = build_collision_table(FHP)
    rng = RandomPolicy(seed)

    amplitudes = np.empty(steps + 1)
    amplitudes[0] = (2.0 / height) * np.dot(_row_velocity_profile(state, mean_rho), phase)
    for t in range(steps):
        state = step(state, table, rng)
        amplitudes[t + 1] = (2.0 / height) * np.dot(
            _row_velocity_profile(state, mean_rho), phase
        )

    k1 = 2.0 * math.pi / (height * consts.units.delta_r)
    # shot noise of the sine coefficient: per-site momentum variance is
    # sum_i c_ix^2 s(1-s) = 3 s(1-s), projected onto the normalized mode
    s = rho / 6.0
    noise = math.sqrt(6.0 * s * (1.0 - s) / (rho * rho * height * width))
    rate_ref = predicted_viscosity(rho, consts).nu_total * k1 * k1
    return _fit_decay(amplitudes, k1, consts.units.delta_t, noise, rate_ref)


def _fit_decay(
    amplitudes: np.ndarray, k1: float, delta_t: float, noise: float, rate_ref: float
) -> ShearWaveResult:
    """Weighted least-squares slope of ln|amplitude| over a fixed window.

    The window spans 2.5 e-foldings of the reference decay rate and the
    weights follow the reference amplitude profile, discounted once it sinks
    toward the shot-noise floor.  Window and weights are fixed a priori (no
    dependence on the noisy trace), which keeps the estimator variance low;
    points past the floor carry negligible weight, so the amplitude is only
    clipped just above zero to keep the logarithm finite.
    """
    a0 = amplitudes[0]
    if a0 <= 3.0 * noise:
        return ShearWaveResult(math.nan, False, math.nan, k1, amplitudes, 0)
    end = min(len(amplitudes), int(math.ceil(2.5 / (rate_ref * delta_t))) + 1)
    if end < 8:
        return ShearWaveResult(math.nan, False, math.nan, k1, amplitudes, end)
    ts = np.arange(end) * delta_t
    expected = a0 * np.exp(-rate_ref * ts)
    weights = expected**2 / np.sqrt(expected**2 + noise**2)
    clipped = np.maximum(np.abs(amplitudes[:end]), 0.3 * noise)
    slope, _ = np.polyfit(ts, np.log(clipped), 1, w=weights)
    if not slope < 0.0:
        return ShearWaveResult(math.nan, False, float(slope), k1, amplitudes, end)
    return ShearWaveResult(float(-slope / k1**2), True, float(slope), k1, amplitudes, end)

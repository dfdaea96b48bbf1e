"""Split-step spectral evolution of wavepackets under self-consistent gravity.

One Strang step is: half kinetic step in spectral space, one full potential
kick exp(-i*m*Phi*dt/hbar) with Phi refreshed from the current densities,
half kinetic step.  Because the kick leaves |phi| pointwise invariant, the
potential computed after the first half kinetic step is exactly the
midpoint-density potential, so the scheme stays second order in dt despite
the density-dependent potential.

Gravity sourcing is pluggable:

  MEAN_FIELD        one shared potential from all four packets, each packet
                    weighted N/2 (the expected occupation in the superposed
                    state); this is the semiclassical model under test.
  BRANCH_RESOLVED   four independent branch configurations, each feeling
                    only its own branch's density with weight N per occupied
                    packet; the quantized-gravity positive control.
  NO_GRAVITY        free evolution baseline.

Every sub-step multiplies each packet by the same unit-modulus field, so
packet norms and (for MEAN_FIELD) all pairwise inner products are conserved
by construction; the tests pin the tolerances.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import NumericalFailure, StepSizeError, UsageError
from .gridfield import (
    PACKET_LABELS,
    SUPPORT_MARGIN_SIGMAS,
    DensityField,
    Grid,
    ModeSet,
    PhysicalParams,
    WavePacket,
    packet_observables,
)
from .poisson import GravityKernel, build_kernel, solve_potential

logger = logging.getLogger(__name__)

BRANCH_LABELS = ("LL", "LR", "RL", "RR")

DEFAULT_PHASE_GUARD = 0.5  # rad per step, kinetic and potential alike
NORMALIZATION_TOL = 1e-6


class SourcingMode(Enum):
    MEAN_FIELD = "mean-field"
    BRANCH_RESOLVED = "branch-resolved"
    NO_GRAVITY = "no-gravity"


@dataclass(frozen=True)
class Schedule:
    """Time-stepping plan."""

    dt: float
    n_steps: int
    record_stride: int = 100

    def __post_init__(self):
        if not self.dt > 0:
            raise UsageError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 0:
            raise UsageError(f"n_steps must be >= 0, got {self.n_steps}")
        if self.record_stride < 1:
            raise UsageError(f"record_stride must be >= 1, got {self.record_stride}")


@dataclass
class BranchSet:
    """Four independently evolving branch configurations.

    Branch 'KL' holds a copy of subsystem 1's K-side packet and subsystem 2's
    L-side packet; at t=0 every branch packet coincides with the ModeSet
    packet of matching label.
    """

    branches: dict[str, tuple[WavePacket, WavePacket]]

    def __post_init__(self):
        if tuple(self.branches.keys()) != BRANCH_LABELS:
            raise UsageError(
                f"BranchSet requires branches {BRANCH_LABELS} in order, "
                f"got {tuple(self.branches.keys())}"
            )

    @classmethod
    def from_modes(cls, modes: ModeSet) -> "BranchSet":
        return cls(
            {
                b: (
                    modes.packets["1" + b[0]].copy(),
                    modes.packets["2" + b[1]].copy(),
                )
                for b in BRANCH_LABELS
            }
        )

    @property
    def grid(self) -> Grid:
        return self.branches["LL"][0].grid

    def subsystem_packets(self, subsystem: int) -> list[WavePacket]:
        """The four branch packets of one subsystem (1 or 2), branch order."""
        if subsystem not in (1, 2):
            raise UsageError(f"subsystem must be 1 or 2, got {subsystem}")
        return [self.branches[b][subsystem - 1] for b in BRANCH_LABELS]

    def all_packets(self) -> list[WavePacket]:
        return [p for b in BRANCH_LABELS for p in self.branches[b]]

    def copy(self) -> "BranchSet":
        return BranchSet(
            {b: (p1.copy(), p2.copy()) for b, (p1, p2) in self.branches.items()}
        )


def gram_matrix(state) -> np.ndarray:
    """Hermitian matrix of pairwise packet inner products.

    Accepts a ModeSet (order 1L,1R,2L,2R) or any sequence of packets on a
    common grid.  The upper triangle is computed and mirrored.
    """
    if isinstance(state, ModeSet):
        packets = state.ordered()
    else:
        packets = list(state)
    grid = packets[0].grid
    for p in packets:
        if p.grid != grid:
            raise UsageError("gram_matrix requires packets on one common grid")
    stacked = np.stack([p.values.ravel() for p in packets])
    raw = (stacked.conj() @ stacked.T) * grid.cell_volume
    upper = np.triu(raw)
    return upper + np.triu(raw, 1).conj().T


@dataclass
class TimeSeriesRecord:
    """One recorded instant of a trajectory."""

    step: int
    time: float
    labels: tuple[str, ...]
    norms: dict[str, float]
    centers: dict[str, np.ndarray]
    widths: dict[str, float]
    gram: np.ndarray | None = None  # ModeSet runs: 4x4 over (1L,1R,2L,2R)
    gram1: np.ndarray | None = None  # branch runs: subsystem-1 branch Gram
    gram2: np.ndarray | None = None  # branch runs: subsystem-2 branch Gram
    gram_drift: float = 0.0
    cross_block: float | None = None
    phi_min: float = 0.0
    energy: float | None = None
    entropy_bits: float | None = None
    negativity_bits: float | None = None


class _Stepper:
    """Stacked-array implementation shared by strang_step and evolve."""

    def __init__(
        self,
        grid: Grid,
        params: PhysicalParams,
        sourcing: SourcingMode,
        phase_guard: float = DEFAULT_PHASE_GUARD,
        exclude_self_gravity: bool = False,
    ):
        self.grid = grid
        self.params = params
        self.sourcing = sourcing
        self.phase_guard = phase_guard
        self.exclude_self_gravity = exclude_self_gravity
        self.axes = tuple(range(-grid.dimension, 0))
        self.gravity_on = sourcing != SourcingMode.NO_GRAVITY and params.newton_g > 0
        self.kernel: GravityKernel | None = (
            build_kernel(grid, params) if self.gravity_on else None
        )
        # rad per unit time at the largest resolved wavenumber
        self.kinetic_rate = float(
            params.hbar * np.max(grid.k_squared) / (2.0 * params.mass)
        )

    def check_kinetic_guard(self, dt: float):
        phase = self.kinetic_rate * dt
        if phase > self.phase_guard:
            raise StepSizeError(
                f"kinetic phase {phase:.3g} rad/step exceeds the guard "
                f"{self.phase_guard}; use dt <= {self.suggested_dt():.3g}",
                suggested_dt=self.suggested_dt(),
            )

    def suggested_dt(self) -> float:
        return 0.9 * self.phase_guard / self.kinetic_rate

    def kinetic_half(self, dt: float) -> np.ndarray:
        p = self.params
        return np.exp(-1j * (p.hbar / (2.0 * p.mass)) * self.grid.k_squared * (dt / 2.0))

    def _solve(self, rho: np.ndarray) -> np.ndarray:
        assert self.kernel is not None
        return solve_potential(DensityField(rho, self.grid), self.kernel).values

    def _check_potential_guard(self, phi_scale: float, dt: float):
        phase = self.params.mass * phi_scale * dt / self.params.hbar
        if phase > self.phase_guard:
            suggested = 0.9 * self.phase_guard * self.params.hbar / (
                self.params.mass * phi_scale
            )
            raise StepSizeError(
                f"potential phase {phase:.3g} rad/step exceeds the guard "
                f"{self.phase_guard}; use dt <= {suggested:.3g}",
                suggested_dt=suggested,
            )

    def _kick_mean_field(self, stacked: np.ndarray, dt: float):
        """Shared potential kick for the (4, grid) mode stack, in place."""
        if not self.gravity_on:
            return
        p = self.params
        w = p.boson_number / 2.0
        rho = (w * p.mass) * np.sum(np.abs(stacked) ** 2, axis=0)
        phi = self._solve(rho)
        self._check_potential_guard(float(np.max(np.abs(phi))), dt)
        if self.exclude_self_gravity:
            for i in range(stacked.shape[0]):
                own = self._solve((w * p.mass) * np.abs(stacked[i]) ** 2)
                stacked[i] *= np.exp(-1j * (p.mass / p.hbar) * (phi - own) * dt)
        else:
            stacked *= np.exp(-1j * (p.mass / p.hbar) * phi * dt)

    def _kick_branches(self, stacked: np.ndarray, dt: float):
        """Per-branch potential kick for the (4, 2, grid) branch stack."""
        if not self.gravity_on:
            return
        p = self.params
        w = float(p.boson_number)
        for b in range(stacked.shape[0]):
            rho = (w * p.mass) * np.sum(np.abs(stacked[b]) ** 2, axis=0)
            phi = self._solve(rho)
            self._check_potential_guard(float(np.max(np.abs(phi))), dt)
            if self.exclude_self_gravity:
                for j in range(2):
                    own = self._solve((w * p.mass) * np.abs(stacked[b, j]) ** 2)
                    stacked[b, j] *= np.exp(
                        -1j * (p.mass / p.hbar) * (phi - own) * dt
                    )
            else:
                stacked[b] *= np.exp(-1j * (p.mass / p.hbar) * phi * dt)

    def step(self, stacked: np.ndarray, dt: float, kin_half: np.ndarray) -> np.ndarray:
        stacked = np.fft.ifftn(
            np.fft.fftn(stacked, axes=self.axes) * kin_half, axes=self.axes
        )
        if self.sourcing == SourcingMode.BRANCH_RESOLVED:
            self._kick_branches(stacked, dt)
        else:
            self._kick_mean_field(stacked, dt)
        stacked = np.fft.ifftn(
            np.fft.fftn(stacked, axes=self.axes) * kin_half, axes=self.axes
        )
        return stacked

    def record_potential(self, stacked: np.ndarray) -> tuple[np.ndarray | None, float]:
        """(Phi, min Phi) for diagnostics at the current state."""
        if not self.gravity_on:
            return None, 0.0
        p = self.params
        if self.sourcing == SourcingMode.BRANCH_RESOLVED:
            phi_min = 0.0
            for b in range(stacked.shape[0]):
                rho = (p.boson_number * p.mass) * np.sum(
                    np.abs(stacked[b]) ** 2, axis=0
                )
                phi_min = min(phi_min, float(self._solve(rho).min()))
            return None, phi_min
        w = p.boson_number / 2.0
        rho = (w * p.mass) * np.sum(np.abs(stacked) ** 2, axis=0)
        phi = self._solve(rho)
        return phi, float(phi.min())


def _stack_state(state) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(state, ModeSet):
        arr = np.stack([p.values for p in state.ordered()])
        return arr, PACKET_LABELS
    if isinstance(state, BranchSet):
        arr = np.stack(
            [np.stack([p1.values, p2.values]) for p1, p2 in state.branches.values()]
        )
        labels = tuple(f"{b}.{i}" for b in BRANCH_LABELS for i in (1, 2))
        return arr, labels
    raise UsageError(f"unsupported state type {type(state).__name__}")


def _unstack_state(state, stacked: np.ndarray):
    grid = state.grid
    if isinstance(state, ModeSet):
        return ModeSet(
            {
                lbl: WavePacket(lbl, stacked[i].copy(), grid)
                for i, lbl in enumerate(PACKET_LABELS)
            }
        )
    return BranchSet(
        {
            b: (
                WavePacket("1" + b[0], stacked[i, 0].copy(), grid),
                WavePacket("2" + b[1], stacked[i, 1].copy(), grid),
            )
            for i, b in enumerate(BRANCH_LABELS)
        }
    )


def _validate_pair(state, sourcing: SourcingMode):
    if sourcing == SourcingMode.MEAN_FIELD and not isinstance(state, ModeSet):
        raise UsageError("MEAN_FIELD sourcing requires a ModeSet")
    if sourcing == SourcingMode.BRANCH_RESOLVED and not isinstance(state, BranchSet):
        raise UsageError("BRANCH_RESOLVED sourcing requires a BranchSet")


def _check_normalized(state):
    packets = state.ordered() if isinstance(state, ModeSet) else state.all_packets()
    for p in packets:
        if abs(p.norm() - 1.0) > NORMALIZATION_TOL:
            raise UsageError(
                f"packet '{p.label}' norm {p.norm():.9f} deviates from 1 by more "
                f"than {NORMALIZATION_TOL}"
            )


def strang_step(
    state,
    params: PhysicalParams,
    dt: float,
    sourcing: SourcingMode,
    *,
    phase_guard: float = DEFAULT_PHASE_GUARD,
    exclude_self_gravity: bool = False,
):
    """Advance a ModeSet or BranchSet by one Strang step; returns a new state."""
    _validate_pair(state, sourcing)
    _check_normalized(state)
    stepper = _Stepper(
        state.grid, params, sourcing, phase_guard, exclude_self_gravity
    )
    stepper.check_kinetic_guard(dt)
    stacked, _ = _stack_state(state)
    stacked = stepper.step(stacked, dt, stepper.kinetic_half(dt))
    return _unstack_state(state, stacked)


def _mode_gram(stacked_2d: np.ndarray, cell_volume: float) -> np.ndarray:
    flat = stacked_2d.reshape(stacked_2d.shape[0], -1)
    raw = (flat.conj() @ flat.T) * cell_volume
    return np.triu(raw) + np.triu(raw, 1).conj().T


def evolve(
    state,
    params: PhysicalParams,
    schedule: Schedule,
    sourcing: SourcingMode,
    recorder: Callable[[TimeSeriesRecord], None] | None = None,
    *,
    measure: Callable[[TimeSeriesRecord], None] | None = None,
    phase_guard: float = DEFAULT_PHASE_GUARD,
    exclude_self_gravity: bool = False,
):
    """Iterate strang_step over a schedule, emitting TimeSeriesRecords.

    Records are taken at step 0, every `record_stride` steps, and at the
    final step.  `measure`, when given, is called on each fresh record (the
    Gram matrices are already filled in) and may attach entanglement fields.
    Returns (records, final_state).
    """
    _validate_pair(state, sourcing)
    _check_normalized(state)
    grid = state.grid
    stepper = _Stepper(grid, params, sourcing, phase_guard, exclude_self_gravity)
    stepper.check_kinetic_guard(schedule.dt)
    kin_half = stepper.kinetic_half(schedule.dt)

    stacked, labels = _stack_state(state)
    is_branch = isinstance(state, BranchSet)
    cell = grid.cell_volume

    gram0: np.ndarray | None = None
    gram10: np.ndarray | None = None
    gram20: np.ndarray | None = None
    records: list[TimeSeriesRecord] = []
    warned: set[str] = set()

    def take_record(step_idx: int):
        nonlocal gram0, gram10, gram20
        t = step_idx * schedule.dt
        flat = stacked.reshape((-1,) + grid.shape)
        norms, centers, widths = {}, {}, {}
        for i, lbl in enumerate(labels):
            n, c, w = packet_observables(WavePacket(lbl, flat[i], grid))
            norms[lbl], centers[lbl], widths[lbl] = n, c, w
            reach = float(np.max(np.abs(c))) + SUPPORT_MARGIN_SIGMAS * w
            if reach > grid.spec.box / 2.0 and lbl not in warned:
                warned.add(lbl)
                logger.warning(
                    "packet %s support reaches %.3g, within %g widths of the "
                    "boundary (half-box %.3g) at t=%.4g",
                    lbl, reach, SUPPORT_MARGIN_SIGMAS, grid.spec.box / 2.0, t,
                )
        rec = TimeSeriesRecord(
            step=step_idx, time=t, labels=labels,
            norms=norms, centers=centers, widths=widths,
        )
        if is_branch:
            g1 = _mode_gram(stacked[:, 0], cell)
            g2 = _mode_gram(stacked[:, 1], cell)
            rec.gram1, rec.gram2 = g1, g2
            if gram10 is None:
                gram10, gram20 = g1.copy(), g2.copy()
            rec.gram_drift = float(
                max(np.abs(g1 - gram10).max(), np.abs(g2 - gram20).max())
            )
        else:
            g = _mode_gram(stacked, cell)
            rec.gram = g
            if gram0 is None:
                gram0 = g.copy()
            rec.gram_drift = float(np.abs(g - gram0).max())
        phi, phi_min = stepper.record_potential(stacked)
        rec.phi_min = phi_min
        if not is_branch:
            rec.energy = _energy_from_stack(stacked, params, stepper, phi)
        if measure is not None:
            measure(rec)
        records.append(rec)
        if recorder is not None:
            recorder(rec)

    take_record(0)
    for step_idx in range(1, schedule.n_steps + 1):
        stacked = stepper.step(stacked, schedule.dt, kin_half)
        if not np.all(np.isfinite(stacked.view(float))):
            raise NumericalFailure(
                f"non-finite amplitudes after step {step_idx}", step_index=step_idx
            )
        if step_idx % schedule.record_stride == 0 or step_idx == schedule.n_steps:
            take_record(step_idx)
    return records, _unstack_state(state, stacked)


def _energy_from_stack(
    stacked: np.ndarray,
    params: PhysicalParams,
    stepper: _Stepper,
    phi: np.ndarray | None,
) -> float:
    grid = stepper.grid
    n_tot = float(np.prod(grid.shape))
    w = params.boson_number / 2.0
    fhat = np.fft.fftn(stacked, axes=stepper.axes)
    grad_sq = float(
        np.sum(grid.k_squared * np.sum(np.abs(fhat) ** 2, axis=0))
        * grid.cell_volume / n_tot
    )
    kinetic = w * (params.hbar**2 / (2.0 * params.mass)) * grad_sq
    if phi is None:
        return kinetic
    rho = (w * params.mass) * np.sum(np.abs(stacked) ** 2, axis=0)
    potential = 0.5 * float(np.sum(phi * rho)) * grid.cell_volume
    return kinetic + potential


def energy_functional(
    state: ModeSet,
    params: PhysicalParams,
    sourcing: SourcingMode,
    kernel: GravityKernel | None = None,
) -> float:
    """Conserved energy of the mean-field flow.

    E = sum_packets (N/2) * (hbar^2/2m) * int |grad phi|^2  +  (1/2) int Phi rho,
    with Phi solved from the packets' own expected density.  Defined for
    MEAN_FIELD and NO_GRAVITY sourcing only.
    """
    if sourcing == SourcingMode.BRANCH_RESOLVED:
        raise UsageError("energy_functional is defined for MEAN_FIELD or NO_GRAVITY")
    if not isinstance(state, ModeSet):
        raise UsageError("energy_functional expects a ModeSet")
    stepper = _Stepper(state.grid, params, sourcing)
    if kernel is not None:
        stepper.kernel = kernel
    stacked, _ = _stack_state(state)
    phi, _ = stepper.record_potential(stacked)
    return _energy_from_stack(stacked, params, stepper, phi)

"""Grids, complex fields, inner products, densities, and packet observables.

Everything downstream (Poisson solver, split-step propagator, state
reconstruction) consumes the types defined here.  Fields live on a uniform
periodic grid; spectral wavenumbers follow the standard FFT convention.
All functions are pure: they never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DegenerateInputError, UsageError

PACKET_LABELS = ("1L", "1R", "2L", "2R")

# packets should keep this many widths of clearance from the box edge
SUPPORT_MARGIN_SIGMAS = 5.0


@dataclass(frozen=True)
class GridSpec:
    """Uniform cubic grid: `points` samples per axis over a box of side `box`."""

    dimension: int
    points: int
    box: float

    def __post_init__(self):
        if self.dimension not in (1, 3):
            raise ConfigurationError(f"dimension must be 1 or 3, got {self.dimension}")
        if self.points < 2 or (self.points & (self.points - 1)) != 0:
            raise ConfigurationError(
                f"points per axis must be a power of two >= 2, got {self.points}"
            )
        if not self.box > 0:
            raise ConfigurationError(f"box length must be positive, got {self.box}")

    @property
    def spacing(self) -> float:
        return self.box / self.points


class Grid:
    """Realized grid: coordinate and wavenumber arrays for each axis.

    Coordinates run from -box/2 to box/2 - spacing (cell centers of a
    periodic box); wavenumbers are 2*pi*fftfreq(n, spacing).
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        n, dx = spec.points, spec.spacing
        axis = (np.arange(n) - n // 2) * dx
        k_axis = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
        self.axes = tuple(axis.copy() for _ in range(spec.dimension))
        self.k_axes = tuple(k_axis.copy() for _ in range(spec.dimension))
        if spec.dimension == 1:
            self.coords = (axis,)
            self.k_squared = k_axis**2
        else:
            mesh = np.meshgrid(*self.axes, indexing="ij", sparse=True)
            self.coords = tuple(mesh)
            kx, ky, kz = np.meshgrid(*self.k_axes, indexing="ij", sparse=True)
            self.k_squared = kx**2 + ky**2 + kz**2

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    def spacing(self) -> float:
        return self.spec.spacing

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.spec.points,) * self.spec.dimension

    @property
    def cell_volume(self) -> float:
        return self.spec.spacing**self.spec.dimension

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and self.spec == other.spec

    def __hash__(self):
        return hash(self.spec)


def build_grid(spec: GridSpec) -> Grid:
    """Validate `spec` and return the realized coordinate/wavenumber arrays."""
    return Grid(spec)


@dataclass(frozen=True)
class PhysicalParams:
    """Physical constants of a run (internal units, hbar = mass = 1 by default)."""

    hbar: float = 1.0
    mass: float = 1.0
    boson_number: int = 2
    newton_g: float = 0.0
    softening: float | None = None  # 1D effective-kernel length only

    def __post_init__(self):
        if not self.hbar > 0:
            raise ConfigurationError(f"hbar must be positive, got {self.hbar}")
        if not self.mass > 0:
            raise ConfigurationError(f"mass must be positive, got {self.mass}")
        if self.boson_number < 1:
            raise ConfigurationError(
                f"boson_number must be an integer >= 1, got {self.boson_number}"
            )
        if self.newton_g < 0:
            raise ConfigurationError(f"newton_g must be >= 0, got {self.newton_g}")
        if self.softening is not None and not self.softening > 0:
            raise ConfigurationError(f"softening must be positive, got {self.softening}")


@dataclass
class WavePacket:
    """One complex single-particle wavefunction sampled on a grid."""

    label: str
    values: np.ndarray
    grid: Grid

    def copy(self) -> "WavePacket":
        return WavePacket(self.label, self.values.copy(), self.grid)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))


@dataclass
class ModeSet:
    """The four labeled packets (subsystem 1 and 2, sides L and R) on one grid."""

    packets: dict[str, WavePacket] = field(default_factory=dict)

    def __post_init__(self):
        if tuple(self.packets.keys()) != PACKET_LABELS:
            raise UsageError(
                f"ModeSet requires packets labeled {PACKET_LABELS} in order, "
                f"got {tuple(self.packets.keys())}"
            )
        first = next(iter(self.packets.values())).grid
        for p in self.packets.values():
            if p.grid != first:
                raise UsageError("all ModeSet packets must share one grid")

    @property
    def grid(self) -> Grid:
        return next(iter(self.packets.values())).grid

    def ordered(self) -> list[WavePacket]:
        return [self.packets[lbl] for lbl in PACKET_LABELS]

    def copy(self) -> "ModeSet":
        return ModeSet({lbl: p.copy() for lbl, p in self.packets.items()})


@dataclass
class DensityField:
    """Real nonnegative mass density on a grid."""

    values: np.ndarray
    grid: Grid

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)


def _as_vector(value, dimension: int, name: str) -> np.ndarray:
    vec = np.atleast_1d(np.asarray(value, dtype=float))
    if vec.shape == (1,) and dimension > 1:
        vec = np.repeat(vec, dimension)
    if vec.shape != (dimension,):
        raise ConfigurationError(
            f"{name} must have {dimension} component(s), got shape {vec.shape}"
        )
    return vec


def gaussian_packet(
    grid: Grid,
    center,
    width: float,
    momentum=0.0,
    label: str = "",
) -> WavePacket:
    """Normalized Gaussian packet exp(-(x-c)^2/4w^2) * exp(i k0.x).

    `width` is the standard deviation of the position density |phi|^2.
    Raises ConfigurationError when the width is unresolvable on the grid or
    the 5-sigma support does not fit inside the box.
    """
    dim = grid.dimension
    c = _as_vector(center, dim, "center")
    k0 = _as_vector(momentum if momentum is not None else 0.0, dim, "momentum")
    if not width > grid.spacing:
        raise ConfigurationError(
            f"packet width {width} is unresolvable: must exceed grid spacing "
            f"{grid.spacing}"
        )
    half = grid.spec.box / 2.0
    for ax in range(dim):
        reach = abs(c[ax]) + SUPPORT_MARGIN_SIGMAS * width
        if reach > half:
            raise ConfigurationError(
                f"packet '{label}' support clipped on axis {ax}: "
                f"|center| + {SUPPORT_MARGIN_SIGMAS}*width = {reach} exceeds "
                f"half-box {half}"
            )

    psi = np.ones(grid.shape, dtype=np.complex128)
    for ax in range(dim):
        x = grid.coords[ax]
        psi = psi * np.exp(-((x - c[ax]) ** 2) / (4.0 * width**2) + 1j * k0[ax] * x)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * grid.cell_volume)
    return WavePacket(label, psi, grid)


def inner_product(a: WavePacket, b: WavePacket) -> complex:
    """L2 pairing sum(conj(a)*b)*dV; conjugate-symmetric in its arguments."""
    if a.grid != b.grid:
        raise UsageError("inner_product requires packets on the same grid")
    return complex(np.vdot(a.values, b.values) * a.grid.cell_volume)


def mass_density(
    modes: ModeSet,
    params: PhysicalParams,
    weights=None,
) -> DensityField:
    """Expected mass density rho = sum_p weight_p * m * |phi_p|^2.

    The default weight is N/2 per packet: each subsystem's bosons are in an
    equal superposition of its L and R packets, so every packet carries half
    the subsystem's expected occupation.  Branch-resolved callers override
    the weights (N per occupied packet, 0 per empty).
    """
    packets = modes.ordered()
    if weights is None:
        weights = [params.boson_number / 2.0] * len(packets)
    weights = [float(w) for w in weights]
    if len(weights) != len(packets):
        raise UsageError(f"expected {len(packets)} weights, got {len(weights)}")
    if any(w < 0 for w in weights):
        raise UsageError(f"packet weights must be nonnegative, got {weights}")
    rho = np.zeros(modes.grid.shape, dtype=float)
    for w, p in zip(weights, packets):
        if w != 0.0:
            rho += (w * params.mass) * np.abs(p.values) ** 2
    return DensityField(rho, modes.grid)


def packet_observables(p: WavePacket) -> tuple[float, np.ndarray, float]:
    """Return (norm, mean position, rms width) of a packet.

    Width is the per-axis-averaged standard deviation of |phi|^2: for an
    isotropic Gaussian it equals the Gaussian width parameter.
    """
    prob = np.abs(p.values) ** 2
    total = float(np.sum(prob))
    if total <= 0.0 or not np.isfinite(total):
        raise DegenerateInputError("packet has zero (or non-finite) norm")
    norm = float(np.sqrt(total * p.grid.cell_volume))
    prob = prob / total
    dim = p.grid.dimension
    mean = np.empty(dim)
    var = np.empty(dim)
    for ax in range(dim):
        x = p.grid.coords[ax]
        mean[ax] = float(np.sum(prob * x))
        var[ax] = float(np.sum(prob * (x - mean[ax]) ** 2))
    width = float(np.sqrt(var.mean()))
    return norm, mean, width

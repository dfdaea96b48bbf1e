"""Free-space Newtonian potential from a mass density.

The potential is the Green's-function convolution Phi = K * rho computed on
a 2x zero-padded grid (Hockney's method), so the boundary conditions are
isolated: gravity never sees periodic images of the sources.

Kernel conventions:
  3D   K(r) = -G / r, with the r = 0 cell assigned the analytic average of
       -G/r over one cubic cell (removes the grid-level self-energy spike
       without biasing long-range values).
  1D   K(x) = -G / sqrt(x^2 + a^2), a > 0: a line-resolved density is
       treated as three-dimensional matter of transverse extent ~a, because
       a true 1D Poisson potential (~|x|) has the wrong long-range behavior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UsageError
from .gridfield import DensityField, Grid, PhysicalParams

# mean of 1/|x| over a unit cube centered on the origin:
# 6*ln((1+sqrt(3))/sqrt(2)) - pi/2
CELL_AVERAGE_INV_R = 6.0 * np.log((1.0 + np.sqrt(3.0)) / np.sqrt(2.0)) - np.pi / 2.0


@dataclass
class PotentialField:
    """Real gravitational potential on a grid (energy per unit mass)."""

    values: np.ndarray
    grid: Grid

    def minimum(self) -> float:
        return float(self.values.min())


class GravityKernel:
    """Tabulated Green's function on the zero-padded grid, FFT-ready."""

    def __init__(self, grid: Grid, newton_g: float, softening: float | None):
        self.grid = grid
        self.newton_g = newton_g
        self.softening = softening
        n, dx = grid.spec.points, grid.spacing
        # signed min-image displacements on the doubled grid cover every
        # source-target separation of the physical grid exactly once
        idx = np.arange(2 * n)
        disp = np.where(idx <= n, idx, idx - 2 * n) * dx
        if grid.dimension == 1:
            if softening is None or not softening > 0:
                raise ConfigurationError(
                    "1D gravity requires a positive softening length"
                )
            kernel = -newton_g / np.sqrt(disp**2 + softening**2)
        else:
            dx2 = disp**2
            r = np.sqrt(
                dx2[:, None, None] + dx2[None, :, None] + dx2[None, None, :]
            )
            with np.errstate(divide="ignore"):
                kernel = -newton_g / r
            kernel[0, 0, 0] = -newton_g * CELL_AVERAGE_INV_R / dx
        self.kernel_fft = np.fft.rfftn(kernel)
        self._padded_shape = kernel.shape


def build_kernel(grid: Grid, params: PhysicalParams) -> GravityKernel:
    """Tabulate the free-space kernel for `grid` (softening used in 1D only)."""
    return GravityKernel(grid, params.newton_g, params.softening)


def solve_potential(density: DensityField, kernel: GravityKernel) -> PotentialField:
    """Phi = kernel (*) density via padded spectral convolution."""
    if density.grid != kernel.grid:
        raise UsageError("density and kernel grids differ")
    grid = density.grid
    n = grid.spec.points
    pad = np.zeros(kernel._padded_shape, dtype=float)
    pad[(slice(0, n),) * grid.dimension] = density.values
    conv = np.fft.irfftn(np.fft.rfftn(pad) * kernel.kernel_fft, s=kernel._padded_shape)
    phi = conv[(slice(0, n),) * grid.dimension] * grid.cell_volume
    return PotentialField(phi, grid)

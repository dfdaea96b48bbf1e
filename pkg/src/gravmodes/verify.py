"""Bundled oracle battery: independent re-derivations of the core results.

Each item checks one numerical component against a route that shares no code
with the implementation under test (quadrature, direct summation, closed
forms, brute-force ladder algebra).  Items never raise on mismatch; they
report pass/fail with the measured error so `gravmodes verify` can print a
complete table either way.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.integrate import quad

from .entanglement import block_entropy, branch_entanglement
from .fock import (
    FockExpansion,
    apply_creation,
    creation_power,
    lowdin_orthonormalize,
    mode_coefficients_from_gram,
    nboson_overlap,
    pair_block_state,
    tensor_blocks,
)
from .gridfield import (
    DensityField,
    Grid,
    GridSpec,
    ModeSet,
    PhysicalParams,
    gaussian_packet,
    inner_product,
)
from .poisson import CELL_AVERAGE_INV_R, build_kernel, solve_potential
from .propagate import Schedule, SourcingMode, evolve


@dataclass
class VerificationItem:
    name: str
    suite: str  # "1d", "3d", or "algebra"
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""


def _item(name, suite, measured, tolerance, detail="") -> VerificationItem:
    return VerificationItem(
        name, suite, bool(measured < tolerance), float(measured), tolerance, detail
    )


# ---------------------------------------------------------------------------
# oracles reused by the test suite
# ---------------------------------------------------------------------------

def gaussian_overlap_quadrature(separation: float, width: float) -> float:
    """|<phi_L|phi_R>| for two unit Gaussians a distance `separation` apart,
    by direct numerical quadrature of the overlap integrand."""
    norm = (2.0 * np.pi * width**2) ** -0.5

    def integrand(x):
        return norm * np.exp(
            -((x + separation / 2) ** 2 + (x - separation / 2) ** 2)
            / (4.0 * width**2)
        )

    val, _err = quad(integrand, -np.inf, np.inf)
    return float(val)


def free_gaussian_width(width0: float, t: float, hbar: float, mass: float) -> float:
    """Analytic dispersion of a free Gaussian packet."""
    return width0 * np.sqrt(1.0 + (hbar * t / (2.0 * mass * width0**2)) ** 2)


def direct_potential(density: DensityField, kernel_values, targets) -> np.ndarray:
    """Direct O(n_targets * n_cells) summation of the Green's-function
    convolution; `kernel_values(r2)` maps squared separations to kernel
    values.  The independent route checked against the FFT solver."""
    grid = density.grid
    mesh = np.meshgrid(*grid.axes, indexing="ij")
    pos = np.stack([m.ravel() for m in mesh], axis=1)
    rho = density.values.ravel()
    out = np.empty(len(targets))
    for i, target in enumerate(targets):
        delta = pos - np.asarray(target)[None, :]
        r2 = np.sum(delta**2, axis=1)
        out[i] = np.sum(kernel_values(r2) * rho) * grid.cell_volume
    return out


def lowdin_2x2_closed_form(s: float) -> np.ndarray:
    """G^(-1/2) for G = [[1, s], [s, 1]] from the analytic eigensystem."""
    a = 0.5 * (1.0 / np.sqrt(1.0 + s) + 1.0 / np.sqrt(1.0 - s))
    b = 0.5 * (1.0 / np.sqrt(1.0 + s) - 1.0 / np.sqrt(1.0 - s))
    return np.array([[a, b], [b, a]])


def random_gram(rng: np.random.Generator, size: int) -> np.ndarray:
    """Unit-diagonal PSD Gram of `size` random unit vectors in C^size."""
    vecs = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
    vecs /= np.linalg.norm(vecs, axis=0, keepdims=True)
    return vecs.conj().T @ vecs


def branch_report_by_occupation(gram1, gram2, boson_number, amplitudes=None):
    """Brute-force route for branch entanglement: embed every branch packet
    in an explicit orthonormal basis, build the full many-boson expansion by
    iterated apply_creation, and measure block_entropy."""
    gram1 = np.asarray(gram1, dtype=complex)
    gram2 = np.asarray(gram2, dtype=complex)
    n = gram1.shape[0]
    if amplitudes is None:
        amplitudes = np.full(n, 1.0 / n, dtype=complex)
    c1 = mode_coefficients_from_gram(gram1)
    c2 = mode_coefficients_from_gram(gram2)
    total: FockExpansion | None = None
    for b in range(n):
        vec1 = np.concatenate([c1[b], np.zeros(n)])
        vec2 = np.concatenate([np.zeros(n), c2[b]])
        e = FockExpansion.vacuum(2 * n)
        for _ in range(boson_number):
            e = apply_creation(e, vec1)
        for _ in range(boson_number):
            e = apply_creation(e, vec2)
        e = e.scaled(complex(amplitudes[b]))
        total = e if total is None else total.add(e)
    total.split = n
    return block_entropy(total.normalized())


# ---------------------------------------------------------------------------
# battery items
# ---------------------------------------------------------------------------

def _check_gaussian_overlap_1d() -> VerificationItem:
    spec = GridSpec(dimension=1, points=1024, box=64.0)
    grid = Grid(spec)
    width, sep = 1.0, 4.0
    left = gaussian_packet(grid, -sep / 2, width, label="L")
    right = gaussian_packet(grid, +sep / 2, width, label="R")
    measured = abs(inner_product(left, right))
    oracle = gaussian_overlap_quadrature(sep, width)
    return _item(
        "gaussian-overlap-quadrature", "1d", abs(measured - oracle), 1e-10,
        f"grid {measured:.12f} vs quadrature {oracle:.12f}",
    )


def _free_spread_error(dimension: int, points: int, box: float, t_final: float,
                       dt: float, centers, width0: float) -> float:
    grid = Grid(GridSpec(dimension=dimension, points=points, box=box))
    params = PhysicalParams(newton_g=0.0)
    packets = {}
    for lbl, c in zip(("1L", "1R", "2L", "2R"), centers):
        center = (c,) + (0.0,) * (dimension - 1)
        packets[lbl] = gaussian_packet(grid, center, width0, label=lbl)
    state = ModeSet(packets)
    n_steps = int(round(t_final / dt))
    schedule = Schedule(dt=dt, n_steps=n_steps, record_stride=max(1, n_steps // 8))
    records, _ = evolve(state, params, schedule, SourcingMode.NO_GRAVITY)
    worst = 0.0
    for rec in records:
        expected = free_gaussian_width(width0, rec.time, params.hbar, params.mass)
        for lbl in state.packets:
            worst = max(worst, abs(rec.widths[lbl] - expected) / expected)
    return worst


def _check_free_spreading_1d() -> VerificationItem:
    err = _free_spread_error(
        dimension=1, points=1024, box=64.0, t_final=4.0, dt=3e-4,
        centers=(-12.0, -4.0, 4.0, 12.0), width0=1.0,
    )
    return _item("free-spreading-analytic", "1d", err, 1e-6,
                 "max relative width deviation over the run")


def _check_poisson_direct_1d(fault: bool) -> VerificationItem:
    grid = Grid(GridSpec(dimension=1, points=512, box=64.0))
    params = PhysicalParams(newton_g=1.0, softening=1.5)
    x = grid.coords[0]
    rho = np.exp(-((x + 6) ** 2) / 2.0) + 0.5 * np.exp(-((x - 9) ** 2) / 4.5)
    density = DensityField(rho, grid)
    kernel = build_kernel(grid, params)
    if fault:
        kernel.kernel_fft = kernel.kernel_fft * 1.01
    phi = solve_potential(density, kernel).values
    targets = [(float(xi),) for xi in x[::8]]
    a2 = params.softening**2
    oracle = direct_potential(
        density, lambda r2: -params.newton_g / np.sqrt(r2 + a2), targets
    )
    err = float(np.max(np.abs(phi[::8] - oracle)) / np.max(np.abs(oracle)))
    return _item("poisson-direct-sum", "1d", err, 1e-10,
                 "softened free-space kernel vs direct summation")


def _check_poisson_direct_3d(fault: bool) -> VerificationItem:
    grid = Grid(GridSpec(dimension=3, points=32, box=16.0))
    params = PhysicalParams(newton_g=1.0)
    sigma, total_mass = 1.2, 2.0
    mesh = np.meshgrid(*grid.axes, indexing="ij")
    r2 = sum(m**2 for m in mesh)
    rho = total_mass * (2 * np.pi * sigma**2) ** -1.5 * np.exp(-r2 / (2 * sigma**2))
    density = DensityField(rho, grid)
    kernel = build_kernel(grid, params)
    if fault:
        kernel.kernel_fft = kernel.kernel_fft * 1.01
    phi = solve_potential(density, kernel).values
    dx = grid.spacing
    cell_avg = CELL_AVERAGE_INV_R / dx

    def kernel_values(r2_arr):
        out = np.where(r2_arr > 0, 1.0 / np.sqrt(np.where(r2_arr > 0, r2_arr, 1.0)),
                       cell_avg)
        return -params.newton_g * out

    axis = grid.axes[0]
    n_half = len(axis) // 2
    targets = [(float(axis[n_half + k]), 0.0, 0.0) for k in range(0, 12)]
    oracle = direct_potential(density, kernel_values, targets)
    got = np.array([phi[n_half + k, n_half, n_half] for k in range(0, 12)])
    err = float(np.max(np.abs(got - oracle) / np.abs(oracle)))
    return _item("poisson-direct-sum", "3d", err, 1e-8,
                 "Gaussian blob vs direct summation on the axis")


def _check_poisson_farfield_3d() -> VerificationItem:
    grid = Grid(GridSpec(dimension=3, points=32, box=24.0))
    params = PhysicalParams(newton_g=1.0)
    sigma, total_mass = 1.0, 3.0
    mesh = np.meshgrid(*grid.axes, indexing="ij")
    r2 = sum(m**2 for m in mesh)
    rho = total_mass * (2 * np.pi * sigma**2) ** -1.5 * np.exp(-r2 / (2 * sigma**2))
    phi = solve_potential(DensityField(rho, grid), build_kernel(grid, params)).values
    axis = grid.axes[0]
    n_half = len(axis) // 2
    worst = 0.0
    for k in range(len(axis)):
        r = abs(axis[k])
        if 8.0 <= r <= 11.0:
            ratio = -phi[k, n_half, n_half] * r / (params.newton_g * total_mass)
            worst = max(worst, abs(ratio - 1.0))
    return _item("poisson-farfield", "3d", worst, 1e-2,
                 "r*Phi -> -G*M in the far field")


def _check_cell_average_3d() -> VerificationItem:
    # geometric reduction: mean of 1/r over the unit cube equals
    # (1/2) * integral over directions of R(Omega)^2, R = 1/(2 max|u_i|)
    n = 1500
    theta = (np.arange(n) + 0.5) * np.pi / n
    phi_a = (np.arange(2 * n) + 0.5) * 2.0 * np.pi / (2 * n)
    t_grid, p_grid = np.meshgrid(theta, phi_a, indexing="ij")
    ux = np.sin(t_grid) * np.cos(p_grid)
    uy = np.sin(t_grid) * np.sin(p_grid)
    uz = np.cos(t_grid)
    r_dir = 1.0 / (2.0 * np.maximum(np.maximum(np.abs(ux), np.abs(uy)), np.abs(uz)))
    integral = float(
        np.sum(0.5 * r_dir**2 * np.sin(t_grid)) * (np.pi / n) * (np.pi / n)
    )
    return _item("kernel-cell-average", "3d", abs(integral - CELL_AVERAGE_INV_R),
                 1e-5, f"quadrature {integral:.9f} vs constant "
                       f"{CELL_AVERAGE_INV_R:.9f}")


def _check_free_spreading_3d() -> VerificationItem:
    err = _free_spread_error(
        dimension=3, points=32, box=32.0, t_final=1.2, dt=2e-2,
        centers=(-8.0, -3.0, 3.0, 8.0), width0=1.2,
    )
    return _item("free-spreading-analytic", "3d", err, 1e-6,
                 "max relative width deviation over the run")


def _check_lowdin_2x2() -> VerificationItem:
    worst = 0.0
    for s in (0.1, 0.45, 0.8):
        gram = np.array([[1.0, s], [s, 1.0]], dtype=complex)
        got = lowdin_orthonormalize(gram)
        worst = max(worst, float(np.max(np.abs(got - lowdin_2x2_closed_form(s)))))
    return _item("lowdin-2x2-closed-form", "algebra", worst, 1e-12)


def _check_nboson_bruteforce() -> VerificationItem:
    rng = np.random.default_rng(7)
    worst = 0.0
    for n_bosons in range(1, 7):
        radius = rng.uniform(0.2, 0.95)
        angle = rng.uniform(0.0, 2.0 * np.pi)
        s = radius * np.exp(1j * angle)
        c1 = np.array([1.0, 0.0], dtype=complex)
        c2 = np.array([s, np.sqrt(1.0 - abs(s) ** 2)], dtype=complex)
        e1 = FockExpansion.vacuum(2)
        e2 = FockExpansion.vacuum(2)
        for _ in range(n_bosons):
            e1 = apply_creation(e1, c1)
            e2 = apply_creation(e2, c2)
        brute = e1.overlap(e2) / float(factorial(n_bosons))
        worst = max(worst, abs(brute - nboson_overlap(s, n_bosons)))
    return _item("nboson-overlap-bruteforce", "algebra", worst, 1e-12)


def _check_pair_block_bruteforce() -> VerificationItem:
    rng = np.random.default_rng(11)
    worst = 0.0
    for n_bosons in range(1, 5):
        for _ in range(4):
            c_l = rng.normal(size=2) + 1j * rng.normal(size=2)
            c_r = rng.normal(size=2) + 1j * rng.normal(size=2)
            c_l /= np.linalg.norm(c_l)
            c_r /= np.linalg.norm(c_r)
            closed = pair_block_state(c_l, c_r, n_bosons)
            brute_l = FockExpansion.vacuum(2)
            brute_r = FockExpansion.vacuum(2)
            for _ in range(n_bosons):
                brute_l = apply_creation(brute_l, c_l)
                brute_r = apply_creation(brute_r, c_r)
            brute = brute_l.add(brute_r).normalized()
            keys = set(closed.coeffs) | set(brute.coeffs)
            worst = max(
                worst,
                max(
                    abs(closed.coeffs.get(k, 0.0) - brute.coeffs.get(k, 0.0))
                    for k in keys
                ),
            )
    return _item("pair-block-bruteforce", "algebra", worst, 1e-12)


def _check_branch_vs_occupation() -> VerificationItem:
    rng = np.random.default_rng(13)
    worst = 0.0
    for n_bosons in (1, 2):
        for _ in range(3):
            g1 = random_gram(rng, 4)
            g2 = random_gram(rng, 4)
            amps = rng.normal(size=4) + 1j * rng.normal(size=4)
            fast = branch_entanglement(g1, g2, n_bosons, amps)
            brute = branch_report_by_occupation(g1, g2, n_bosons, amps)
            worst = max(
                worst,
                abs(fast.von_neumann_entropy_bits - brute.von_neumann_entropy_bits),
                abs(fast.log_negativity_bits - brute.log_negativity_bits),
            )
    return _item("branch-vs-occupation", "algebra", worst, 1e-10)


def _check_tensor_rank1() -> VerificationItem:
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(20):
        n_bosons = int(rng.integers(1, 4))
        blocks = []
        for _ in range(2):
            c_l = rng.normal(size=2) + 1j * rng.normal(size=2)
            c_r = rng.normal(size=2) + 1j * rng.normal(size=2)
            blocks.append(
                pair_block_state(c_l / np.linalg.norm(c_l),
                                 c_r / np.linalg.norm(c_r), n_bosons)
            )
        state = tensor_blocks(blocks[0], blocks[1])
        rep = block_entropy(state)
        worst = max(worst, rep.von_neumann_entropy_bits)
    return _item("tensor-blocks-rank1", "algebra", worst, 1e-10,
                 "entropy of factored states stays at zero")


def run_battery(
    suites=("1d", "3d", "algebra"),
    inject_kernel_fault: bool = False,
) -> list[VerificationItem]:
    items: list[VerificationItem] = []
    if "1d" in suites:
        items.append(_check_gaussian_overlap_1d())
        items.append(_check_free_spreading_1d())
        items.append(_check_poisson_direct_1d(inject_kernel_fault))
    if "3d" in suites:
        items.append(_check_poisson_direct_3d(inject_kernel_fault))
        items.append(_check_poisson_farfield_3d())
        items.append(_check_cell_average_3d())
        items.append(_check_free_spreading_3d())
    if "algebra" in suites:
        items.append(_check_lowdin_2x2())
        items.append(_check_nboson_bruteforce())
        items.append(_check_pair_block_bruteforce())
        items.append(_check_branch_vs_occupation())
        items.append(_check_tensor_rank1())
    return items


def format_report(items: list[VerificationItem]) -> str:
    lines = []
    for suite in ("1d", "3d", "algebra"):
        chosen = [it for it in items if it.suite == suite]
        if not chosen:
            continue
        lines.append(f"suite {suite}:")
        for it in chosen:
            status = "PASS" if it.passed else "FAIL"
            lines.append(
                f"  [{status}] {it.name:30s} error {it.measured:.3e} "
                f"(tolerance {it.tolerance:.0e})"
                + (f"  {it.detail}" if it.detail else "")
            )
    n_fail = sum(not it.passed for it in items)
    lines.append(
        f"{len(items) - n_fail}/{len(items)} items passed"
        + (f", {n_fail} FAILED" if n_fail else "")
    )
    return "\n".join(lines)

"""Run orchestration: build the scenario, evolve, persist artifacts.

A run writes three files into the output directory:

    manifest.json    resolved configuration (defaults echoed) + code version
    timeseries.csv   one row per record, columns documented in the README
    summary.json     final verdict and the run-level extrema

CSV columns, in order: time, then per packet [norm, center (one column per
axis in 3D), width], then gram_drift, cross_block, phi_min, energy,
entropy_bits, negativity_bits.  Fields that do not apply to a run (e.g.
energy for branch-resolved sourcing) are left blank.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, render_manifest
from .entanglement import (
    block_entropy,
    branch_entanglement,
    cross_block_diagnostic,
)
from .fock import mode_coefficients_from_gram, pair_block_state, tensor_blocks
from .gridfield import Grid, ModeSet, gaussian_packet
from .propagate import (
    BranchSet,
    SourcingMode,
    TimeSeriesRecord,
    evolve,
)

ENTROPY_VERDICT_THRESHOLD = 1e-9  # bits
NEGATIVITY_VERDICT_THRESHOLD = 0.01  # bits


@dataclass
class RunResult:
    config: ScenarioConfig
    records: list[TimeSeriesRecord]
    summary: dict
    output_dir: Path | None


def build_modeset(config: ScenarioConfig) -> ModeSet:
    grid = Grid(config.grid)
    packets = {
        lbl: gaussian_packet(grid, spec.center, spec.width, spec.momentum, lbl)
        for lbl, spec in config.packets.items()
    }
    return ModeSet(packets)


def mean_field_entanglement(gram: np.ndarray, boson_number: int):
    """Reconstruct the block-factorized state from the 4x4 packet Gram and
    measure its 1|2 entanglement.

    Each subsystem's two nonorthogonal modes are orthonormalized separately
    (symmetric Loewdin); cross-block overlaps are not absorbed -- they are
    reported through cross_block_diagnostic and bound the reconstruction's
    validity.
    """
    c1 = mode_coefficients_from_gram(gram[:2, :2])
    c2 = mode_coefficients_from_gram(gram[2:, 2:])
    e1 = pair_block_state(c1[0], c1[1], boson_number)
    e2 = pair_block_state(c2[0], c2[1], boson_number)
    return block_entropy(tensor_blocks(e1, e2))


def _make_measure(config: ScenarioConfig, is_branch: bool):
    counter = {"n": 0}
    stride = config.entanglement_stride
    n_bosons = config.params.boson_number

    def measure(rec: TimeSeriesRecord):
        due = counter["n"] % stride == 0
        counter["n"] += 1
        if is_branch:
            if due:
                rep = branch_entanglement(rec.gram1, rec.gram2, n_bosons)
                rec.entropy_bits = rep.von_neumann_entropy_bits
                rec.negativity_bits = rep.log_negativity_bits
            return
        rec.cross_block = cross_block_diagnostic(rec.gram)
        if due:
            rep = mean_field_entanglement(rec.gram, n_bosons)
            rec.entropy_bits = rep.von_neumann_entropy_bits
            rec.negativity_bits = rep.log_negativity_bits

    return measure


def _csv_header(dimension: int, labels: tuple[str, ...]) -> list[str]:
    cols = ["time"]
    axis_names = ("x", "y", "z")
    for lbl in labels:
        cols.append(f"norm_{lbl}")
        if dimension == 1:
            cols.append(f"center_{lbl}")
        else:
            cols.extend(f"center_{lbl}_{axis_names[a]}" for a in range(dimension))
        cols.append(f"width_{lbl}")
    cols.extend(
        ["gram_drift", "cross_block", "phi_min", "energy",
         "entropy_bits", "negativity_bits"]
    )
    return cols


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _csv_row(rec: TimeSeriesRecord, dimension: int) -> list[str]:
    row = [_fmt(rec.time)]
    for lbl in rec.labels:
        row.append(_fmt(rec.norms[lbl]))
        row.extend(_fmt(c) for c in rec.centers[lbl])
        row.append(_fmt(rec.widths[lbl]))
    row.extend(
        [
            _fmt(rec.gram_drift),
            _fmt(rec.cross_block),
            _fmt(rec.phi_min),
            _fmt(rec.energy),
            _fmt(rec.entropy_bits),
            _fmt(rec.negativity_bits),
        ]
    )
    return row


def summarize(config: ScenarioConfig, records: list[TimeSeriesRecord]) -> dict:
    is_branch = config.sourcing == SourcingMode.BRANCH_RESOLVED
    entropies = [r.entropy_bits for r in records if r.entropy_bits is not None]
    negativities = [
        r.negativity_bits for r in records if r.negativity_bits is not None
    ]
    cross = [r.cross_block for r in records if r.cross_block is not None]
    energies = [r.energy for r in records if r.energy is not None]
    if energies and abs(energies[0]) > 0:
        energy_drift = max(abs(e - energies[0]) for e in energies) / abs(energies[0])
    elif energies:
        energy_drift = max(abs(e - energies[0]) for e in energies)
    else:
        energy_drift = None

    summary = {
        "scenario": config.name,
        "sourcing": config.sourcing.value,
        "records": len(records),
        "final_time": records[-1].time,
        "max_gram_drift": max(r.gram_drift for r in records),
        "max_cross_block": max(cross) if cross else None,
        "cross_block_threshold": config.cross_block_threshold,
        "min_phi": min(r.phi_min for r in records),
        "energy_drift_rel": energy_drift,
        "max_entropy_bits": max(entropies) if entropies else None,
        "final_entropy_bits": entropies[-1] if entropies else None,
        "max_negativity_bits": max(negativities) if negativities else None,
        "final_negativity_bits": negativities[-1] if negativities else None,
    }

    if is_branch:
        entangled = (
            summary["final_negativity_bits"] is not None
            and summary["final_negativity_bits"] > NEGATIVITY_VERDICT_THRESHOLD
        )
        summary["verdict"] = "entangled" if entangled else "product-state"
    else:
        certified = (
            summary["max_cross_block"] is not None
            and summary["max_cross_block"] < config.cross_block_threshold
        )
        if not certified:
            summary["verdict"] = "uncertified (cross-block overlaps above threshold)"
        elif summary["max_entropy_bits"] is not None and (
            summary["max_entropy_bits"] < ENTROPY_VERDICT_THRESHOLD
        ):
            summary["verdict"] = "product-state"
        else:
            summary["verdict"] = "entangled"
    return summary


def run(config: ScenarioConfig, output_dir=None, write_outputs: bool = True) -> RunResult:
    """Execute a scenario end to end.

    With write_outputs=False (library/test use) no files are touched and
    only the in-memory records and summary are returned.
    """
    modes = build_modeset(config)
    if config.sourcing == SourcingMode.BRANCH_RESOLVED:
        state = BranchSet.from_modes(modes)
    else:
        state = modes
    is_branch = config.sourcing == SourcingMode.BRANCH_RESOLVED

    records, _final = evolve(
        state,
        config.params,
        config.schedule,
        config.sourcing,
        measure=_make_measure(config, is_branch),
        phase_guard=config.phase_guard,
        exclude_self_gravity=config.exclude_self_gravity,
    )
    summary = summarize(config, records)

    out_path: Path | None = None
    if write_outputs:
        out_path = Path(output_dir) if output_dir is not None else Path(config.output_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        (out_path / "manifest.json").write_text(
            json.dumps(render_manifest(config), indent=2) + "\n"
        )
        with open(out_path / "timeseries.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_csv_header(config.grid.dimension, records[0].labels))
            for rec in records:
                writer.writerow(_csv_row(rec, config.grid.dimension))
        (out_path / "summary.json").write_text(
            json.dumps(summary, indent=2) + "\n"
        )
    return RunResult(config, records, summary, out_path)

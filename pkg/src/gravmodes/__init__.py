"""Self-gravitating wavepacket evolution and mode-entanglement diagnostics.

Four boson wavepackets evolve under a shared Newtonian mean-field potential
(or under branch-resolved gravity as a positive control); the exact
many-boson state over the evolved modes is reconstructed and its 1|2
subsystem entanglement measured.
"""

__version__ = "0.1.0"

from .entanglement import (
    EntanglementReport,
    block_entropy,
    branch_entanglement,
    cross_block_diagnostic,
    ideal_branch_grams,
)
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    GravmodesError,
    NumericalFailure,
    ParseError,
    StepSizeError,
    UsageError,
)
from .fock import (
    FockExpansion,
    apply_creation,
    creation_power,
    gram_sqrt,
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
    WavePacket,
    build_grid,
    gaussian_packet,
    inner_product,
    mass_density,
    packet_observables,
)
from .poisson import GravityKernel, PotentialField, build_kernel, solve_potential
from .propagate import (
    BranchSet,
    Schedule,
    SourcingMode,
    TimeSeriesRecord,
    energy_functional,
    evolve,
    gram_matrix,
    strang_step,
)
from .config import PRESETS, ScenarioConfig, parse_config, preset_text
from .runner import RunResult, build_modeset, mean_field_entanglement, run

__all__ = [
    "__version__",
    "BranchSet", "ConfigurationError", "DegenerateInputError", "DensityField",
    "EntanglementReport", "FockExpansion", "GravityKernel", "GravmodesError",
    "Grid", "GridSpec", "ModeSet", "NumericalFailure", "ParseError",
    "PhysicalParams", "PotentialField", "PRESETS", "RunResult",
    "ScenarioConfig", "Schedule", "SourcingMode", "StepSizeError",
    "TimeSeriesRecord", "UsageError", "WavePacket",
    "apply_creation", "block_entropy", "branch_entanglement", "build_grid",
    "build_kernel", "build_modeset", "creation_power", "cross_block_diagnostic",
    "energy_functional", "evolve", "gaussian_packet", "gram_matrix",
    "gram_sqrt", "ideal_branch_grams", "inner_product",
    "lowdin_orthonormalize", "mass_density", "mean_field_entanglement",
    "mode_coefficients_from_gram", "nboson_overlap", "packet_observables",
    "pair_block_state", "parse_config", "preset_text", "run",
    "solve_potential", "strang_step", "tensor_blocks",
]

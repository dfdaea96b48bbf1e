"""Scenario configuration: sectioned key-value documents, presets, manifests.

The config grammar is plain INI (stdlib configparser) with sections

    [grid]      dimension, points, box
    [physics]   hbar, mass, boson_number, newton_g, softening
    [packets.X] center, width, momentum      (X in 1L, 1R, 2L, 2R)
    [schedule]  dt, steps, record_stride
    [run]       name, sourcing, entanglement_stride, cross_block_threshold,
                phase_guard, exclude_self_gravity
    [output]    directory

Unknown sections or keys are parse errors; every default that influences a
run is echoed into the manifest.  Vector values (3D centers/momenta) are
comma-separated.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigurationError, ParseError
from .gridfield import PACKET_LABELS, GridSpec, PhysicalParams
from .propagate import DEFAULT_PHASE_GUARD, Schedule, SourcingMode

_GRID_KEYS = {"dimension", "points", "box"}
_PHYSICS_KEYS = {"hbar", "mass", "boson_number", "newton_g", "softening"}
_PACKET_KEYS = {"center", "width", "momentum"}
_SCHEDULE_KEYS = {"dt", "steps", "record_stride"}
_RUN_KEYS = {
    "name",
    "sourcing",
    "entanglement_stride",
    "cross_block_threshold",
    "phase_guard",
    "exclude_self_gravity",
}
_OUTPUT_KEYS = {"directory"}

DEFAULT_CROSS_BLOCK_THRESHOLD = 1e-6


@dataclass(frozen=True)
class PacketSpec:
    center: tuple[float, ...]
    width: float
    momentum: tuple[float, ...]


@dataclass
class ScenarioConfig:
    name: str
    grid: GridSpec
    params: PhysicalParams
    packets: dict[str, PacketSpec]
    schedule: Schedule
    sourcing: SourcingMode
    entanglement_stride: int = 1
    cross_block_threshold: float = DEFAULT_CROSS_BLOCK_THRESHOLD
    phase_guard: float = DEFAULT_PHASE_GUARD
    exclude_self_gravity: bool = False
    output_dir: str = ""
    softening_source: str = "explicit"  # manifest bookkeeping
    defaults_applied: dict[str, str] = field(default_factory=dict)


def _fail(section: str, key: str | None, why: str):
    where = f"[{section}]" + (f" {key}" if key else "")
    raise ParseError(f"{where}: {why}")


def _get_float(sec, section: str, key: str, default=None) -> float:
    if key not in sec:
        if default is None:
            _fail(section, key, "required key is missing")
        return default
    try:
        return float(sec[key])
    except ValueError:
        _fail(section, key, f"not a number: {sec[key]!r}")


def _get_int(sec, section: str, key: str, default=None) -> int:
    if key not in sec:
        if default is None:
            _fail(section, key, "required key is missing")
        return default
    try:
        return int(sec[key])
    except ValueError:
        _fail(section, key, f"not an integer: {sec[key]!r}")


def _get_bool(sec, section: str, key: str, default: bool) -> bool:
    if key not in sec:
        return default
    text = sec[key].strip().lower()
    if text in ("true", "yes", "on", "1"):
        return True
    if text in ("false", "no", "off", "0"):
        return False
    _fail(section, key, f"not a boolean: {sec[key]!r}")


def _get_vector(sec, section: str, key: str, dimension: int, default=None):
    if key not in sec:
        if default is None:
            _fail(section, key, "required key is missing")
        return default
    parts = [p for p in sec[key].replace(",", " ").split() if p]
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        _fail(section, key, f"not a number list: {sec[key]!r}")
    if len(values) == 1 and dimension > 1:
        values = values * dimension
    if len(values) != dimension:
        _fail(
            section, key,
            f"expected {dimension} component(s), got {len(values)}",
        )
    return values


def _check_keys(parser, section: str, allowed: set[str]):
    unknown = set(parser[section].keys()) - allowed
    if unknown:
        _fail(section, sorted(unknown)[0], "unknown key")


def parse_config(text: str, overrides: list[str] | None = None) -> ScenarioConfig:
    """Parse and validate a scenario document; apply key=value overrides.

    Overrides use dotted paths into sections, e.g. ``physics.boson_number=4``
    or ``packets.1L.center=-70``.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParseError(f"malformed config document: {exc}") from exc

    for item in overrides or []:
        if "=" not in item:
            raise ParseError(f"override {item!r} is not of the form section.key=value")
        path, value = item.split("=", 1)
        if "." not in path:
            raise ParseError(f"override path {path!r} must contain a section")
        section, key = path.rsplit(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser[section][key] = value

    known = {"grid", "physics", "schedule", "run", "output"}
    packet_sections = {f"packets.{lbl}" for lbl in PACKET_LABELS}
    for section in parser.sections():
        if section not in known and section not in packet_sections:
            raise ParseError(f"[{section}]: unknown section")
    for section in ("grid", "schedule"):
        if not parser.has_section(section):
            raise ParseError(f"[{section}]: required section is missing")
    for lbl in PACKET_LABELS:
        if not parser.has_section(f"packets.{lbl}"):
            raise ParseError(f"[packets.{lbl}]: missing packet section "
                             f"(labels must cover exactly {PACKET_LABELS})")

    defaults_applied: dict[str, str] = {}

    _check_keys(parser, "grid", _GRID_KEYS)
    g = parser["grid"]
    dimension = _get_int(g, "grid", "dimension")
    points = _get_int(g, "grid", "points")
    box = _get_float(g, "grid", "box")
    try:
        grid = GridSpec(dimension=dimension, points=points, box=box)
    except ConfigurationError as exc:
        _fail("grid", None, str(exc))

    packets: dict[str, PacketSpec] = {}
    for lbl in PACKET_LABELS:
        section = f"packets.{lbl}"
        _check_keys(parser, section, _PACKET_KEYS)
        sec = parser[section]
        center = _get_vector(sec, section, "center", dimension)
        width = _get_float(sec, section, "width")
        momentum = _get_vector(
            sec, section, "momentum", dimension, default=(0.0,) * dimension
        )
        if "momentum" not in sec:
            defaults_applied[f"{section}.momentum"] = "0"
        if not width > grid.spacing:
            _fail(section, "width",
                  f"width {width} must exceed the grid spacing {grid.spacing}")
        for ax in range(dimension):
            if abs(center[ax]) + 5.0 * width > box / 2.0:
                _fail(section, "center",
                      f"support |center| + 5*width = "
                      f"{abs(center[ax]) + 5.0 * width} exceeds half-box {box / 2.0}"
                      f" on axis {ax}")
        packets[lbl] = PacketSpec(center, width, momentum)

    phys_section = "physics"
    if parser.has_section(phys_section):
        _check_keys(parser, phys_section, _PHYSICS_KEYS)
        p = parser[phys_section]
    else:
        p = {}
    hbar = _get_float(p, phys_section, "hbar", 1.0)
    mass = _get_float(p, phys_section, "mass", 1.0)
    boson_number = _get_int(p, phys_section, "boson_number", 2)
    newton_g = _get_float(p, phys_section, "newton_g", 0.0)
    for key, default in (
        ("hbar", "1"), ("mass", "1"), ("boson_number", "2"), ("newton_g", "0"),
    ):
        if key not in p:
            defaults_applied[f"physics.{key}"] = default

    softening_source = "explicit"
    softening = None
    if "softening" in p:
        if dimension == 3:
            _fail(phys_section, "softening",
                  "softening applies to 1D runs only (3D uses the exact kernel)")
        softening = _get_float(p, phys_section, "softening")
    elif dimension == 1:
        softening = min(spec.width for spec in packets.values())
        softening_source = "default: min packet width"
        defaults_applied["physics.softening"] = repr(softening)

    try:
        params = PhysicalParams(
            hbar=hbar, mass=mass, boson_number=boson_number,
            newton_g=newton_g, softening=softening,
        )
    except ConfigurationError as exc:
        _fail(phys_section, None, str(exc))

    _check_keys(parser, "schedule", _SCHEDULE_KEYS)
    s = parser["schedule"]
    dt = _get_float(s, "schedule", "dt")
    steps = _get_int(s, "schedule", "steps")
    record_stride = _get_int(s, "schedule", "record_stride", 100)
    if "record_stride" not in s:
        defaults_applied["schedule.record_stride"] = "100"
    if dt <= 0:
        _fail("schedule", "dt", f"must be positive, got {dt}")
    if steps < 0:
        _fail("schedule", "steps", f"must be >= 0, got {steps}")
    if record_stride < 1:
        _fail("schedule", "record_stride", f"must be >= 1, got {record_stride}")
    schedule = Schedule(dt=dt, n_steps=steps, record_stride=record_stride)

    run_section = "run"
    r = parser[run_section] if parser.has_section(run_section) else {}
    if parser.has_section(run_section):
        _check_keys(parser, run_section, _RUN_KEYS)
    name = r.get("name", "scenario")
    sourcing_text = r.get("sourcing", "mean-field").strip().lower()
    if "sourcing" not in r:
        defaults_applied["run.sourcing"] = "mean-field"
    try:
        sourcing = SourcingMode(sourcing_text)
    except ValueError:
        _fail(run_section, "sourcing",
              f"must be one of {[m.value for m in SourcingMode]}, "
              f"got {sourcing_text!r}")
    entanglement_stride = _get_int(r, run_section, "entanglement_stride", 1)
    cross_block_threshold = _get_float(
        r, run_section, "cross_block_threshold", DEFAULT_CROSS_BLOCK_THRESHOLD
    )
    phase_guard = _get_float(r, run_section, "phase_guard", DEFAULT_PHASE_GUARD)
    exclude_self_gravity = _get_bool(
        r, run_section, "exclude_self_gravity", False
    )
    for key, default in (
        ("entanglement_stride", "1"),
        ("cross_block_threshold", repr(DEFAULT_CROSS_BLOCK_THRESHOLD)),
        ("phase_guard", repr(DEFAULT_PHASE_GUARD)),
        ("exclude_self_gravity", "false"),
    ):
        if key not in r:
            defaults_applied[f"run.{key}"] = default
    if entanglement_stride < 1:
        _fail(run_section, "entanglement_stride",
              f"must be >= 1, got {entanglement_stride}")

    if parser.has_section("output"):
        _check_keys(parser, "output", _OUTPUT_KEYS)
        o = parser["output"]
    else:
        o = {}
    output_dir = o.get("directory", f"runs/{name}")
    if "directory" not in o:
        defaults_applied["output.directory"] = output_dir

    return ScenarioConfig(
        name=name,
        grid=grid,
        params=params,
        packets=packets,
        schedule=schedule,
        sourcing=sourcing,
        entanglement_stride=entanglement_stride,
        cross_block_threshold=cross_block_threshold,
        phase_guard=phase_guard,
        exclude_self_gravity=exclude_self_gravity,
        output_dir=output_dir,
        softening_source=softening_source,
        defaults_applied=defaults_applied,
    )


def render_manifest(config: ScenarioConfig) -> dict:
    """Fully resolved run description: every value that influenced the run."""
    return {
        "code_version": __version__,
        "scenario": config.name,
        "grid": {
            "dimension": config.grid.dimension,
            "points": config.grid.points,
            "box": config.grid.box,
            "spacing": config.grid.spacing,
        },
        "physics": {
            "hbar": config.params.hbar,
            "mass": config.params.mass,
            "boson_number": config.params.boson_number,
            "newton_g": config.params.newton_g,
            "softening": config.params.softening,
            "softening_source": config.softening_source,
        },
        "packets": {
            lbl: {
                "center": list(spec.center),
                "width": spec.width,
                "momentum": list(spec.momentum),
            }
            for lbl, spec in config.packets.items()
        },
        "schedule": {
            "dt": config.schedule.dt,
            "steps": config.schedule.n_steps,
            "record_stride": config.schedule.record_stride,
        },
        "run": {
            "sourcing": config.sourcing.value,
            "entanglement_stride": config.entanglement_stride,
            "cross_block_threshold": config.cross_block_threshold,
            "phase_guard": config.phase_guard,
            "exclude_self_gravity": config.exclude_self_gravity,
        },
        "output": {"directory": config.output_dir},
        "defaults_applied": dict(sorted(config.defaults_applied.items())),
    }


def render_config_text(config: ScenarioConfig) -> str:
    """Echo a ScenarioConfig back as a parseable config document."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser["grid"] = {
        "dimension": str(config.grid.dimension),
        "points": str(config.grid.points),
        "box": repr(config.grid.box),
    }
    parser["physics"] = {
        "hbar": repr(config.params.hbar),
        "mass": repr(config.params.mass),
        "boson_number": str(config.params.boson_number),
        "newton_g": repr(config.params.newton_g),
    }
    if config.params.softening is not None:
        parser["physics"]["softening"] = repr(config.params.softening)
    for lbl, spec in config.packets.items():
        parser[f"packets.{lbl}"] = {
            "center": ", ".join(repr(v) for v in spec.center),
            "width": repr(spec.width),
            "momentum": ", ".join(repr(v) for v in spec.momentum),
        }
    parser["schedule"] = {
        "dt": repr(config.schedule.dt),
        "steps": str(config.schedule.n_steps),
        "record_stride": str(config.schedule.record_stride),
    }
    parser["run"] = {
        "name": config.name,
        "sourcing": config.sourcing.value,
        "entanglement_stride": str(config.entanglement_stride),
        "cross_block_threshold": repr(config.cross_block_threshold),
        "phase_guard": repr(config.phase_guard),
        "exclude_self_gravity": "true" if config.exclude_self_gravity else "false",
    }
    parser["output"] = {"directory": config.output_dir}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Bundled presets.  Scales are dimensionless internal units chosen so that
# the branch-resolved control accumulates O(0.1) rad of differential phase
# within the run while every packet keeps 5 widths of boundary clearance;
# the resolved values land in each run's manifest.
# ---------------------------------------------------------------------------

_PAPER_1D = """\
[grid]
dimension = 1
points = 1024
box = 256

[physics]
hbar = 1
mass = 1
boson_number = 2
newton_g = 3
softening = 7

[packets.1L]
center = -80
width = 7

[packets.1R]
center = -48
width = 7

[packets.2L]
center = 48
width = 7

[packets.2R]
center = 80
width = 7

[schedule]
dt = 0.005
steps = 10000
record_stride = 100

[run]
name = paper-1d
sourcing = mean-field

[output]
directory = runs/paper-1d
"""

_PAPER_3D = """\
[grid]
dimension = 3
points = 64
box = 64

[physics]
hbar = 1
mass = 1
boson_number = 2
newton_g = 0.05

[packets.1L]
center = -19, 0, 0
width = 2

[packets.1R]
center = -11, 0, 0
width = 2

[packets.2L]
center = 11, 0, 0
width = 2

[packets.2R]
center = 19, 0, 0
width = 2

[schedule]
dt = 0.08
steps = 60
record_stride = 10

[run]
name = paper-3d
sourcing = mean-field

[output]
directory = runs/paper-3d
"""

_CONTROL_BRANCH = _PAPER_1D.replace(
    "name = paper-1d", "name = control-branch"
).replace(
    "sourcing = mean-field", "sourcing = branch-resolved"
).replace(
    "directory = runs/paper-1d", "directory = runs/control-branch"
)

_FREE = _PAPER_1D.replace(
    "name = paper-1d", "name = free"
).replace(
    "sourcing = mean-field", "sourcing = no-gravity"
).replace(
    "newton_g = 0.3", "newton_g = 0"
).replace(
    "directory = runs/paper-1d", "directory = runs/free"
)

PRESETS: dict[str, str] = {
    "paper-1d": _PAPER_1D,
    "paper-3d": _PAPER_3D,
    "control-branch": _CONTROL_BRANCH,
    "free": _FREE,
}


def preset_text(name: str) -> str:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None

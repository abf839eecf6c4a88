"""Run configuration: a flat YAML mapping validated in one pass.

Unknown keys are rejected and every problem is collected before raising, so
a bad file is fixed in one round trip.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .checks import AUDITORS
from .errors import AdmissibilityError, ValidationError
from .given_front import admit_initial_condition
from .stefan import FixedPointConfig
from .transform import ICFamily, InitialCondition, ProblemSpec

__all__ = ["Mode", "RunConfig", "ConfigError", "parse_config", "load_config", "DEFAULT_LADDER"]


class ConfigError(ValidationError):
    """Configuration rejected; ``problems`` lists every issue found."""


class Mode(enum.Enum):
    GIVEN_FRONT = "given_front"
    STEFAN_PICARD = "stefan_picard"
    STEFAN_MARCHING = "stefan_marching"
    AUDIT_SUITE = "audit_suite"
    CONVERGENCE_STUDY = "convergence_study"
    CLASSICAL_LIMIT = "classical_limit"


DEFAULT_LADDER = ((65, 64), (129, 128), (257, 256))

REQUIRED = ("mode", "alpha", "b", "T", "M")
DEFAULTS = {
    "u0_family": "quartic",
    "n_nodes": 129,
    "n_steps": 128,
    "allow_corner": False,
    "tol": None,
    "front_speed": None,
    "seed": 0,
    "output_dir": "out",
    "solver": "stefan_marching",
    "study_target": "stefan_marching",
    "ladder": [list(level) for level in DEFAULT_LADDER],
    "inject_violation": None,
    "max_iters": 50,
    "tol_sup": 1e-9,
    "relaxation": 0.5,
    "sdot_min": 1e-12,
    "snapshot_every": 1,
    "limit_rtol": 0.05,
}
U0_KEYS = {
    "u0_c": "c",
    "u0_bump_amp": "bump_amp",
    "u0_bump_center": "bump_center",
    "u0_bump_width": "bump_width",
    "u0_values": "values",
}
KNOWN = set(REQUIRED) | set(DEFAULTS) | set(U0_KEYS)


@dataclass(frozen=True)
class RunConfig:
    mode: Mode
    spec: ProblemSpec
    output_dir: Path
    seed: int = 0
    front_speed: float | None = None
    solver: str = "stefan_marching"
    study_target: str = "stefan_marching"
    ladder: tuple = DEFAULT_LADDER
    inject_violation: str | None = None
    fixed_point: FixedPointConfig = field(default_factory=FixedPointConfig)
    snapshot_every: int = 1
    limit_rtol: float = 0.05
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def config_hash(self) -> str:
        """Stable digest of the resolved settings (output location excluded)."""
        payload = {k: v for k, v in self.raw.items() if k != "output_dir"}
        text = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def with_overrides(self, **changes) -> "RunConfig":
        raw = dict(self.raw)
        for key, value in changes.items():
            if value is not None:
                raw[key] = value.value if isinstance(value, Mode) else value
        return _build(raw)


def _number(raw, key, problems, *, integer=False):
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{key} must be a number, got {value!r}")
        return None
    if integer and int(value) != value:
        problems.append(f"{key} must be an integer, got {value!r}")
        return None
    return int(value) if integer else float(value)


def _build(raw: dict) -> RunConfig:
    problems = []
    unknown = sorted(set(raw) - KNOWN)
    if unknown:
        problems.append(f"unknown keys: {unknown}")
    missing = [k for k in REQUIRED if k not in raw]
    if missing:
        problems.append(f"missing required keys: {missing}")
    merged = {**DEFAULTS, **{k: v for k, v in raw.items() if k in KNOWN}}

    mode = None
    if "mode" in merged:
        try:
            mode = Mode(merged["mode"])
        except ValueError:
            problems.append(
                f"mode must be one of {[m.value for m in Mode]}, got {merged['mode']!r}"
            )

    nums = {}
    for key in ("alpha", "b", "T", "M"):
        if key in merged:
            nums[key] = _number(merged, key, problems)
    alpha = nums.get("alpha")
    if alpha is not None and not 0.0 < alpha < 1.0:
        problems.append(f"alpha out of (0,1): {alpha}")
        nums["alpha"] = None
    for key in ("b", "T", "M"):
        if nums.get(key) is not None and not nums[key] > 0:
            problems.append(f"{key} must be positive, got {nums[key]}")
            nums[key] = None
    ints = {}
    for key in ("n_nodes", "n_steps", "seed", "max_iters", "snapshot_every"):
        ints[key] = _number(merged, key, problems, integer=True)
    if ints["n_nodes"] is not None and ints["n_nodes"] < 4:
        problems.append(f"n_nodes must be >= 4, got {ints['n_nodes']}")
    for key in ("n_steps", "max_iters", "snapshot_every"):
        if ints[key] is not None and ints[key] < 1:
            problems.append(f"{key} must be >= 1, got {ints[key]}")
    floats = {}
    for key in ("tol_sup", "relaxation", "sdot_min", "limit_rtol"):
        floats[key] = _number(merged, key, problems)
    for key in ("tol", "front_speed"):
        floats[key] = None if merged[key] is None else _number(merged, key, problems)
    if not isinstance(merged["allow_corner"], bool):
        problems.append(f"allow_corner must be true/false, got {merged['allow_corner']!r}")
    for key, choices in (
        ("solver", ("stefan_marching", "stefan_picard")),
        ("study_target", ("stefan_marching", "given_front")),
    ):
        if merged[key] not in choices:
            problems.append(f"{key} must be one of {list(choices)}, got {merged[key]!r}")

    if merged["inject_violation"] is not None and merged["inject_violation"] not in AUDITORS:
        problems.append(f"inject_violation must name an auditor in {list(AUDITORS)}")

    ladder = None
    try:
        ladder = tuple((int(n), int(m)) for n, m in merged["ladder"])
    except (TypeError, ValueError):
        problems.append(f"ladder must be a list of [n_nodes, n_steps] pairs, got {merged['ladder']!r}")
    if ladder is not None and len(ladder) < 3:
        problems.append(f"ladder needs at least 3 levels, got {len(ladder)}")

    u0 = None
    try:
        family = ICFamily(merged["u0_family"])
        params = {U0_KEYS[k]: merged[k] for k in U0_KEYS if k in merged}
        if family is ICFamily.CUSTOM_NODES and "values" not in params:
            problems.append("custom_nodes family needs u0_values")
        else:
            u0 = InitialCondition(family, params)
    except ValidationError as exc:
        problems.extend(exc.problems)
    except ValueError:
        problems.append(
            f"u0_family must be one of {[f.value for f in ICFamily]}, got {merged['u0_family']!r}"
        )

    fp = None
    if not any(floats[k] is None for k in ("tol_sup", "relaxation", "sdot_min")) and ints["max_iters"]:
        try:
            fp = FixedPointConfig(ints["max_iters"], floats["tol_sup"], floats["relaxation"], floats["sdot_min"])
        except ValidationError as exc:
            problems.extend(exc.problems)

    spec = None
    if not problems and u0 is not None:
        try:
            spec = ProblemSpec(
                nums["alpha"], nums["b"], nums["T"], nums["M"], u0,
                ints["n_nodes"], ints["n_steps"], merged["allow_corner"], floats["tol"],
            )
            admit_initial_condition(None, spec)
        except AdmissibilityError as exc:
            problems.extend(f"initial condition: {p}" for p in exc.problems)
        except ValidationError as exc:
            problems.extend(exc.problems)

    if problems:
        raise ConfigError(problems)
    resolved = dict(merged)
    resolved["ladder"] = [list(level) for level in ladder]
    return RunConfig(
        mode=mode,
        spec=spec,
        output_dir=Path(merged["output_dir"]),
        seed=ints["seed"],
        front_speed=floats["front_speed"],
        solver=merged["solver"],
        study_target=merged["study_target"],
        ladder=ladder,
        inject_violation=merged["inject_violation"],
        fixed_point=fp,
        snapshot_every=ints["snapshot_every"],
        limit_rtol=floats["limit_rtol"],
        raw=resolved,
    )


def parse_config(text: str) -> RunConfig:
    """Parse a YAML mapping of flat keys into a validated :class:`RunConfig`."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"malformed document: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["document must be a key-value mapping"])
    return _build(raw)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())

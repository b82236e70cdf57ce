"""JSON experiment configuration: defaults, validation, round-tripping.

A config file may specify any subset of the keys; defaults fill the
rest. Unknown keys are rejected, and every validation error names the
offending key path (e.g. "ladder.temperatures[1]"). The validated
config serializes back to JSON via to_dict(); reloading that JSON
yields an identical config.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

from .eeladder import LadderConfig
from .errors import ConfigError
from .statespace import EnergyModel, LadderLevel, builtin_model
from .swcut import RegionModelConfig

EXPERIMENTS = (
    "run", "spectral", "segment", "q1", "q2", "q3", "q4", "swcut_vs_gibbs",
)


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _check_keys(d: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(d.keys() - allowed)
    if unknown:
        raise ConfigError(f"unknown key {path}.{unknown[0]}" if path
                          else f"unknown key {unknown[0]}")


def _get_num(d: dict, key: str, path: str, lo=None, hi=None, integer=False):
    v = d[key]
    if integer:
        _require(isinstance(v, int) and not isinstance(v, bool),
                 f"{path}.{key}", f"expected an integer, got {v!r}")
    else:
        _require(isinstance(v, (int, float)) and not isinstance(v, bool),
                 f"{path}.{key}", f"expected a number, got {v!r}")
        v = float(v)
    if lo is not None:
        _require(v >= lo, f"{path}.{key}", f"must be >= {lo}, got {v}")
    if hi is not None:
        _require(v <= hi, f"{path}.{key}", f"must be <= {hi}, got {v}")
    return v


def _get_choice(d: dict, key: str, path: str, choices) -> str:
    v = d[key]
    _require(v in choices, f"{path}.{key}",
             f"must be one of {sorted(choices)}, got {v!r}")
    return v


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------


@dataclass
class LadderSection:
    n_levels: int = 2
    temperature_ratio: float = 4.0
    temperatures: Optional[list[float]] = None
    truncation_min: float = 0.5
    truncation_step: float = 0.5
    truncations: Optional[list[float]] = None
    ring_boundaries: Optional[list[float]] = None
    burn_in: int = 1000
    p_jump: float = 0.1
    jump_mode: str = "restricted"
    schedule: str = "parallel"
    macro_steps: int = 100_000
    steps_per_level: int = 100_000
    max_records: Optional[int] = None
    init_state: Optional[int] = None

    @classmethod
    def from_dict(cls, d: dict, path: str = "ladder") -> "LadderSection":
        allowed = set(cls.__dataclass_fields__)
        _check_keys(d, allowed, path)
        sec = cls(**d)
        for name in ("n_levels", "burn_in", "macro_steps", "steps_per_level"):
            v = getattr(sec, name)
            _require(isinstance(v, int) and not isinstance(v, bool),
                     f"{path}.{name}", f"expected an integer, got {v!r}")
        for name in ("temperature_ratio", "truncation_min", "truncation_step",
                     "p_jump"):
            v = getattr(sec, name)
            _require(isinstance(v, (int, float)) and not isinstance(v, bool),
                     f"{path}.{name}", f"expected a number, got {v!r}")
        for name in ("max_records", "init_state"):
            v = getattr(sec, name)
            _require(v is None or (isinstance(v, int) and not isinstance(v, bool)),
                     f"{path}.{name}", f"expected an integer or null, got {v!r}")
        if sec.ring_boundaries is not None:
            _require(isinstance(sec.ring_boundaries, list) and
                     all(isinstance(b, (int, float)) for b in sec.ring_boundaries),
                     f"{path}.ring_boundaries", "expected a list of numbers")
        for name in ("temperatures", "truncations"):
            v = getattr(sec, name)
            _require(v is None or isinstance(v, list), f"{path}.{name}",
                     f"expected a list or null, got {v!r}")
        _require(sec.n_levels >= 1, f"{path}.n_levels", "must be >= 1")
        if sec.temperatures is not None:
            for i, t in enumerate(sec.temperatures):
                _require(isinstance(t, (int, float)) and t >= 1.0,
                         f"{path}.temperatures[{i}]",
                         f"temperature must be >= 1, got {t!r}")
            _require(sec.temperatures[0] == 1.0, f"{path}.temperatures[0]",
                     "level-0 temperature must be exactly 1")
        if sec.truncations is not None:
            for i, v in enumerate(sec.truncations):
                _require(isinstance(v, (int, float)) and math.isfinite(v),
                         f"{path}.truncations[{i}]", f"must be finite, got {v!r}")
        _require(0.0 <= sec.p_jump <= 1.0, f"{path}.p_jump", "must be in [0, 1]")
        _require(sec.burn_in >= 0, f"{path}.burn_in", "must be >= 0")
        _require(sec.jump_mode in ("restricted", "unrestricted"),
                 f"{path}.jump_mode", f"unknown mode {sec.jump_mode!r}")
        _require(sec.schedule in ("parallel", "serial"),
                 f"{path}.schedule", f"unknown schedule {sec.schedule!r}")
        _require(sec.macro_steps >= 0, f"{path}.macro_steps", "must be >= 0")
        _require(sec.steps_per_level >= 0, f"{path}.steps_per_level",
                 "must be >= 0")
        return sec

    def levels(self) -> list[LadderLevel]:
        if self.temperatures is not None:
            temps = list(self.temperatures)
        else:
            temps = [self.temperature_ratio ** i for i in range(self.n_levels)]
        if self.truncations is not None:
            truncs = [-math.inf] + list(self.truncations)
            _require(len(truncs) == len(temps), "ladder.truncations",
                     f"need {len(temps) - 1} entries for {len(temps)} levels")
        else:
            truncs = [-math.inf] + [
                self.truncation_min + i * self.truncation_step
                for i in range(1, len(temps))
            ]
        return [LadderLevel(i, float(t), float(h))
                for i, (t, h) in enumerate(zip(temps, truncs))]

    def build(self, **overrides) -> LadderConfig:
        kw = dict(
            levels=self.levels(),
            burn_in=self.burn_in,
            p_jump=self.p_jump,
            jump_mode=self.jump_mode,
            schedule=self.schedule,
            macro_steps=self.macro_steps,
            steps_per_level=self.steps_per_level,
            ring_boundaries=self.ring_boundaries,
            max_records=self.max_records,
            init_state=self.init_state,
        )
        kw.update(overrides)
        return LadderConfig(**kw)


@dataclass
class ImageSection:
    kind: str = "two_region"
    width: int = 32
    height: int = 32
    means: list[float] = field(default_factory=lambda: [0.25, 0.75])
    noise_sd: float = 0.03
    layout: str = "halves"
    image_seed: int = 0
    path: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict, path: str) -> "ImageSection":
        _check_keys(d, set(cls.__dataclass_fields__), path)
        sec = cls(**d)
        _require(sec.kind in ("two_region", "pgm"), f"{path}.kind",
                 f"unknown image kind {sec.kind!r}")
        if sec.kind == "pgm":
            _require(bool(sec.path), f"{path}.path", "required for kind 'pgm'")
        else:
            _require(sec.width >= 1 and sec.height >= 1, f"{path}.width",
                     "dimensions must be >= 1")
            _require(sec.noise_sd >= 0, f"{path}.noise_sd", "must be >= 0")
            _require(sec.layout in ("halves", "disk"), f"{path}.layout",
                     f"unknown layout {sec.layout!r}")
        return sec


@dataclass
class SegmentationSection:
    image: ImageSection = field(default_factory=ImageSection)
    n_labels: int = 2
    beta: float = 0.3
    p_max: float = 0.97
    p_min: float = 0.02
    scale: float = 0.2
    region_mode: str = "fixed_means"
    sigma: float = 0.05
    means: list[float] = field(default_factory=lambda: [0.25, 0.75])
    order: int = 0
    sweeps: int = 2
    init: str = "threshold"
    sampler: str = "swcut"
    cluster_pick: str = "uniform"

    @classmethod
    def from_dict(cls, d: dict, path: str = "segmentation") -> "SegmentationSection":
        _check_keys(d, set(cls.__dataclass_fields__), path)
        d = dict(d)
        img = d.pop("image", None)
        sec = cls(**d)
        if img is not None:
            _require(isinstance(img, dict), f"{path}.image", "must be an object")
            sec.image = ImageSection.from_dict(
                _merge(asdict(ImageSection()), img), f"{path}.image"
            )
        for name in ("n_labels", "sweeps", "order"):
            v = getattr(sec, name)
            _require(isinstance(v, int) and not isinstance(v, bool),
                     f"{path}.{name}", f"expected an integer, got {v!r}")
        for name in ("beta", "p_max", "p_min", "scale", "sigma"):
            v = getattr(sec, name)
            _require(isinstance(v, (int, float)) and not isinstance(v, bool),
                     f"{path}.{name}", f"expected a number, got {v!r}")
        _require(isinstance(sec.means, list) and
                 all(isinstance(m, (int, float)) for m in sec.means),
                 f"{path}.means", "expected a list of numbers")
        _require(sec.n_labels >= 2, f"{path}.n_labels", "must be >= 2")
        _require(sec.beta >= 0, f"{path}.beta", "must be >= 0")
        _require(0 < sec.p_min <= sec.p_max < 1, f"{path}.p_max",
                 "need 0 < p_min <= p_max < 1")
        _require(sec.scale > 0, f"{path}.scale", "must be > 0")
        _require(sec.region_mode in ("fixed_means", "poly_fit"),
                 f"{path}.region_mode", f"unknown mode {sec.region_mode!r}")
        _require(sec.sigma > 0, f"{path}.sigma", "must be > 0")
        _require(sec.order in (0, 1, 2), f"{path}.order", "must be 0, 1 or 2")
        _require(sec.sweeps >= 0, f"{path}.sweeps", "must be >= 0")
        _require(sec.init in ("threshold", "random"), f"{path}.init",
                 f"unknown init {sec.init!r}")
        _require(sec.sampler in ("swcut", "gibbs"), f"{path}.sampler",
                 f"unknown sampler {sec.sampler!r}")
        _require(sec.cluster_pick in ("uniform", "pixel"), f"{path}.cluster_pick",
                 f"unknown cluster_pick {sec.cluster_pick!r}")
        if sec.region_mode == "fixed_means":
            _require(len(sec.means) >= sec.n_labels, f"{path}.means",
                     f"need {sec.n_labels} means")
        return sec

    def region_config(self) -> RegionModelConfig:
        if self.region_mode == "fixed_means":
            return RegionModelConfig(mode="fixed_means", sigma=self.sigma,
                                     means=tuple(self.means), order=self.order)
        return RegionModelConfig(mode="poly_fit", sigma=self.sigma,
                                 order=self.order)


_DEFAULT_MODEL = {
    "kind": "double_well_grid",
    "points": 41,
    "bounds": [-2.0, 2.0],
    "depth": 4.0,
}

_Q3_DEFAULTS = {"ledger_sizes": [100, 1000, 10000], "p_jump": 0.5}
_Q4_DEFAULTS = {"alpha": 0.5, "coarse_cells": 8}
_MIXING_DEFAULTS = {"max_sweeps": 20, "target_agreement": 0.95, "check_every": 16}


@dataclass
class ExperimentConfig:
    """Fully resolved experiment settings."""

    experiment: str
    seed: int = 20060815
    out: Optional[str] = None
    replicates: int = 20
    tv_checkpoints: int = 20
    model: dict = field(default_factory=lambda: dict(_DEFAULT_MODEL))
    ladder: LadderSection = field(default_factory=LadderSection)
    segmentation: SegmentationSection = field(default_factory=SegmentationSection)
    q3: dict = field(default_factory=lambda: dict(_Q3_DEFAULTS))
    q4: dict = field(default_factory=lambda: dict(_Q4_DEFAULTS))
    mixing: dict = field(default_factory=lambda: dict(_MIXING_DEFAULTS))

    def build_model(self) -> EnergyModel:
        params = dict(self.model)
        kind = params.pop("kind", None)
        _require(kind is not None, "model.kind", "is required")
        return builtin_model(kind, **params)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "out": self.out,
            "replicates": self.replicates,
            "tv_checkpoints": self.tv_checkpoints,
            "model": dict(self.model),
            "ladder": asdict(self.ladder),
            "segmentation": asdict(self.segmentation),
            "q3": dict(self.q3),
            "q4": dict(self.q4),
            "mixing": dict(self.mixing),
        }


_TOP_KEYS = {
    "experiment", "seed", "out", "replicates", "tv_checkpoints",
    "model", "ladder", "segmentation", "q3", "q4", "mixing",
}


def validate_config(raw: dict, experiment: Optional[str] = None) -> ExperimentConfig:
    """Validate a raw config dict (defaults applied) into an ExperimentConfig."""
    _require(isinstance(raw, dict), "", "config root must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "")

    exp = raw.get("experiment", experiment)
    _require(exp is not None, "experiment",
             "missing (give it in the config or on the command line)")
    _require(exp in EXPERIMENTS, "experiment",
             f"must be one of {list(EXPERIMENTS)}, got {exp!r}")
    if experiment is not None and exp != experiment:
        raise ConfigError(
            f"experiment: config says {exp!r} but the command line says "
            f"{experiment!r}"
        )

    seed = int(_get_num(raw, "seed", "", integer=True)) if "seed" in raw else 20060815
    out = raw.get("out")
    if out is not None:
        _require(isinstance(out, str), "out", "must be a string path")
    replicates = (int(_get_num(raw, "replicates", "", lo=1, integer=True))
                  if "replicates" in raw else 20)
    tv_checkpoints = (int(_get_num(raw, "tv_checkpoints", "", lo=1, integer=True))
                      if "tv_checkpoints" in raw else 20)

    model = _merge(_DEFAULT_MODEL, raw["model"]) if "model" in raw else dict(_DEFAULT_MODEL)
    if "model" in raw and "kind" in raw["model"]:
        model = dict(raw["model"])  # a new kind replaces the default params

    ladder = LadderSection.from_dict(raw.get("ladder", {}))
    seg = SegmentationSection.from_dict(raw.get("segmentation", {}))

    q3 = _merge(_Q3_DEFAULTS, raw.get("q3", {}))
    _check_keys(q3, set(_Q3_DEFAULTS), "q3")
    _require(isinstance(q3["ledger_sizes"], list) and
             all(isinstance(v, int) and v >= 0 for v in q3["ledger_sizes"]),
             "q3.ledger_sizes", "must be a list of non-negative integers")
    _require(0.0 <= q3["p_jump"] <= 1.0, "q3.p_jump", "must be in [0, 1]")

    q4 = _merge(_Q4_DEFAULTS, raw.get("q4", {}))
    _check_keys(q4, set(_Q4_DEFAULTS), "q4")
    _require(0.0 <= q4["alpha"] <= 1.0, "q4.alpha", "must be in [0, 1]")
    _require(isinstance(q4["coarse_cells"], int) and q4["coarse_cells"] >= 1,
             "q4.coarse_cells", "must be an integer >= 1")

    mixing = _merge(_MIXING_DEFAULTS, raw.get("mixing", {}))
    _check_keys(mixing, set(_MIXING_DEFAULTS), "mixing")
    _require(mixing["max_sweeps"] >= 1, "mixing.max_sweeps", "must be >= 1")
    _require(0.0 < mixing["target_agreement"] <= 1.0,
             "mixing.target_agreement", "must be in (0, 1]")
    _require(mixing["check_every"] >= 1, "mixing.check_every", "must be >= 1")

    cfg = ExperimentConfig(
        experiment=exp, seed=seed, out=out, replicates=replicates,
        tv_checkpoints=tv_checkpoints, model=model, ladder=ladder,
        segmentation=seg, q3=q3, q4=q4, mixing=mixing,
    )
    cfg.build_model()  # surface model parameter errors now
    cfg.ladder.levels()
    return cfg


def load_config(path, experiment: Optional[str] = None) -> ExperimentConfig:
    """Load and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return validate_config(raw, experiment)

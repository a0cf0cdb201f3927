"""Experiment configuration: YAML parsing with exhaustive validation.

A configuration file is a YAML mapping with 1-based mode indices:

.. code-block:: yaml

    modes: 12
    squeezers:
      - {modes: [1, 2], r: 0.365}          # two-mode squeezer
      - {modes: [3, 4], r: 0.363, phase: 0.0}
      - {mode: 7, r: 0.2}                  # single-mode squeezer
    unitary: {seed: 12}                    # or {file: unitary.txt}
    efficiency: 0.75                       # scalar or per-mode list
    sector: 3                              # click sector for restricted analyses
    samples: 20000                         # sampling budget
    seed: 7
    maxhaf:                                # subgraph-search settings
      subgraph_size: 4
      budgets: [100, 200, 300, 400]
      trials: 40
      tanh_cap: 0.76

Unknown keys are hard errors, and validation reports every violation in a
single pass.  A run manifest (JSON with an embedded ``config`` mapping) is
accepted anywhere a config file is, which makes manifests re-runnable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .gaussian import (
    Interferometer,
    MAX_SQUEEZING,
    SingleModeSqueezerSpec,
    SqueezerSpec,
    load_unitary_file,
    random_unitary,
)

TOP_LEVEL_KEYS = {"modes", "squeezers", "unitary", "efficiency", "sector", "samples", "seed", "maxhaf"}
SQUEEZER_KEYS = {"modes", "mode", "r", "phase"}
UNITARY_KEYS = {"seed", "file"}
MAXHAF_KEYS = {"subgraph_size", "budgets", "trials", "tanh_cap"}


@dataclass(frozen=True)
class MaxHafSettings:
    subgraph_size: int
    budgets: tuple[int, ...]
    trials: int
    tanh_cap: float


@dataclass(frozen=True)
class ExperimentConfig:
    """One run of the apparatus: squeezers, unitary source, loss and seeds."""

    modes: int
    squeezers: tuple[SqueezerSpec | SingleModeSqueezerSpec, ...]
    unitary_seed: int | None
    unitary_file: str | None
    efficiency: tuple[float, ...]
    sector: int | None
    samples: int
    seed: int
    maxhaf: MaxHafSettings | None = None

    def resolve_interferometer(self) -> Interferometer:
        if self.unitary_file is not None:
            try:
                return load_unitary_file(self.unitary_file)
            except (OSError, ValueError) as exc:
                raise ConfigError(f"unitary: {exc}") from exc
        if self.unitary_seed is not None:
            return random_unitary(self.modes, self.unitary_seed)
        return Interferometer(np.eye(self.modes, dtype=np.complex128))

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return ExperimentConfig(
            modes=self.modes,
            squeezers=self.squeezers,
            unitary_seed=self.unitary_seed,
            unitary_file=self.unitary_file,
            efficiency=self.efficiency,
            sector=self.sector,
            samples=self.samples,
            seed=seed,
            maxhaf=self.maxhaf,
        )

    def canonical_dict(self) -> dict:
        """Plain mapping mirroring the config file (1-based modes)."""
        squeezers = []
        for s in self.squeezers:
            if isinstance(s, SqueezerSpec):
                entry = {"modes": [s.mode_a + 1, s.mode_b + 1], "r": s.r}
                if s.phase != 0.0:
                    entry["phase"] = s.phase
            else:
                entry = {"mode": s.mode + 1, "r": s.r}
            squeezers.append(entry)
        out = {
            "modes": self.modes,
            "squeezers": squeezers,
            "unitary": (
                {"file": self.unitary_file}
                if self.unitary_file is not None
                else {"seed": self.unitary_seed}
            ),
            "efficiency": list(self.efficiency),
            "sector": self.sector,
            "samples": self.samples,
            "seed": self.seed,
        }
        if self.maxhaf is not None:
            out["maxhaf"] = {
                "subgraph_size": self.maxhaf.subgraph_size,
                "budgets": list(self.maxhaf.budgets),
                "trials": self.maxhaf.trials,
                "tanh_cap": self.maxhaf.tanh_cap,
            }
        return out

    def config_hash(self) -> str:
        payload = json.dumps(self.canonical_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode("ascii")).hexdigest()


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value) -> bool:
    return (isinstance(value, (int, float)) and not isinstance(value, bool)) or (
        isinstance(value, np.floating)
    )


def config_from_dict(raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
    """Build a validated configuration, aggregating every violation found."""
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            errors.append(f"unknown key {key!r}")

    modes = raw.get("modes")
    if modes is None:
        errors.append("missing key 'modes'")
        modes = 0
    elif not _is_int(modes) or modes < 1:
        errors.append(f"modes must be a positive integer, got {modes!r}")
        modes = 0

    squeezers: list[SqueezerSpec | SingleModeSqueezerSpec] = []
    occupied: set[int] = set()
    raw_squeezers = raw.get("squeezers", [])
    if not isinstance(raw_squeezers, list):
        errors.append("squeezers must be a list")
        raw_squeezers = []
    for i, entry in enumerate(raw_squeezers):
        label = f"squeezers[{i}]"
        if not isinstance(entry, dict):
            errors.append(f"{label}: must be a mapping")
            continue
        for key in entry:
            if key not in SQUEEZER_KEYS:
                errors.append(f"{label}: unknown key {key!r}")
        r = entry.get("r")
        if not _is_number(r) or r < 0 or r > MAX_SQUEEZING:
            errors.append(f"{label}: r must be a number in [0, {MAX_SQUEEZING}], got {r!r}")
            continue
        has_pair = "modes" in entry
        has_single = "mode" in entry
        if has_pair == has_single:
            errors.append(f"{label}: exactly one of 'modes' (pair) or 'mode' must be given")
            continue
        if has_pair:
            pair = entry["modes"]
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(_is_int(x) for x in pair)
            ):
                errors.append(f"{label}: modes must be a pair of integers, got {pair!r}")
                continue
            a, b = pair
            if a == b:
                errors.append(f"{label}: the two modes must differ")
                continue
            bad_range = [x for x in (a, b) if modes and not 1 <= x <= modes]
            if bad_range:
                errors.append(f"{label}: modes {bad_range} outside 1..{modes}")
                continue
            phase = entry.get("phase", 0.0)
            if not _is_number(phase):
                errors.append(f"{label}: phase must be a number, got {phase!r}")
                continue
            overlap = {a, b} & occupied
            if overlap:
                errors.append(f"{label}: modes {sorted(overlap)} already squeezed")
                continue
            occupied |= {a, b}
            squeezers.append(SqueezerSpec(a - 1, b - 1, float(r), float(phase)))
        else:
            mode = entry["mode"]
            if not _is_int(mode):
                errors.append(f"{label}: mode must be an integer, got {mode!r}")
                continue
            if modes and not 1 <= mode <= modes:
                errors.append(f"{label}: mode {mode} outside 1..{modes}")
                continue
            if "phase" in entry:
                errors.append(f"{label}: phase is only supported on mode pairs")
                continue
            if mode in occupied:
                errors.append(f"{label}: mode {mode} already squeezed")
                continue
            occupied.add(mode)
            squeezers.append(SingleModeSqueezerSpec(mode - 1, float(r)))

    unitary_seed = None
    unitary_file = None
    raw_unitary = raw.get("unitary")
    if raw_unitary is not None:
        if not isinstance(raw_unitary, dict):
            errors.append("unitary must be a mapping with 'seed' or 'file'")
        else:
            for key in raw_unitary:
                if key not in UNITARY_KEYS:
                    errors.append(f"unitary: unknown key {key!r}")
            has_seed = "seed" in raw_unitary
            has_file = "file" in raw_unitary
            if has_seed == has_file:
                errors.append("unitary: exactly one of 'seed' or 'file' must be given")
            elif has_seed:
                if not _is_int(raw_unitary["seed"]):
                    errors.append(f"unitary: seed must be an integer, got {raw_unitary['seed']!r}")
                else:
                    unitary_seed = int(raw_unitary["seed"])
            else:
                path = Path(str(raw_unitary["file"]))
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                if not path.is_file():
                    errors.append(f"unitary: file {path} does not exist")
                else:
                    unitary_file = str(path)

    raw_eff = raw.get("efficiency", 1.0)
    efficiency: tuple[float, ...] = ()
    if _is_number(raw_eff):
        if 0.0 <= raw_eff <= 1.0:
            efficiency = (float(raw_eff),) * max(modes, 1)
        else:
            errors.append(f"efficiency {raw_eff!r} outside [0, 1]")
    elif isinstance(raw_eff, list):
        if modes and len(raw_eff) != modes:
            errors.append(f"efficiency list has {len(raw_eff)} entries, expected {modes}")
        bad = [e for e in raw_eff if not (_is_number(e) and 0.0 <= e <= 1.0)]
        if bad:
            errors.append(f"efficiency entries outside [0, 1]: {bad}")
        if not bad and (not modes or len(raw_eff) == modes):
            efficiency = tuple(float(e) for e in raw_eff)
    else:
        errors.append(f"efficiency must be a number or list, got {raw_eff!r}")
    if not efficiency:
        efficiency = (1.0,) * max(modes, 1)

    sector = raw.get("sector")
    if sector is not None:
        if not _is_int(sector) or sector < 0 or (modes and sector > modes):
            errors.append(f"sector must be an integer in 0..{modes}, got {sector!r}")
            sector = None

    samples = raw.get("samples", 0)
    if not _is_int(samples) or samples < 0:
        errors.append(f"samples must be a non-negative integer, got {samples!r}")
        samples = 0

    seed = raw.get("seed")
    if seed is None:
        errors.append("missing key 'seed'")
        seed = 0
    elif not _is_int(seed):
        errors.append(f"seed must be an integer, got {seed!r}")
        seed = 0

    maxhaf = None
    raw_maxhaf = raw.get("maxhaf")
    if raw_maxhaf is not None:
        if not isinstance(raw_maxhaf, dict):
            errors.append("maxhaf must be a mapping")
        else:
            for key in raw_maxhaf:
                if key not in MAXHAF_KEYS:
                    errors.append(f"maxhaf: unknown key {key!r}")
            k = raw_maxhaf.get("subgraph_size")
            budgets = raw_maxhaf.get("budgets", [100, 200, 300, 400])
            trials = raw_maxhaf.get("trials", 40)
            tanh_cap = raw_maxhaf.get("tanh_cap", 0.76)
            ok = True
            if not _is_int(k) or k < 2 or k % 2:
                errors.append(f"maxhaf: subgraph_size must be a positive even integer, got {k!r}")
                ok = False
            if not isinstance(budgets, list) or not budgets or not all(
                _is_int(b) and b > 0 for b in budgets
            ):
                errors.append(f"maxhaf: budgets must be a list of positive integers, got {budgets!r}")
                ok = False
            if not _is_int(trials) or trials < 1:
                errors.append(f"maxhaf: trials must be a positive integer, got {trials!r}")
                ok = False
            if not _is_number(tanh_cap) or not 0.0 < tanh_cap < 1.0:
                errors.append(f"maxhaf: tanh_cap must lie in (0, 1), got {tanh_cap!r}")
                ok = False
            if ok:
                maxhaf = MaxHafSettings(
                    subgraph_size=int(k),
                    budgets=tuple(sorted(set(int(b) for b in budgets))),
                    trials=int(trials),
                    tanh_cap=float(tanh_cap),
                )

    if errors:
        raise ConfigError("invalid configuration:\n  - " + "\n  - ".join(errors))
    return ExperimentConfig(
        modes=modes,
        squeezers=tuple(squeezers),
        unitary_seed=unitary_seed,
        unitary_file=unitary_file,
        efficiency=efficiency,
        sector=sector,
        samples=samples,
        seed=seed,
        maxhaf=maxhaf,
    )


def load_config(path) -> ExperimentConfig:
    """Load a YAML config file or a JSON run manifest with embedded config."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text(encoding="utf-8")
    raw = None
    if path.suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if isinstance(doc, dict) and "config" in doc:
            raw = doc["config"]
        else:
            raw = doc
    else:
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    return config_from_dict(raw, base_dir=path.parent)

"""Experiment configuration files (TOML, schema version 1)."""

from __future__ import annotations

import math
import os
import re
import sys
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import List, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .criteria import CriterionKind, CriterionSpec
from .errors import ConfigError
from .selectors import PathSource
from .simlab import Axis, GeneratorConfig

SCHEMA_VERSION = 1
SEED_ENV = "SPARSESEL_SEED"

_TOP_KEYS = {"schema", "name", "trials", "workers", "output_dir", "generator", "axis", "selector", "criteria"}
_GEN_KEYS = {"n", "p", "d", "x_s", "snr_db", "seed", "noiseless", "sigma2", "y_scale"}


@dataclass
class ExperimentConfig:
    name: str
    generator: GeneratorConfig
    axis: Axis
    axis_values: List[float]
    criteria: List[CriterionSpec]
    selector: PathSource = PathSource.OMP
    k_max: Optional[int] = None
    trials: int = 1000
    workers: int = 1
    output_dir: str = "."

    def to_dict(self) -> dict:
        gen = {k: v for k, v in asdict(self.generator).items() if v is not None}
        gen["x_s"] = list(self.generator.x_s)
        selector = {"kind": self.selector.value}
        if self.k_max is not None:
            selector["k_max"] = self.k_max
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "trials": self.trials,
            "workers": self.workers,
            "output_dir": self.output_dir,
            "generator": gen,
            "axis": {"kind": self.axis.value, "values": list(self.axis_values)},
            "selector": selector,
            "criteria": [{"kind": c.kind.value, "tuning": c.tuning} for c in self.criteria],
        }

    def zeta_warnings(self) -> List[str]:
        """EBIC_R tunings at or below 1 - 1/(2d) when p grows as N^d."""
        d = self.generator.d
        if d is None:
            return []
        bound = 1.0 - 1.0 / (2.0 * d)
        return [
            f"warning: ebic_r zeta={c.tuning:g} <= 1 - 1/(2d) = {bound:.4f} for d={d:g}; "
            "large-N consistency is not guaranteed"
            for c in self.criteria
            if c.kind is CriterionKind.EBIC_R and c.tuning <= bound
        ]


def _locate(text: Optional[str], key: str, section: Optional[str] = None, occurrence: int = 0) -> Optional[int]:
    """1-based line of ``key`` (inside ``section`` if given); None if not found."""
    if not text:
        return None
    current = None
    seen = -1
    header = re.compile(r"^\s*\[\[?\s*([A-Za-z0-9_.]+)\s*\]\]?")
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = header.match(line)
        if m:
            current = m.group(1)
            if section and current == section and key == "":
                seen += 1
                if seen == occurrence:
                    return lineno
            continue
        if key and current == section and re.match(rf"^\s*{re.escape(key)}\s*=", line):
            seen += 1
            if seen == occurrence:
                return lineno
    if section and key:
        return _locate(text, "", section, occurrence)
    return None


def _need(table: dict, key: str, kind, text, section, required=True, default=None):
    if key not in table:
        if required:
            raise ConfigError(f"missing required key {section + '.' if section else ''}{key}",
                              _locate(text, "", section) if section else None)
        return default
    value = table[key]
    ok = isinstance(value, kind) and not (kind in (int, (int, float)) and isinstance(value, bool))
    if not ok:
        raise ConfigError(f"{section + '.' if section else ''}{key} has the wrong type ({type(value).__name__})",
                          _locate(text, key, section))
    return value


def parse_config(data: dict, text: Optional[str] = None) -> ExperimentConfig:
    """Validate a decoded config mapping; ``text`` is used only to anchor errors to lines."""
    unknown = set(data) - _TOP_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown top-level key {key!r}", _locate(text, key))
    schema = _need(data, "schema", int, text, None)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {schema}; expected {SCHEMA_VERSION}", _locate(text, "schema"))
    name = _need(data, "name", str, text, None)
    if not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise ConfigError("name may only contain letters, digits, '_', '-' and '.'", _locate(text, "name"))
    trials = _need(data, "trials", int, text, None, required=False, default=1000)
    workers = _need(data, "workers", int, text, None, required=False, default=1)
    output_dir = _need(data, "output_dir", str, text, None, required=False, default=".")
    if trials < 1:
        raise ConfigError("trials must be at least 1", _locate(text, "trials"))
    if workers < 1:
        raise ConfigError("workers must be at least 1", _locate(text, "workers"))

    gen = _need(data, "generator", dict, text, None)
    unknown = set(gen) - _GEN_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown generator key {key!r}", _locate(text, key, "generator"))
    x_s = _need(gen, "x_s", list, text, "generator")
    if not x_s or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x_s):
        raise ConfigError("generator.x_s must be a non-empty list of numbers", _locate(text, "x_s", "generator"))
    seed = _need(gen, "seed", int, text, "generator", required=False, default=0)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env_seed!r} is not an integer") from None
    try:
        generator = GeneratorConfig(
            n=_need(gen, "n", int, text, "generator"),
            x_s=tuple(float(v) for v in x_s),
            snr_db=float(_need(gen, "snr_db", (int, float), text, "generator", required=False, default=0.0)),
            p=_need(gen, "p", int, text, "generator", required=False),
            d=_opt_float(_need(gen, "d", (int, float), text, "generator", required=False)),
            seed=seed,
            noiseless=_need(gen, "noiseless", bool, text, "generator", required=False, default=False),
            sigma2=_opt_float(_need(gen, "sigma2", (int, float), text, "generator", required=False)),
            y_scale=float(_need(gen, "y_scale", (int, float), text, "generator", required=False, default=1.0)),
        )
    except ConfigError as exc:
        if exc.line is None:
            raise ConfigError(str(exc), _locate(text, "", "generator")) from None
        raise

    axis_t = _need(data, "axis", dict, text, None)
    try:
        axis = Axis(_need(axis_t, "kind", str, text, "axis"))
    except ValueError:
        raise ConfigError("axis.kind must be 'snr_db' or 'n'", _locate(text, "kind", "axis")) from None
    values = _need(axis_t, "values", list, text, "axis")
    if not values or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise ConfigError("axis.values must be a non-empty list of numbers", _locate(text, "values", "axis"))
    values = [float(v) for v in values]
    if values != sorted(values) or any(not math.isfinite(v) for v in values):
        raise ConfigError("axis.values must be finite and sorted ascending", _locate(text, "values", "axis"))
    for v in values:
        try:
            generator.at(axis, v)
        except ConfigError as exc:
            raise ConfigError(f"axis value {v:g}: {exc}", _locate(text, "values", "axis")) from None

    sel = _need(data, "selector", dict, text, None, required=False, default={"kind": "omp"})
    try:
        selector = PathSource(_need(sel, "kind", str, text, "selector"))
    except ValueError:
        raise ConfigError("selector.kind must be 'omp', 'lars' or 'exhaustive'", _locate(text, "kind", "selector")) from None
    k_max = _need(sel, "k_max", int, text, "selector", required=False)
    if k_max is not None and k_max < 1:
        raise ConfigError("selector.k_max must be positive", _locate(text, "k_max", "selector"))

    crit = data.get("criteria")
    if not isinstance(crit, list) or not crit:
        line = _locate(text, "", "criteria") or (len(text.splitlines()) if text else None)
        raise ConfigError("at least one [[criteria]] entry is required", line)
    criteria = []
    for i, entry in enumerate(crit):
        line = _locate(text, "", "criteria", i)
        if not isinstance(entry, dict) or "kind" not in entry:
            raise ConfigError(f"criteria entry {i + 1} needs a 'kind'", line)
        try:
            kind = CriterionKind.parse(str(entry["kind"]))
        except ValueError as exc:
            raise ConfigError(f"criteria entry {i + 1}: {exc}", _entry_line(text, line, "kind")) from None
        try:
            criteria.append(CriterionSpec(kind, entry.get("tuning", 0.0)))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"criteria entry {i + 1}: {exc}", _entry_line(text, line, "tuning")) from None

    return ExperimentConfig(name, generator, axis, values, criteria, selector, k_max, trials, workers, output_dir)


def _entry_line(text: Optional[str], header: Optional[int], key: str) -> Optional[int]:
    """Line of ``key`` inside the array-of-tables entry starting at ``header``."""
    if not text or header is None:
        return header
    lines = text.splitlines()
    for lineno in range(header + 1, len(lines) + 1):
        line = lines[lineno - 1]
        if line.lstrip().startswith("["):
            break
        if re.match(rf"^\s*{re.escape(key)}\s*=", line):
            return lineno
    return header


def _opt_float(v):
    return None if v is None else float(v)


_TOML_LINE = re.compile(r"line (\d+)")


def load_config(path) -> ExperimentConfig:
    """Read a TOML config file or a JSON run manifest."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    if path.suffix == ".json":
        import json
        try:
            manifest = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        data = manifest.get("config", manifest) if isinstance(manifest, dict) else None
        if not isinstance(data, dict):
            raise ConfigError("manifest has no config object")
        return parse_config(data)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = _TOML_LINE.search(str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", int(m.group(1)) if m else None) from None
    return parse_config(data, text)


def shipped_configs() -> List[str]:
    """Names of the configs bundled with the package."""
    root = resources.files("sparsesel") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve_config_path(name_or_path) -> Path:
    """Existing path, or the bundled config with that name."""
    path = Path(name_or_path)
    if path.exists():
        return path
    stem = path.name[:-5] if path.name.endswith(".toml") else path.name
    candidate = resources.files("sparsesel") / "configs" / f"{stem}.toml"
    if candidate.is_file():
        return Path(str(candidate))
    return path

"""Run configuration: strict TOML/JSON schema with defaults for every stage."""

from __future__ import annotations

import difflib
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli

from .augment import DEFAULT_MARKERS, BaselineConfig
from .embed import SkipGramConfig
from .xformer.model import TransformerConfig

SCHEMA_VERSION = "1"


class ConfigError(ValueError):
    pass


@dataclass
class PrepConfig:
    threshold: float = 0.85
    lexicon_min_count: int = 2
    wordlist: str | None = None


@dataclass
class VocabConfig:
    min_count: int = 1


@dataclass
class AugmentConfig:
    method: str = "discourse"
    markers: list = field(default_factory=lambda: list(DEFAULT_MARKERS))
    smote_k: int = 5
    smote_ratio: float = 1.0
    seed: int = 42


@dataclass
class Phase2Config:
    mode: str = "full"
    pretrain_epochs: int = 5


@dataclass
class PathsConfig:
    train: str | None = None
    test: str | None = None
    out: str = "artifacts"
    format: str = "jsonl"


@dataclass
class RunConfig:
    schema_version: str = SCHEMA_VERSION
    seed: int = 42
    paths: PathsConfig = field(default_factory=PathsConfig)
    prep: PrepConfig = field(default_factory=PrepConfig)
    vocab: VocabConfig = field(default_factory=VocabConfig)
    embed: SkipGramConfig = field(default_factory=SkipGramConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    transformer: TransformerConfig = field(default_factory=TransformerConfig)
    phase2: Phase2Config = field(default_factory=Phase2Config)

    def __post_init__(self):
        if self.augment.method not in ("discourse", "smote", "none"):
            raise ConfigError(f"augment.method must be discourse, smote or none, not {self.augment.method!r}")
        if self.phase2.mode not in ("full", "adapter_transfer"):
            raise ConfigError(f"phase2.mode must be full or adapter_transfer, not {self.phase2.mode!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def seeds(self) -> dict:
        return {
            "global": self.seed,
            "embed": self.embed.seed,
            "baseline": self.baseline.seed,
            "augment": self.augment.seed,
            "transformer": self.transformer.seed,
        }

    def with_seed(self, seed: int) -> "RunConfig":
        """Copy with every stage seed set to ``seed``."""
        d = self.to_dict()
        d["seed"] = seed
        for section in ("embed", "baseline", "augment", "transformer"):
            d[section]["seed"] = seed
        return from_dict(d)


_SECTIONS = {f.name: f for f in fields(RunConfig)}


def _check_keys(obj: dict, cls, where: str) -> None:
    allowed = [f.name for f in fields(cls)]
    for key in obj:
        if key not in allowed:
            close = difflib.get_close_matches(key, allowed, n=1)
            hint = f"; did you mean {close[0]!r}?" if close else ""
            raise ConfigError(f"unknown key {where}{key!r}{hint}")


def _typed(value, ftype, where):
    # dataclass field types are strings under postponed evaluation
    t = str(ftype)
    if value is None:
        if "None" in t:
            return None
        raise ConfigError(f"{where}: null is not allowed")
    if t.startswith("int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected integer, got {type(value).__name__}")
    elif t.startswith("float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected number, got {type(value).__name__}")
        value = float(value)
    elif t.startswith("bool"):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected boolean, got {type(value).__name__}")
    elif t.startswith("str"):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected string, got {type(value).__name__}")
    elif t.startswith("list"):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected list, got {type(value).__name__}")
    return value


def _build(cls, obj, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where or 'config'}: expected a table")
    _check_keys(obj, cls, where)
    kwargs = {}
    for f in fields(cls):
        if f.name in obj:
            kwargs[f.name] = _typed(obj[f.name], f.type, where + f.name)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where or 'config'}: {exc}") from None


def from_dict(obj: dict) -> RunConfig:
    _check_keys(obj, RunConfig, "")
    top = {}
    for name, f in _SECTIONS.items():
        if name not in obj:
            continue
        default = f.default_factory() if callable(f.default_factory) else None
        if default is not None and hasattr(default, "__dataclass_fields__"):
            top[name] = _build(type(default), obj[name], name + ".")
        else:
            top[name] = _typed(obj[name], f.type, name)
    if "seed" not in obj:
        seed = os.environ.get("SUGMINE_SEED")
        if seed is not None:
            top["seed"] = int(seed)
    seed = top.get("seed", RunConfig.seed)
    # stage seeds fall back to the global seed when not given explicitly
    for section, cls in (("embed", SkipGramConfig), ("baseline", BaselineConfig), ("augment", AugmentConfig), ("transformer", TransformerConfig)):
        if section not in top:
            top[section] = cls()
        if "seed" not in obj.get(section, {}):
            top[section].seed = seed
    if top.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {top['schema_version']!r}")
    try:
        return RunConfig(**top)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(path) -> RunConfig:
    """Read a TOML (or, by extension, JSON) run configuration.

    Unknown keys and type mismatches raise :class:`ConfigError`.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        obj = json.loads(text) if text.strip() else {}
    else:
        try:
            obj = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    cfg = from_dict(obj)
    if cfg.paths.format not in ("csv", "jsonl"):
        raise ConfigError("paths.format must be csv or jsonl")
    return cfg

"""Run configuration: flat INI-style key/value files plus CLI overrides."""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from .errors import CalnetError
from .ingest import MASS_UNITS, IngestConfig
from .metrics import CORRELATION_VARIANTS

_SECTION = "calnet"
_PATH_KEYS = ("trade_path", "factors_path", "output_dir")


class ConfigError(CalnetError, ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    trade_path: Path | None = None
    factors_path: Path | None = None
    output_dir: Path | None = None
    year_from: int = 1986
    year_to: int = 2022
    mass_unit: str = "tonnes"
    seed: int = 42
    resolution: float = 1.0
    top_k: int = 5
    correlation_variant: str = "row-row"

    def __post_init__(self) -> None:
        if self.year_from > self.year_to:
            raise ConfigError(f"year_from ({self.year_from}) exceeds year_to ({self.year_to})")
        if self.mass_unit not in MASS_UNITS:
            raise ConfigError(f"mass_unit must be one of {sorted(MASS_UNITS)}, got {self.mass_unit!r}")
        if not self.resolution > 0:
            raise ConfigError("resolution must be > 0")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if self.correlation_variant not in CORRELATION_VARIANTS:
            raise ConfigError(
                f"correlation_variant must be one of {list(CORRELATION_VARIANTS)}, "
                f"got {self.correlation_variant!r}"
            )
        for key in _PATH_KEYS:
            value = getattr(self, key)
            if value is not None and str(value) == "":
                raise ConfigError(f"{key} must not be empty")

    @property
    def ingest(self) -> IngestConfig:
        return IngestConfig(self.year_from, self.year_to, self.mass_unit)  # type: ignore[arg-type]

    def require(self, *keys: str) -> None:
        missing = [k for k in keys if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"missing required setting(s): {', '.join(missing)}")

    def echo(self) -> dict[str, Any]:
        """JSON-friendly view for manifests."""
        out = asdict(self)
        for key in _PATH_KEYS:
            if out[key] is not None:
                out[key] = str(out[key])
        return out


_CASTS = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: Any, base: Path | None) -> Any:
    if raw is None:
        return None
    if key in _PATH_KEYS:
        path = Path(str(raw)).expanduser()
        if base is not None and not path.is_absolute():
            path = base / path
        return path
    kind = _CASTS[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    return str(raw)


def read_config_file(path: str | Path) -> dict[str, str]:
    """Read a flat ``key = value`` file; a ``[calnet]`` header is optional."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not any(line.lstrip().startswith("[") for line in text.splitlines()):
        text = f"[{_SECTION}]\n{text}"
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"bad config {path}: {exc}") from exc
    if not parser.has_section(_SECTION):
        raise ConfigError(f"config {path} has no [{_SECTION}] section")
    values = dict(parser.items(_SECTION))
    unknown = sorted(set(values) - set(_CASTS))
    if unknown:
        raise ConfigError(f"unknown config key(s) in {path}: {', '.join(unknown)}")
    return values


def make_config(
    config_path: str | Path | None = None, overrides: Mapping[str, Any] | None = None
) -> RunConfig:
    """Merge a config file with overrides (non-None overrides win).

    Relative paths in the file resolve against the file's directory; those
    given as overrides resolve against the working directory.
    """
    values: dict[str, Any] = {}
    if config_path is not None:
        base = Path(config_path).resolve().parent
        for key, raw in read_config_file(config_path).items():
            values[key] = _coerce(key, raw, base)
    for key, raw in (overrides or {}).items():
        if raw is not None:
            values[key] = _coerce(key, raw, None)
    return RunConfig(**values)

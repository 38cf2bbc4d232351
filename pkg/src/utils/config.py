"""
Risk Attitude - Configuration Management

Layering: DEFAULT_CONFIG < JSON settings file < command-line flags.
The settings file is ~/.config/riskattitude/settings.json unless --config
names another one.
"""

import copy
import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from ..core.errors import ConfigError, RiskAttitudeError
from ..core.estimation import COMPOUNDING_MODES, Scheme, YearMonth
from ..core.utility import UtilitySpec, parse_utility
from .data_io import FORMATS, CsvSchema, Exclusion, parse_exclusion

logger = logging.getLogger(__name__)

DEFAULT_SETTINGS_PATH = Path.home() / ".config" / "riskattitude" / "settings.json"

PROFILES = ("default", "strict")

DEFAULT_CONFIG: Dict[str, Any] = {
    # expanding:<min_obs> or rolling:<M>; 24 months keeps early sigma estimates sane
    "scheme": "expanding:24",
    # annual yield -> per-period rate: (1+y)^(1/n) - 1, or y/n for "simple"
    "rf_compounding": "geometric",
    "periods_per_year": 12,
    # |corr| <= tau is labeled Constant
    "tau": 0.2,
    # inclusive "YYYY-MM..YYYY-MM" ranges removed before estimation
    "exclusions": [],
    "families": ["quadratic:b=0.2", "log"],
    # [lo, hi] clamps emitted weights for presentation; the raw value is kept
    "clamp": None,
    "split_at": None,
    "out_dir": "out",
    "format": "csv",
    # input returns and yields are in percent
    "percent": False,
    # logical -> file column names, e.g. {"return": "ret_sp500"}
    "columns": {},
    "jobs": 1,
    # w_s interval searched by the numeric portfolio oracle in validate
    "search_bracket": [-20.0, 20.0],
    "profile": "default",
}


def _number(value: Any) -> Optional[float]:
    if isinstance(value, bool):
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


def _pair(value: Any) -> Optional[Tuple[float, float]]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        return None
    lo, hi = _number(value[0]), _number(value[1])
    if lo is None or hi is None or not lo < hi:
        return None
    return lo, hi


class AnalysisConfig:
    """Layered analysis settings."""

    def __init__(self, config_path: Optional[Path] = None, required: bool = False):
        self._config_path = Path(config_path) if config_path else DEFAULT_SETTINGS_PATH
        self._required = required
        self._lock = threading.Lock()
        self._settings: Dict[str, Any] = copy.deepcopy(DEFAULT_CONFIG)
        self.load()

    @property
    def path(self) -> Path:
        return self._config_path

    def load(self) -> None:
        """Load settings from disk, falling back to defaults."""
        if not self._config_path.exists():
            if self._required:
                raise ConfigError(f"settings file not found: {self._config_path}")
            logger.info("No settings file found, using defaults")
            return
        try:
            with open(self._config_path, "r", encoding="utf-8") as f:
                saved = json.load(f)
        except (json.JSONDecodeError, OSError) as e:
            logger.warning("Failed to load settings: %s, using defaults", e)
            return
        if not isinstance(saved, dict):
            logger.warning("Settings file %s is not a JSON object, using defaults", self._config_path)
            return

        known = {k: v for k, v in saved.items() if k in DEFAULT_CONFIG}
        for key in sorted(set(saved) - set(known)):
            logger.info("Ignoring unknown settings key '%s' in %s", key, self._config_path)
        validated, errors = self.validate_update(known)
        for err in errors:
            logger.warning("Settings %s: %s (default kept)", self._config_path, err)
        with self._lock:
            self._settings.update(validated)
        logger.info("Loaded settings from %s", self._config_path)

    def get(self, key: str, default: Any = None) -> Any:
        with self._lock:
            return self._settings.get(key, default)

    def set(self, key: str, value: Any) -> None:
        with self._lock:
            if key in DEFAULT_CONFIG:
                self._settings[key] = value

    def update(self, settings: Dict[str, Any]) -> None:
        with self._lock:
            for key, value in settings.items():
                if key in DEFAULT_CONFIG:
                    self._settings[key] = value

    def to_dict(self) -> Dict[str, Any]:
        with self._lock:
            return dict(self._settings)

    @staticmethod
    def validate_update(data: Dict[str, Any]) -> Tuple[Dict[str, Any], List[str]]:
        """Validate a settings payload. Returns (validated, errors)."""
        validated: Dict[str, Any] = {}
        errors: List[str] = []
        for key, value in data.items():
            if key not in DEFAULT_CONFIG:
                errors.append(f"Unknown config key: {key}")
                continue
            if key == "scheme":
                try:
                    validated[key] = str(Scheme.parse(str(value)))
                except RiskAttitudeError as e:
                    errors.append(f"scheme: {e}")
            elif key == "rf_compounding":
                if value not in COMPOUNDING_MODES:
                    errors.append(f"rf_compounding must be one of: {', '.join(COMPOUNDING_MODES)}")
                    continue
                validated[key] = value
            elif key in ("periods_per_year", "jobs"):
                if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                    errors.append(f"{key} must be a positive integer")
                    continue
                validated[key] = value
            elif key == "tau":
                tau = _number(value)
                if tau is None or not 0 <= tau < 1:
                    errors.append("tau must be a number in [0, 1)")
                    continue
                validated[key] = tau
            elif key == "exclusions":
                if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                    errors.append("exclusions must be a list of 'YYYY-MM..YYYY-MM' strings")
                    continue
                try:
                    for item in value:
                        parse_exclusion(item)
                except RiskAttitudeError as e:
                    errors.append(f"exclusions: {e}")
                    continue
                validated[key] = list(value)
            elif key == "families":
                if not isinstance(value, list) or not value or not all(isinstance(v, str) for v in value):
                    errors.append("families must be a non-empty list of utility strings")
                    continue
                try:
                    validated[key] = [str(parse_utility(v)) for v in value]
                except RiskAttitudeError as e:
                    errors.append(f"families: {e}")
            elif key in ("clamp", "search_bracket"):
                if value is None and key == "clamp":
                    validated[key] = None
                    continue
                pair = _pair(value)
                if pair is None:
                    errors.append(f"{key} must be a [lo, hi] pair with lo < hi")
                    continue
                validated[key] = list(pair)
            elif key == "split_at":
                if value is None:
                    validated[key] = None
                    continue
                cut = _number(value)
                if cut is None:
                    errors.append("split_at must be a number or null")
                    continue
                validated[key] = cut
            elif key == "out_dir":
                if not isinstance(value, str) or not value.strip():
                    errors.append("out_dir must be a non-empty string")
                    continue
                validated[key] = value.strip()
            elif key == "format":
                if value not in FORMATS:
                    errors.append(f"format must be one of: {', '.join(FORMATS)}")
                    continue
                validated[key] = value
            elif key == "percent":
                if not isinstance(value, bool):
                    errors.append("percent must be a boolean")
                    continue
                validated[key] = value
            elif key == "columns":
                if not isinstance(value, dict) or not all(
                    isinstance(k, str) and isinstance(v, str) and v.strip() for k, v in value.items()
                ):
                    errors.append("columns must map logical names to non-empty file column names")
                    continue
                try:
                    CsvSchema.from_mapping(value)
                except RiskAttitudeError as e:
                    errors.append(f"columns: {e}")
                    continue
                validated[key] = dict(value)
            elif key == "profile":
                if value not in PROFILES:
                    errors.append(f"profile must be one of: {', '.join(PROFILES)}")
                    continue
                validated[key] = value
            else:
                validated[key] = value
        return validated, errors


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved, immutable settings for one CLI run."""
    inputs: Tuple[Path, ...]
    scheme: Scheme = field(default_factory=lambda: Scheme("expanding", 24))
    exclusions: Tuple[Exclusion, ...] = ()
    rf_compounding: str = "geometric"
    periods_per_year: int = 12
    tau: float = 0.2
    split_at: Optional[float] = None
    families: Tuple[UtilitySpec, ...] = ()
    clamp: Optional[Tuple[float, float]] = None
    out_dir: Path = Path("out")
    fmt: str = "csv"
    schema: CsvSchema = field(default_factory=CsvSchema)
    jobs: int = 1
    start: Optional[YearMonth] = None
    end: Optional[YearMonth] = None
    label: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.inputs:
            raise ConfigError("at least one --input is required")
        if self.scheme.size < 2:
            raise ConfigError(f"{self.scheme.kind} size must be >= 2")
        if not 0 <= self.tau < 1:
            raise ConfigError(f"tau must lie in [0, 1), got {self.tau!r}")
        if self.rf_compounding not in COMPOUNDING_MODES:
            raise ConfigError(f"rf compounding must be one of {COMPOUNDING_MODES}")
        if self.fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.clamp is not None and not self.clamp[0] < self.clamp[1]:
            raise ConfigError(f"clamp bounds must satisfy lo < hi, got {self.clamp}")
        if self.start is not None and self.end is not None and self.start > self.end:
            raise ConfigError(f"--start {self.start} is after --end {self.end}")
        if self.label is not None and len(self.inputs) > 1:
            raise ConfigError("--label applies to a single --input")

    @classmethod
    def from_settings(cls, settings: Dict[str, Any], inputs: Tuple[Path, ...], **extra: Any) -> "RunConfig":
        """Build from a resolved settings dict (defaults < file < flags)."""
        try:
            clamp = settings.get("clamp")
            return cls(
                inputs=tuple(Path(p) for p in inputs),
                scheme=Scheme.parse(settings["scheme"]),
                exclusions=tuple(parse_exclusion(e) for e in settings["exclusions"]),
                rf_compounding=settings["rf_compounding"],
                periods_per_year=int(settings["periods_per_year"]),
                tau=float(settings["tau"]),
                split_at=settings.get("split_at"),
                families=tuple(parse_utility(f) for f in settings["families"]),
                clamp=tuple(clamp) if clamp is not None else None,
                out_dir=Path(settings["out_dir"]),
                fmt=settings["format"],
                schema=CsvSchema.from_mapping(settings["columns"], bool(settings["percent"])),
                jobs=int(settings["jobs"]),
                **extra,
            )
        except ConfigError:
            raise
        except RiskAttitudeError as e:
            raise ConfigError(str(e)) from None

"""
Settings Manager for solver configuration.
Resolves defaults, a key=value settings file, inline --params overrides and CLI flags.
"""

import logging
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

from modules.dynamics import SystemId
from modules.errors import ConfigError
from modules.formula import Objective
from modules.kernel import S2Mode, SystemParams

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "OSCSAT_LOG_LEVEL"
VALID_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

# Keys that land on the field of the selected system
SYSTEM_KEYS = {
    'A': ('coupling_one', 'coupling_two'),
    'kernel_normalized': ('normalized_one', 'normalized_two'),
}

# Short names accepted by --params and the settings file
PARAM_ALIASES = {
    'As': 'injection',
    'A_s': 'injection',
    'an': 'noise',
    'a_n': 'noise',
    'omega': 'omega',
    'dt': 'dt',
}


@dataclass
class SolverSettings:
    """Solver settings with defaults"""

    # Model
    system: str = SystemId.ONE.value
    objective: str = ""  # empty: sat for System I, max_nae for System II
    s2_mode: str = S2Mode.FULL.value
    coupling_one: float = 10.0 / (2.0 * math.pi)
    coupling_two: float = 5.0 / (2.0 * math.pi)
    injection: float = 0.01 / (2.0 * math.pi)
    omega: float = 2.0 * math.pi
    normalized_one: bool = False
    normalized_two: bool = True

    # Integration
    noise: float = 5e-4
    dt: float = 1e-3
    periods: float = 100.0
    sample_stride: int = 100
    window_periods: float = 3.0

    # Search
    restarts: int = 20
    seed: int = 0
    workers: int = 0  # 0: one per available core
    use_oracle: bool = True
    oracle_cap: int = 24

    # Advanced
    log_level: str = "INFO"

    def to_dict(self) -> Dict[str, Any]:
        """Convert settings to dictionary"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SolverSettings':
        """Create settings from dictionary"""
        # Filter only known fields to handle version differences
        known_fields = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known_fields)
        if unknown:
            logger.warning(f"Ignoring unknown settings: {', '.join(unknown)}")
        return cls(**{k: v for k, v in data.items() if k in known_fields})

    @property
    def system_id(self) -> SystemId:
        return SystemId(self.system)

    @property
    def objective_kind(self) -> Objective:
        if self.objective:
            return Objective(self.objective)
        return self.system_id.default_objective

    @property
    def coupling(self) -> float:
        return self.coupling_one if self.system_id is SystemId.ONE else self.coupling_two

    @property
    def kernel_normalized(self) -> bool:
        return self.normalized_one if self.system_id is SystemId.ONE else self.normalized_two

    def to_params(self) -> SystemParams:
        """Model parameters for the selected system; System I carries no injection"""
        injection = self.injection if self.system_id is SystemId.TWO else 0.0
        return SystemParams(
            A=self.coupling,
            A_s=injection,
            omega=self.omega,
            a_n=self.noise,
            dt=self.dt,
            kernel_normalized=self.kernel_normalized,
            s2_mode=S2Mode(self.s2_mode),
        )

    @property
    def t_end(self) -> float:
        return self.periods * 2.0 * math.pi / self.omega


class SettingsManager:
    """
    Layered settings resolution.
    Apply the file, then --params, then explicit flags; later layers win.
    """

    def __init__(self, settings: Optional[SolverSettings] = None):
        self._settings = settings if settings is not None else SolverSettings()

    @property
    def settings(self) -> SolverSettings:
        return self._settings

    def load_file(self, path: Union[str, Path]) -> SolverSettings:
        """
        Read `key = value` lines; `#` starts a comment.

        Raises:
            ConfigError: unreadable file or malformed line
        """
        try:
            text = Path(path).read_text(encoding='utf-8')
        except OSError as e:
            raise ConfigError(f"Cannot read settings file {path}: {e}") from e

        values = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError(f"{path}:{number}: expected key = value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split('=', 1))
            values[key] = value

        logger.info(f"Loaded {len(values)} settings from {path}")
        return self.apply_strings(values)

    def apply_params(self, text: str) -> SolverSettings:
        """Apply an inline override string such as `A=1.5,As=0.002,dt=5e-4`"""
        values = {}
        for item in filter(None, (part.strip() for part in text.split(','))):
            if '=' not in item:
                raise ConfigError(f"Malformed --params entry {item!r}; expected key=value")
            key, value = (part.strip() for part in item.split('=', 1))
            values[key] = value
        return self.apply_strings(values)

    def apply_strings(self, values: Dict[str, str]) -> SolverSettings:
        """Convert string values to the field types and apply them in one step"""
        converted = {}
        # system is applied first so that `A` and `kernel_normalized` land on the right field
        if 'system' in values:
            converted['system'] = self._deserialize_value('system', values['system'])
            self._settings = replace(self._settings, system=converted['system'])
        for key, value in values.items():
            field_name = self._resolve_key(key)
            if field_name is None:
                logger.warning(f"Unknown setting key: {key}")
                continue
            converted[field_name] = self._deserialize_value(field_name, value)
        return self.apply_overrides(converted)

    def apply_overrides(self, overrides: Dict[str, Any]) -> SolverSettings:
        """Apply already-typed values; None means "not given" """
        given = {k: v for k, v in overrides.items() if v is not None}
        if not given:
            return self._settings
        if 'system' in given:
            self._settings = replace(self._settings, system=given['system'])
        given = {self._resolve_key(k) if k in SYSTEM_KEYS else k: v for k, v in given.items()}
        known = {f.name for f in fields(SolverSettings)}
        unknown = set(given) - known
        if unknown:
            raise ConfigError(f"Unknown settings: {', '.join(sorted(unknown))}")
        self._settings = replace(self._settings, **given)
        logger.debug(f"Applied settings: {given}")
        return self._settings

    def _resolve_key(self, key: str) -> Optional[str]:
        if key in SYSTEM_KEYS:
            one, two = SYSTEM_KEYS[key]
            return one if self._settings.system == SystemId.ONE.value else two
        if key in PARAM_ALIASES:
            return PARAM_ALIASES[key]
        if key in {f.name for f in fields(SolverSettings)}:
            return key
        return None

    def _serialize_value(self, value: Any) -> str:
        """Serialize a value for a settings file"""
        if isinstance(value, bool):
            return "true" if value else "false"
        return repr(value) if isinstance(value, float) else str(value)

    def _deserialize_value(self, key: str, value: str) -> Any:
        """Deserialize a string using the type of the default setting"""
        default_settings = SolverSettings()
        expected_type = type(getattr(default_settings, key, ""))

        try:
            if expected_type == bool:
                lowered = value.strip().lower()
                if lowered in ("true", "1", "yes", "on"):
                    return True
                if lowered in ("false", "0", "no", "off"):
                    return False
                raise ValueError(f"not a boolean: {value!r}")
            elif expected_type == int:
                return int(value)
            elif expected_type == float:
                return float(value)
            return value
        except (ValueError, TypeError) as e:
            raise ConfigError(f"Invalid value for {key}: {e}") from e

    def dump(self) -> str:
        """Settings as a key = value file"""
        return ''.join(f"{key} = {self._serialize_value(value)}\n"
                       for key, value in self._settings.to_dict().items())

    def validate(self) -> SolverSettings:
        """
        Check enums, budgets and model parameters.

        Raises:
            ConfigError: on the first invalid value
        """
        s = self._settings
        try:
            system_id = s.system_id
            objective = s.objective_kind
            S2Mode(s.s2_mode)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if system_id is SystemId.ONE and objective is Objective.MAX_NAE:
            raise ConfigError("System I solves sat or max_sat, not max_nae")
        if s.restarts < 1:
            raise ConfigError(f"restarts must be at least 1, got {s.restarts}")
        if not s.periods >= 0.0:
            raise ConfigError(f"periods must be non-negative, got {s.periods}")
        if s.sample_stride < 1:
            raise ConfigError(f"sample_stride must be at least 1, got {s.sample_stride}")
        if not s.window_periods > 0.0:
            raise ConfigError(f"window_periods must be positive, got {s.window_periods}")
        if s.workers < 0:
            raise ConfigError(f"workers must be non-negative, got {s.workers}")
        if s.oracle_cap < 0:
            raise ConfigError(f"oracle_cap must be non-negative, got {s.oracle_cap}")
        if s.log_level.upper() not in VALID_LOG_LEVELS:
            raise ConfigError(f"Unknown log level {s.log_level!r}")
        params = s.to_params().require_positive_coupling()
        if not params.dt < params.period / 10.0:
            raise ConfigError(f"dt={params.dt} must be below a tenth of the period {params.period}")
        return s

    def resolve_log_level(self, cli_level: Optional[str] = None) -> str:
        """--log-level flag, then the environment variable, then the settings file"""
        for candidate in (cli_level, os.environ.get(LOG_LEVEL_ENV), self._settings.log_level):
            if candidate:
                level = candidate.strip().upper()
                if level in VALID_LOG_LEVELS:
                    return level
                logger.warning(f"Ignoring unknown log level {candidate!r}")
        return "INFO"

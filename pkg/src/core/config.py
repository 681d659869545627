import json
import shutil
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .engine import Tolerances
from .errors import ValidationError
from .qstate import N_MAX

DEFAULT_CONFIG_DIR = Path.home() / ".qsu_sim"
DEFAULT_CONFIG_FILE = DEFAULT_CONFIG_DIR / "config.json"

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

# key -> (lowest or None, highest)
_INT_RANGES = {
    "n_max": (1, N_MAX),
    "default_seed": (0, (1 << 64) - 1),
    "default_trials": (1, 1 << 40),
    "jobs": (1, 256),
    "sharp_tolerance_exp": (None, -1),
    "readout_tolerance_exp": (None, -1),
    "drift_tolerance_exp": (None, -1),
}


@dataclass
class SimulatorConfig:
    """Persistent simulator settings; command-line flags override them."""

    n_max: int = N_MAX
    default_seed: int = 0
    default_trials: int = 10000
    jobs: int = 1
    log_level: str = "WARNING"
    log_file: Optional[str] = None
    sharp_tolerance_exp: int = -17
    readout_tolerance_exp: int = -14
    drift_tolerance_exp: int = -15

    def tolerances(self) -> Tolerances:
        return Tolerances(self.sharp_tolerance_exp, self.readout_tolerance_exp, self.drift_tolerance_exp)

    def with_value(self, key: str, text: str) -> 'SimulatorConfig':
        """
        Copy of the settings with one key parsed from text.

        Args:
            key: Field name
            text: New value; 'none' clears log_file

        Returns:
            Updated SimulatorConfig

        Raises:
            ValidationError: unknown key or a value outside its range
        """
        known = {f.name for f in fields(self)}
        if key not in known:
            raise ValidationError(f"unknown config key '{key}' (expected one of {', '.join(sorted(known))})")

        if key == 'log_file':
            value = None if text.lower() in ('none', 'null', '') else text
        elif key == 'log_level':
            value = text.upper()
            if value not in LOG_LEVELS:
                raise ValidationError(f"log_level must be one of {', '.join(LOG_LEVELS)}")
        else:
            try:
                value = int(text, 0)
            except ValueError:
                raise ValidationError(f"{key} expects an integer, got '{text}'") from None
            low, high = _INT_RANGES[key]
            if (low is not None and value < low) or value > high:
                bound = f"at most {high}" if low is None else f"within {low}..{high}"
                raise ValidationError(f"{key}={value} must be {bound}")
        return replace(self, **{key: value})


class ConfigManager:
    """Manages persistent configuration with atomic writes."""

    def __init__(self, config_file: Path = DEFAULT_CONFIG_FILE):
        """
        Initialize config manager.

        Args:
            config_file: Path to config JSON file
        """
        self.config_file = Path(config_file)
        self.config_file.parent.mkdir(parents=True, exist_ok=True)

    def load(self) -> SimulatorConfig:
        """
        Load configuration from disk with error recovery.

        Unknown keys are ignored; a missing or corrupt file gives the defaults.

        Returns:
            SimulatorConfig
        """
        if not self.config_file.exists():
            return SimulatorConfig()

        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                data = json.load(f)
            known = {f.name for f in fields(SimulatorConfig)}
            return SimulatorConfig(**{k: v for k, v in data.items() if k in known})

        except (json.JSONDecodeError, TypeError, AttributeError, OSError):
            return SimulatorConfig()

    def save(self, config: SimulatorConfig) -> bool:
        """
        Save configuration with atomic write.

        Uses temp file + rename for atomic operation to prevent corruption.

        Args:
            config: Settings to persist

        Returns:
            True if successful, False otherwise
        """
        try:
            temp_file = self.config_file.with_suffix('.tmp')
            with open(temp_file, 'w', encoding='utf-8') as f:
                json.dump(asdict(config), f, indent=2)

            if temp_file.exists():
                shutil.move(str(temp_file), str(self.config_file))

            return True

        except Exception:
            return False

from pathlib import Path
from typing import Any
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


DEFAULTS: dict[str, Any] = {
    "oracle": {
        "sizes": [5, 7],
        "samples": 5,
        "seed": 0,
        "entry_min": -9,
        "entry_max": 9,
        "max_retries": 100,
    },
    "quasi": {"word_samples": 24, "seed": 0},
    "workers": {"count": 4},
    "database": {"enabled": False, "url": "sqlite:///./surfalg.db"},
    "logging": {"level": "WARNING"},
}

ENV_PREFIX = "SURFALG_"


class Config:
    """Configuration manager for loading and accessing TOML config files."""

    _instance: "Config | None" = None
    _config_data: dict[str, Any] = {}

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def load(self, config_path: str | Path) -> "Config":
        """Load configuration from a TOML file."""
        config_path = Path(config_path)
        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {config_path}")

        with open(config_path, "rb") as f:
            self._config_data = tomllib.load(f)

        return self

    def reset(self) -> "Config":
        """Drop loaded values so only defaults and the environment apply."""
        self._config_data = {}
        return self

    def _get_env_override(self, key: str):
        """Read SURFALG_<SECTION>_<NAME>, parsed as a TOML value when possible"""
        raw = os.environ.get(ENV_PREFIX + key.replace(".", "_").upper())
        if raw is None:
            return None
        try:
            return tomllib.loads(f"value = {raw}")["value"]
        except tomllib.TOMLDecodeError:
            return raw

    @staticmethod
    def _walk(data: dict[str, Any], keys: list[str]):
        value: Any = data
        for k in keys:
            if isinstance(value, dict):
                value = value.get(k)
                if value is None:
                    return None
            else:
                return None
        return value

    def get(self, key: str, default: Any = None):
        """
        Get a configuration value using dot notation.

        Examples:
            config.get("oracle.sizes")
            config.get("workers.count", 1)

        Priority:
            1. Environment variables (SURFALG_ORACLE_SEED=3)
            2. Local config file
            3. Built-in defaults, then the caller's default
        """
        override = self._get_env_override(key)
        if override is not None:
            return override

        keys = key.split(".")
        value = self._walk(self._config_data, keys)
        if value is not None:
            return value

        value = self._walk(DEFAULTS, keys)
        if value is not None:
            return value

        return default

    def __getitem__(self, key: str):
        """Access config using dictionary-style syntax."""
        return self._config_data[key]

    def __contains__(self, key: str):
        """Check if a top-level key exists in config."""
        return key in self._config_data

    @property
    def data(self):
        """Get the entire configuration dictionary."""
        return self._config_data


# Singleton instance
CONFIG = Config()


def load_config(config_path: str | Path | None = None):
    """
    Load configuration from TOML file.

    Args:
        config_path: Path to the config file. If None, looks for config.toml
                     in the project root.

    A missing file is not an error: built-in defaults apply.
    """
    if config_path is None:
        project_root = Path(__file__).parent.parent
        config_path = project_root / "config.toml"

    try:
        return CONFIG.load(config_path)
    except FileNotFoundError:
        return CONFIG


# Auto-load configuration when module is imported
load_config()


__all__ = ["CONFIG", "Config", "DEFAULTS", "load_config"]

"""
Configuration manager for loading and accessing toolkit settings.
"""
import os
import yaml
from pathlib import Path

from banddensity.errors import ConfigError

HORIZON_ENV_VAR = "BANDDENSITY_HORIZON"


class ConfigManager:
    """Manages configuration settings for the band-density toolkit."""

    _instance = None
    _config = None
    _path = None

    def __new__(cls):
        """Singleton pattern to ensure only one config instance."""
        if cls._instance is None:
            cls._instance = super(ConfigManager, cls).__new__(cls)
        return cls._instance

    def __init__(self):
        """Initialize the config manager and load configuration."""
        if self._config is None:
            self.load_config()

    def load_config(self, config_path: str = None):
        """
        Load configuration from YAML file.

        Args:
            config_path: Path to config file. If None, uses default config.yaml

        Raises:
            ConfigError: If the file is missing or is not a YAML mapping
        """
        if config_path is None:
            # Get project root directory
            project_root = Path(__file__).parent.parent.parent
            config_path = project_root / "config.yaml"

        try:
            with open(config_path, 'r') as file:
                loaded = yaml.safe_load(file)
        except FileNotFoundError as e:
            raise ConfigError(f"Config file not found: {config_path}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"Config file {config_path} is not valid YAML: {e}") from e

        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"Config file {config_path} must contain a mapping, got {type(loaded).__name__}")
        self._config = loaded
        self._path = str(config_path)

    def get(self, key_path: str, default=None):
        """
        Get configuration value using dot notation.

        Args:
            key_path: Configuration key in dot notation (e.g., 'diagnostics.horizon')
            default: Default value if key not found

        Returns:
            Configuration value or default

        Example:
            config.get('diagnostics.delta')  # Returns 0.1
            config.get('arithmetic.mode')  # Returns 'rational'
        """
        keys = key_path.split('.')
        value = self._config

        try:
            for key in keys:
                value = value[key]
            return value
        except (KeyError, TypeError):
            return default

    def get_arithmetic_config(self) -> dict:
        """Get all arithmetic configuration settings."""
        return self._config.get('arithmetic', {})

    def get_diagnostics_config(self) -> dict:
        """
        Get series diagnostics settings with the environment override applied.

        The horizon comes from BANDDENSITY_HORIZON when that variable is set.

        Raises:
            ConfigError: If BANDDENSITY_HORIZON is not a positive integer
        """
        settings = dict(self._config.get('diagnostics', {}))
        raw = os.environ.get(HORIZON_ENV_VAR)
        if raw is not None and raw.strip():
            try:
                horizon = int(float(raw))
            except ValueError as e:
                raise ConfigError(f"{HORIZON_ENV_VAR} must be an integer, got {raw!r}") from e
            if horizon < 1:
                raise ConfigError(f"{HORIZON_ENV_VAR} must be positive, got {horizon}")
            settings['horizon'] = horizon
        settings.setdefault('horizon', 100000)
        return settings

    def get_tolerance_config(self) -> dict:
        """Get all verification tolerance settings."""
        return self._config.get('tolerances', {})

    def get_sweep_config(self) -> dict:
        """Get all sweep configuration settings."""
        return self._config.get('sweep', {})

    def get_logging_config(self) -> dict:
        """Get all logging configuration settings."""
        return self._config.get('logging', {})

    @property
    def path(self) -> str:
        """Path of the loaded configuration file."""
        return self._path

    @property
    def config(self) -> dict:
        """Get the full configuration dictionary."""
        return self._config


# Global config instance
config = ConfigManager()

"""
Configuration management module for the stochastic-order game toolkit.
Handles loading configuration from JSON files and environment variables.
"""

import json
import logging
import os
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from .distributions import TruncationPolicy
from .exceptions import InvalidConfigurationError
from .game import SolverConfig
from .oracle import OracleConfig
from .ordering import OrderingConfig

ENV_KMAX = "STOCHORDER_KMAX"
ENV_LOG_LEVEL = "STOCHORDER_LOG_LEVEL"
ENV_THREADS = "STOCHORDER_THREADS"


class ConfigManager:
    """Manages application configuration from files and environment variables."""

    REQUIRED_KEYS = ['log_file_path', 'k_max', 'ordering', 'solver', 'truncation']

    def __init__(self, config_file_path: str = "config/app_config.json"):
        """
        Initialize configuration manager.

        Args:
            config_file_path: Path to the JSON configuration file
        """
        self.config_file_path = config_file_path
        self.config: Dict[str, Any] = {}
        self._load_configuration()

    def _load_configuration(self) -> None:
        """Load configuration from JSON file and environment variables."""
        try:
            load_dotenv()

            if not os.path.exists(self.config_file_path):
                raise InvalidConfigurationError(
                    f"Configuration file not found: {self.config_file_path}"
                )

            with open(self.config_file_path, 'r', encoding='utf-8') as file:
                self.config = json.load(file)

            logging.info(f"Configuration loaded from {self.config_file_path}")
            self._validate_configuration()

        except json.JSONDecodeError as e:
            raise InvalidConfigurationError(f"Invalid JSON in configuration file: {e}")
        except InvalidConfigurationError:
            raise
        except Exception as e:
            raise InvalidConfigurationError(f"Error loading configuration: {e}")

    def _validate_configuration(self) -> None:
        """Validate that required configuration values are present and well-formed."""
        if not isinstance(self.config, dict):
            raise InvalidConfigurationError("Configuration file must hold a JSON object")
        missing_keys = [key for key in self.REQUIRED_KEYS if key not in self.config]
        if missing_keys:
            raise InvalidConfigurationError(f"Missing required configuration keys: {missing_keys}")

        for section in ('ordering', 'solver', 'truncation'):
            if not isinstance(self.config[section], dict):
                raise InvalidConfigurationError(f"Configuration section '{section}' must be an object")
        # building the value objects runs their own validation
        self.get_ordering_config()
        self.get_solver_config()
        self.get_truncation_policy()

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value."""
        return self.config.get(key, default)

    def get_env(self, key: str, default: Any = None) -> str:
        """Get environment variable."""
        value = os.getenv(key, default)
        if value is None:
            raise InvalidConfigurationError(f"Required environment variable not set: {key}")
        return value

    def _positive_int(self, value: Any, source: str) -> int:
        try:
            number = int(str(value).strip())
        except ValueError:
            raise InvalidConfigurationError(f"{source} must be an integer, got {value!r}")
        if number < 1:
            raise InvalidConfigurationError(f"{source} must be at least 1, got {number}")
        return number

    def get_k_max(self) -> int:
        """Moment horizon; STOCHORDER_KMAX overrides the file value."""
        override = os.getenv(ENV_KMAX)
        if override is not None:
            return self._positive_int(override, ENV_KMAX)
        return self._positive_int(self.get('k_max', 64), 'k_max')

    def get_threads(self) -> int:
        override = os.getenv(ENV_THREADS)
        if override is not None:
            return self._positive_int(override, ENV_THREADS)
        return self._positive_int(self.get('threads', 1), 'threads')

    def get_log_level(self) -> str:
        level = os.getenv(ENV_LOG_LEVEL, self.get('log_level', 'INFO'))
        if level.upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            raise InvalidConfigurationError(f"Unknown log level: {level}")
        return level.upper()

    def _build(self, cls, section: Dict[str, Any], name: str, **forced):
        try:
            return cls(**{**section, **forced})
        except (TypeError, ValueError) as e:
            raise InvalidConfigurationError(f"Invalid '{name}' configuration: {e}")

    def get_ordering_config(self, overrides: Optional[Dict[str, Any]] = None) -> OrderingConfig:
        """Ordering tolerances; game-file overrides take precedence over the environment."""
        section = {**self.get('ordering', {}), 'k_max': self.get_k_max()}
        return self._build(OrderingConfig, {**section, **(overrides or {})}, 'ordering')

    def get_solver_config(self, overrides: Optional[Dict[str, Any]] = None) -> SolverConfig:
        """Fictitious-play settings; game-file overrides take precedence over the environment."""
        section = {**self.get('solver', {}), 'k_max': self.get_k_max(), 'threads': self.get_threads()}
        return self._build(SolverConfig, {**section, **(overrides or {})}, 'solver')

    def get_truncation_policy(self) -> TruncationPolicy:
        try:
            return TruncationPolicy(**self.get('truncation', {}))
        except Exception as e:
            raise InvalidConfigurationError(f"Invalid 'truncation' configuration: {e}")

    def get_oracle_config(self) -> OracleConfig:
        return self._build(OracleConfig, self.get('oracle', {}), 'oracle')

    def get_output_directory(self) -> str:
        """Get output directory path."""
        return self.get('output_directory', 'data/output')

    def get_log_path(self) -> str:
        """Get log file path."""
        return self.get('log_file_path')

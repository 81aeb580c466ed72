"""
Unit tests for config_manager module.
"""

import json
import os
import tempfile
from unittest.mock import patch

import pytest

from src.config_manager import ConfigManager
from src.exceptions import InvalidConfigurationError


class TestConfigManager:
    """Test cases for ConfigManager class."""

    def test_valid_configuration_loading(self, config_file):
        """Test loading valid configuration file."""
        config_manager = ConfigManager(config_file())
        assert config_manager.get_k_max() == 32
        assert config_manager.get_log_path().endswith("app.log")
        assert config_manager.get_solver_config().max_iters == 20000

    def test_missing_configuration_file(self):
        """Test error handling for missing configuration file."""
        with pytest.raises(InvalidConfigurationError):
            ConfigManager("nonexistent.json")

    def test_invalid_json_format(self):
        """Test error handling for invalid JSON."""
        with tempfile.NamedTemporaryFile(mode='w', suffix='.json', delete=False) as f:
            f.write("invalid json content")
            config_path = f.name

        try:
            with pytest.raises(InvalidConfigurationError):
                ConfigManager(config_path)
        finally:
            os.unlink(config_path)

    def test_missing_required_keys(self):
        """Test error handling for missing required configuration keys."""
        config_data = {"log_file_path": "app.log"}

        with tempfile.NamedTemporaryFile(mode='w', suffix='.json', delete=False) as f:
            json.dump(config_data, f)
            config_path = f.name

        try:
            with pytest.raises(InvalidConfigurationError, match="k_max"):
                ConfigManager(config_path)
        finally:
            os.unlink(config_path)

    def test_invalid_section_values(self, config_file):
        """Test that invalid solver values are reported as configuration errors."""
        with pytest.raises(InvalidConfigurationError, match="solver"):
            ConfigManager(config_file(solver={"criterion": "median"}))

    def test_unknown_section_option(self, config_file):
        """Test that unknown ordering options are rejected."""
        with pytest.raises(InvalidConfigurationError, match="ordering"):
            ConfigManager(config_file(ordering={"no_such_option": 1}))

    @patch.dict(os.environ, {'STOCHORDER_KMAX': '96'})
    def test_kmax_environment_override(self, config_file):
        """Test that STOCHORDER_KMAX overrides the file value everywhere."""
        config_manager = ConfigManager(config_file())
        assert config_manager.get_k_max() == 96
        assert config_manager.get_ordering_config().k_max == 96
        assert config_manager.get_solver_config().k_max == 96

    @patch.dict(os.environ, {'STOCHORDER_KMAX': 'many'})
    def test_invalid_kmax_environment(self, config_file):
        """Test that a non-integer STOCHORDER_KMAX is a configuration error."""
        with pytest.raises(InvalidConfigurationError, match="STOCHORDER_KMAX"):
            ConfigManager(config_file())

    @patch.dict(os.environ, {'STOCHORDER_KMAX': '0'})
    def test_nonpositive_kmax_environment(self, config_file):
        """Test that STOCHORDER_KMAX below 1 is a configuration error."""
        with pytest.raises(InvalidConfigurationError):
            ConfigManager(config_file())

    @patch.dict(os.environ, {'STOCHORDER_THREADS': '4', 'STOCHORDER_LOG_LEVEL': 'debug'})
    def test_thread_and_log_level_environment(self, config_file):
        """Test accessing the thread count and log level from the environment."""
        config_manager = ConfigManager(config_file())
        assert config_manager.get_threads() == 4
        assert config_manager.get_solver_config().threads == 4
        assert config_manager.get_log_level() == "DEBUG"

    @patch.dict(os.environ, {'STOCHORDER_KMAX': '96'})
    def test_game_file_overrides_win(self, config_file):
        """Test that game-file overrides take precedence over the environment."""
        config_manager = ConfigManager(config_file())
        solver = config_manager.get_solver_config({"k_max": 16, "criterion": "expectation"})
        assert solver.k_max == 16
        assert solver.criterion == "expectation"

    def test_truncation_and_oracle_sections(self, config_file):
        """Test building the truncation policy and oracle settings."""
        config_manager = ConfigManager(config_file(truncation={"tail_mass_delta": 1e-6},
                                                   oracle={"k_max": 64}))
        assert config_manager.get_truncation_policy().tail_mass_delta == 1e-6
        assert config_manager.get_oracle_config().k_max == 64

    def test_invalid_truncation_section(self, config_file):
        """Test that a tail mass outside (0, 1) is rejected."""
        with pytest.raises(InvalidConfigurationError, match="truncation"):
            ConfigManager(config_file(truncation={"tail_mass_delta": 2.0}))

    def test_environment_variable_access(self):
        """Test accessing required environment variables."""
        with patch.dict(os.environ, {'SOME_SETTING': 'value'}):
            manager = ConfigManager.__new__(ConfigManager)
            manager.config = {}
            assert manager.get_env('SOME_SETTING') == 'value'
            with pytest.raises(InvalidConfigurationError):
                manager.get_env('STOCHORDER_UNSET_VARIABLE')

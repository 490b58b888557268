"""
Tests for sweep configuration and scaling grid loading
"""
from pathlib import Path

import pytest
from pydantic import ValidationError

from app.config.settings import settings
from app.config.sweep_config import (
    SweepConfig,
    SweepMode,
    load_scaling_grid,
    load_sweep_config,
)
from app.exceptions import ConfigurationError
from app.services.analysis import Pooling

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


class TestSweepConfig:
    def test_defaults(self):
        cfg = SweepConfig()
        assert cfg.L == [8, 16, 24]
        assert cfg.alpha_max == 1.5
        assert cfg.cap == 24
        assert cfg.mode is SweepMode.CLASSICAL_EXACT
        assert cfg.pooling is Pooling.UNION
        assert cfg.matrices_for(8) == 900
        assert cfg.matrices_for(24) == 50

    def test_sizes_sorted_and_deduplicated(self):
        assert SweepConfig(L=[16, 8, 16]).L == [8, 16]

    def test_rejects_small_or_missing_sizes(self):
        with pytest.raises(ValidationError):
            SweepConfig(L=[])
        with pytest.raises(ValidationError):
            SweepConfig(L=[3, 8])

    def test_rejects_infeasible_alpha(self):
        with pytest.raises(ValidationError, match="distinct rows"):
            SweepConfig(L=[5], alpha_max=2.5)

    def test_rejects_single_matrix(self):
        with pytest.raises(ValidationError):
            SweepConfig(matrices=1)
        with pytest.raises(ValidationError):
            SweepConfig(matrices_overrides={8: 1})

    def test_noise_bounds(self):
        with pytest.raises(ValidationError):
            SweepConfig(noise={"p2": 1.2})

    def test_hash_is_stable_and_sensitive(self):
        assert SweepConfig().config_hash() == SweepConfig().config_hash()
        assert len(SweepConfig().config_hash()) == 12
        assert SweepConfig(seed=1).config_hash() != SweepConfig(seed=2).config_hash()

    def test_hash_ignores_scheduling_and_emission(self, tmp_path):
        base = SweepConfig(seed=5)
        assert SweepConfig(seed=5, workers=4).config_hash() == base.config_hash()
        assert SweepConfig(seed=5, emit_circuits_dir=str(tmp_path), emit_circuits_samples=3).config_hash() == base.config_hash()
        assert SweepConfig(seed=5, cap=12).config_hash() != base.config_hash()

    def test_run_dir(self, tmp_path):
        cfg = SweepConfig(seed=7)
        assert cfg.run_dir(str(tmp_path)) == tmp_path / f"{cfg.config_hash()}-seed7"

    def test_thread_override(self, monkeypatch):
        monkeypatch.setattr(settings, "VITRIQ_THREADS", 3)
        assert SweepConfig(workers=1).effective_workers() == 3
        monkeypatch.setattr(settings, "VITRIQ_THREADS", 0)
        assert SweepConfig(workers=2).effective_workers() == 2


class TestLoading:
    def test_bundled_configs_validate(self):
        small = load_sweep_config(str(CONFIG_DIR / "sweep_small.yaml"))
        assert small.mode is SweepMode.CLASSICAL_EXACT
        shots = load_sweep_config(str(CONFIG_DIR / "sweep_shots.yaml"))
        assert shots.mode is SweepMode.SIMULATED_SHOTS
        assert shots.noise.p_ro == 0.01
        grid = load_scaling_grid(str(CONFIG_DIR / "grid_default.yaml"))
        assert grid == load_scaling_grid()

    def test_partial_file_uses_defaults(self, tmp_path):
        path = tmp_path / "sweep.yaml"
        path.write_text("L: [8]\nmatrices: 10\n", encoding="utf-8")
        cfg = load_sweep_config(str(path))
        assert cfg.L == [8] and cfg.matrices == 10 and cfg.seed == 0

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("", encoding="utf-8")
        assert load_sweep_config(str(path)) == SweepConfig()

    def test_error_names_file_and_field(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("matrices: 1\n", encoding="utf-8")
        with pytest.raises(ConfigurationError) as exc:
            load_sweep_config(str(path))
        assert str(path) in str(exc.value)
        assert "matrices" in str(exc.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            load_sweep_config(str(tmp_path / "nope.yaml"))

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("L: [8\n", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="invalid YAML"):
            load_sweep_config(str(path))

    def test_non_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_sweep_config(str(path))

    def test_bad_grid(self, tmp_path):
        path = tmp_path / "grid.yaml"
        path.write_text("nu_step: 0\n", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="nu_step"):
            load_scaling_grid(str(path))

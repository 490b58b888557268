"""
Tests for the end-to-end sweep, its aggregation and its output files
"""
import json

import numpy as np
import pytest

from app.config.sweep_config import NoiseSettings, SweepConfig, SweepMode
from app.exceptions import OutputError
from app.services.analysis import (
    count_ground_states,
    exact_order_parameter,
    group_by_parity,
    load_data_points,
    pool_solutions,
    pooled_order_parameter,
)
from app.services.compiler import compile_optimized, lower_to_cnot
from app.services.fss import THEORETICAL_ALPHA_C, ScalingGrid, grid_search
from app.services.gf2_core import backfill_optimize
from app.services.qasm import parse_qasm
from app.services.simulator import run_shots
from app.services.sweep import (
    DIAGNOSTIC_COLUMNS,
    SampleRecord,
    SweepResult,
    emit_outputs,
    run_sample,
    run_sweep,
    summarize,
)


def _config(**overrides) -> SweepConfig:
    base = dict(L=[6, 8], alpha_max=1.5, matrices=4, matrices_overrides={}, seed=3)
    base.update(overrides)
    return SweepConfig(**base)


# ==================== CLASSICAL MODE ====================

class TestClassicalSweep:
    def test_one_point_per_prefix(self):
        res = run_sweep(_config(), progress=False)
        assert len(res.points) == 9 + 12
        assert [(p.L, p.alpha) for p in res.points] == sorted((p.L, p.alpha) for p in res.points)
        assert all(p.n_samples == 4 for p in res.points)
        assert all(0.0 <= p.q_mean <= 1.0 for p in res.points)

    def test_reproducible(self):
        a = run_sweep(_config(), progress=False)
        b = run_sweep(_config(), progress=False)
        assert a.points == b.points
        assert a.provenance == b.provenance

    def test_seed_changes_results(self):
        a = run_sweep(_config(seed=1), progress=False)
        b = run_sweep(_config(seed=2), progress=False)
        assert a.points != b.points

    def test_rank_ratio_bounded_at_top_alpha(self):
        res = run_sweep(_config(), progress=False)
        for d in res.diagnostics:
            if d.alpha == pytest.approx(1.5):
                assert d.mean_rank_ratio <= 2 / 3 + 1e-12
            assert d.pass_ratio is None
            assert d.mean_cnot is None

    def test_order_parameter_grows_with_alpha(self):
        res = run_sweep(_config(L=[8], matrices=20), progress=False)
        qs = [p.q_mean for p in res.points]
        assert qs[-1] > qs[0]

    def test_gate_stats_flag(self):
        res = run_sweep(_config(L=[6], gate_stats=True), progress=False)
        assert all(d.mean_cnot is not None and d.mean_cnot > 0 for d in res.diagnostics)

    def test_rank_deficient_matrices_are_counted(self):
        cfg = _config()
        res = run_sweep(cfg, progress=False)
        for L in cfg.L:
            expected = sum(run_sample(cfg, L, s)[-1].rank_m < L for s in range(cfg.matrices))
            assert res.provenance["rank_deficient"][str(L)] == expected

    def test_worker_pool_matches_serial(self):
        serial = run_sweep(_config(), progress=False)
        pooled = run_sweep(_config(workers=2), progress=False)
        assert pooled.points == serial.points


# ==================== SIMULATED SHOTS ====================

class TestShotSweep:
    def test_noiseless_shots_always_pass(self):
        cfg = _config(L=[6], matrices=2, mode=SweepMode.SIMULATED_SHOTS, shots=30)
        res = run_sweep(cfg, progress=False)
        assert len(res.points) == 9
        assert all(d.pass_ratio == 1.0 for d in res.diagnostics)
        assert all(d.mean_cnot is not None for d in res.diagnostics)

    def test_same_instances_as_classical_mode(self):
        shots = run_sweep(_config(L=[6], matrices=2, mode=SweepMode.SIMULATED_SHOTS, shots=30), progress=False)
        classical = run_sweep(_config(L=[6], matrices=2), progress=False)
        assert [d.mean_rank_ratio for d in shots.diagnostics] == [d.mean_rank_ratio for d in classical.diagnostics]

    @pytest.mark.slow
    def test_complete_pool_matches_exact_order_parameter(self, make_instance):
        rng = np.random.default_rng(17)
        for seed in range(4):
            inst = make_instance(L=6, alpha_max=1.5, seed=seed)
            for m in range(1, inst.B.n_rows + 1):
                b_m = inst.B.head(m)
                b_mp = backfill_optimize(b_m)
                shots = run_shots(lower_to_cnot(compile_optimized(b_mp)), 800, rng=rng)
                pool = pool_solutions(b_mp, group_by_parity(shots))
                assert len(pool) == count_ground_states(b_m)
                q = pooled_order_parameter(pool, cap=64, rng=rng)
                assert q == pytest.approx(exact_order_parameter(b_m), abs=1e-12)

    @pytest.mark.slow
    def test_noiseless_shots_agree_with_classical_sampling(self):
        shots = run_sweep(
            _config(L=[6], matrices=40, mode=SweepMode.SIMULATED_SHOTS, shots=100), progress=False
        )
        classical = run_sweep(_config(L=[6], matrices=40), progress=False)
        assert [p.alpha for p in shots.points] == [p.alpha for p in classical.points]
        for a, b in zip(shots.points, classical.points):
            assert abs(a.q_mean - b.q_mean) <= 3 * np.hypot(a.stderr, b.stderr) + 1e-12

    def test_retry_cap_records_missing_data(self):
        cfg = _config(
            L=[6], matrices=2, mode=SweepMode.SIMULATED_SHOTS, shots=5,
            noise=NoiseSettings(p_ro=0.5), min_pairs=10 ** 6, batch_cap=1,
        )
        res = run_sweep(cfg, progress=False)
        assert res.points == []
        assert all(d.n_missing == 2 and d.n_samples == 0 for d in res.diagnostics)

    def test_missing_sample_record(self):
        cfg = _config(
            L=[6], matrices=2, mode=SweepMode.SIMULATED_SHOTS, shots=5,
            noise=NoiseSettings(p_ro=0.5), min_pairs=10 ** 6, batch_cap=2,
        )
        records = run_sample(cfg, 6, 0)
        assert len(records) == 9
        assert all(r.q is None and r.batches == 2 for r in records)


# ==================== AGGREGATION ====================

class TestSummarize:
    def test_single_sample_gives_no_point(self):
        records = [SampleRecord(L=8, sample=0, m_rows=4, rank_m=4, q=0.5, pool_size=16)]
        point, diagnostic = summarize(8, 4, records)
        assert point is None
        assert diagnostic.n_samples == 1
        assert diagnostic.mean_rank_ratio == 1.0

    def test_missing_samples_are_counted(self):
        records = [
            SampleRecord(L=8, sample=0, m_rows=4, rank_m=4, q=0.2, pool_size=16, pass_ratio=0.5),
            SampleRecord(L=8, sample=1, m_rows=4, rank_m=3, q=0.4, pool_size=32, pass_ratio=0.3),
            SampleRecord(L=8, sample=2, m_rows=4, rank_m=4, q=None, pool_size=0, pass_ratio=0.1),
        ]
        point, diagnostic = summarize(8, 4, records)
        assert point.q_mean == pytest.approx(0.3)
        assert point.alpha == 0.5
        assert diagnostic.n_missing == 1
        assert diagnostic.pass_ratio == pytest.approx(0.3)
        assert diagnostic.mean_pool_size == pytest.approx(24.0)


# ==================== OUTPUT ====================

class TestOutputs:
    def test_run_directory_contents(self, tmp_path):
        res = run_sweep(_config(), progress=False)
        written = emit_outputs(res, str(tmp_path / "run"))
        names = sorted(p.split("/")[-1] for p in written)
        assert names == ["data_points.csv", "diagnostics.csv", "provenance.json", "q_curve_L6.csv", "q_curve_L8.csv"]
        assert load_data_points(str(tmp_path / "run" / "data_points.csv")) == res.points
        header = (tmp_path / "run" / "diagnostics.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header.split(",") == DIAGNOSTIC_COLUMNS
        provenance = json.loads((tmp_path / "run" / "provenance.json").read_text(encoding="utf-8"))
        assert provenance["seed"] == 3
        assert provenance["mode"] == "classical-exact"

    def test_empty_result_writes_headers_only(self, tmp_path):
        written = emit_outputs(SweepResult(), str(tmp_path))
        assert len(written) == 3
        assert len((tmp_path / "data_points.csv").read_text(encoding="utf-8").splitlines()) == 1
        assert (tmp_path / "diagnostics.csv").read_text(encoding="utf-8").splitlines() == [",".join(DIAGNOSTIC_COLUMNS)]

    def test_pass_ratio_curves_for_shot_runs(self, tmp_path):
        res = run_sweep(_config(L=[6], matrices=2, mode=SweepMode.SIMULATED_SHOTS, shots=30), progress=False)
        emit_outputs(res, str(tmp_path))
        lines = (tmp_path / "pass_ratio_L6.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "alpha,pass_ratio"
        assert len(lines) == 10

    def test_emitted_circuits_parse(self, tmp_path):
        cfg = _config(L=[6], emit_circuits_dir=str(tmp_path / "qasm"))
        run_sweep(cfg, progress=False)
        files = sorted((tmp_path / "qasm").glob("*.qasm"))
        assert len(files) == 9
        circuit = parse_qasm((tmp_path / "qasm" / "L6_s0_m3.qasm").read_text(encoding="utf-8"))
        assert circuit.matrix.n_cols == 6
        assert circuit.optimized

    def test_unwritable_circuit_directory(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("", encoding="utf-8")
        with pytest.raises(OutputError) as exc:
            run_sweep(_config(L=[6], emit_circuits_dir=str(blocker)), progress=False)
        assert exc.value.path.endswith("L6_s0_m1.qasm")


# ==================== TRANSITION CURVE ====================

@pytest.fixture(scope="module")
def transition_sweep() -> SweepResult:
    cfg = _config(L=[8, 16, 24], matrices=1000, matrices_overrides={24: 200}, workers=4)
    return run_sweep(cfg, progress=False)


def _curve(result: SweepResult, L: int):
    points = [p for p in result.points if p.L == L]
    return (
        np.array([p.alpha for p in points]),
        np.array([p.q_mean for p in points]),
        np.array([p.stderr for p in points]),
    )


def _max_slope(alphas, qs, span: float = 0.2) -> float:
    grid = np.arange(0.6, 1.3 + 1e-9, 0.01)
    smooth = np.interp(grid, alphas, qs)
    lag = int(round(span / 0.01))
    return float(np.max((smooth[lag:] - smooth[:-lag]) / span))


@pytest.mark.slow
class TestTransitionCurve:
    def test_floor_at_low_alpha(self, transition_sweep):
        for L in (16, 24):
            alphas, qs, _ = _curve(transition_sweep, L)
            floor = qs[alphas <= 0.6].mean()
            assert 0.03 <= floor <= 0.07

    def test_rise_after_threshold(self, transition_sweep):
        for L in (8, 16, 24):
            alphas, qs, errs = _curve(transition_sweep, L)
            low = int(np.argmin(np.abs(alphas - 0.7)))
            high = int(np.argmin(np.abs(alphas - 1.2)))
            assert qs[high] - qs[low] > 3 * np.hypot(errs[high], errs[low])

    def test_transition_sharpens_with_size(self, transition_sweep):
        slopes = {L: _max_slope(*_curve(transition_sweep, L)[:2]) for L in (8, 16, 24)}
        assert slopes[24] > slopes[8]

    def test_collapse_recovers_threshold(self, transition_sweep):
        result = grid_search(transition_sweep.points, ScalingGrid())
        assert 0.86 <= result.alpha_c_exp <= 1.02
        assert 1.5 <= result.nu_exp <= 3.5
        assert abs(result.alpha_c_exp - THEORETICAL_ALPHA_C) <= result.uncertainty_alpha

"""
Tests for the oracle suite behind `vitriq verify`
"""
import pytest

from app.services.verifier import (
    CheckResult,
    _timed,
    check_circuit_semantics,
    check_entropy_identity,
    check_gate_accounting,
    check_ground_states,
    check_worked_example,
    planted_points,
    run_checks,
)


class TestTimedChecks:
    def test_failed_assertion_is_reported(self):
        def failing():
            raise AssertionError("mismatch")

        result = _timed("failing", failing)
        assert isinstance(result, CheckResult)
        assert not result.passed
        assert result.detail == "mismatch"

    def test_crash_is_reported(self):
        def crashing():
            raise RuntimeError("boom")

        result = _timed("crashing", crashing)
        assert not result.passed
        assert "boom" in result.detail


class TestChecks:
    def test_worked_example(self):
        assert "bit-exactly" in check_worked_example()

    def test_entropy_identity(self):
        assert "agree" in check_entropy_identity(5, seed=1)

    def test_circuit_semantics(self):
        assert "chi-square" in check_circuit_semantics(5, 50, seed=2)

    def test_gate_accounting(self):
        assert "bounds hold" in check_gate_accounting(20, seed=3)

    def test_ground_states(self):
        assert "2^(L - rank B)" in check_ground_states(5, seed=4)

    def test_planted_points_shape(self):
        points = planted_points(sizes=(8, 16))
        assert len(points) == 2 * 181
        assert all(0.0 <= p.q_mean <= 1.0 for p in points)


@pytest.mark.slow
class TestFullSuite:
    def test_quick_run(self):
        results = run_checks(quick=True, seed=0)
        assert [r.name for r in results] == [
            "worked-example", "entropy-identity", "circuit-semantics",
            "gate-accounting", "ground-states", "synthetic-collapse",
        ]
        failed = [f"{r.name}: {r.detail}" for r in results if not r.passed]
        assert not failed, failed

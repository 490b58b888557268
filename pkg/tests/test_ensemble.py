"""
Tests for the random 3-XORSAT ensemble
"""
import numpy as np
import pytest

from app.exceptions import InfeasibleEnsembleError
from app.services.ensemble import (
    Instance,
    InstanceSpec,
    derive_rng,
    generate_full_rank_instance,
    generate_instance,
    measured_rows,
    prefix_submatrix,
)
from app.services.gf2_core import rank


class TestMeasuredRows:
    def test_floor(self):
        assert measured_rows(24, 1.5) == 36
        assert measured_rows(16, 0.5) == 8
        assert measured_rows(8, 0.3) == 2

    def test_round_off_guard(self):
        # 100 * 0.29 evaluates to 28.999999999999996
        assert measured_rows(100, 0.29) == 29


class TestInstanceSpec:
    def test_rejects_small_L(self):
        with pytest.raises(ValueError):
            InstanceSpec(L=3, alpha_max=1.0)

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            InstanceSpec(L=8, alpha_max=0.0)

    def test_feasibility(self):
        assert InstanceSpec(L=5, alpha_max=1.5).is_feasible()
        assert not InstanceSpec(L=4, alpha_max=1.5).is_feasible()


class TestGenerateInstance:
    def test_rows_are_distinct_weight_three(self, make_instance):
        inst = make_instance(L=12, alpha_max=1.5, seed=3)
        assert inst.B.n_rows == 18
        assert inst.B.n_cols == 12
        assert all(w == 3 for w in inst.B.row_weights())
        assert len(set(inst.B.rows)) == inst.B.n_rows
        assert inst.rank_B == rank(inst.B)

    def test_same_seed_same_matrix(self, make_instance):
        assert make_instance(seed=11).B == make_instance(seed=11).B

    def test_infeasible(self):
        with pytest.raises(InfeasibleEnsembleError):
            generate_instance(InstanceSpec(L=4, alpha_max=1.5))

    def test_dense_limit_is_reachable(self):
        inst = generate_instance(InstanceSpec(L=5, alpha_max=2.0, seed=1))
        assert inst.B.n_rows == 10

    def test_explicit_stream_overrides_seed(self):
        spec = InstanceSpec(L=10, alpha_max=1.0, seed=0)
        a = generate_instance(spec, derive_rng(7, 0, 10, 0))
        b = generate_instance(spec, derive_rng(7, 0, 10, 0))
        assert a.B == b.B

    def test_column_usage_is_roughly_uniform(self):
        counts = np.zeros(8)
        for seed in range(200):
            inst = generate_instance(InstanceSpec(L=8, alpha_max=1.0, seed=seed))
            counts += inst.B.to_array().sum(axis=0)
        expected = 200 * 8 * 3 / 8
        np.testing.assert_allclose(counts, expected, rtol=0.1)


class TestStreams:
    def test_derive_rng_is_keyed(self):
        a = derive_rng(5, 0, 8, 1).integers(0, 1 << 30, size=4)
        b = derive_rng(5, 0, 8, 1).integers(0, 1 << 30, size=4)
        c = derive_rng(5, 0, 8, 2).integers(0, 1 << 30, size=4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)


class TestInstanceText:
    def test_round_trip(self, make_instance):
        inst = make_instance(L=9, alpha_max=1.2, seed=4)
        parsed = Instance.from_text(inst.to_text())
        assert parsed.B == inst.B
        assert parsed.spec == inst.spec
        assert parsed.rank_B == inst.rank_B

    def test_header_required(self):
        with pytest.raises(ValueError):
            Instance.from_text("2 4\n1110\n0111\n")


class TestPrefixes:
    def test_prefix_keeps_order(self, make_instance):
        inst = make_instance(L=8, alpha_max=1.5, seed=2)
        head = prefix_submatrix(inst, 5)
        assert head.rows == inst.B.rows[:5]
        assert prefix_submatrix(inst, 0).n_rows == 0

    def test_prefix_bounds(self, make_instance):
        inst = make_instance(L=8, alpha_max=1.0)
        with pytest.raises(ValueError):
            prefix_submatrix(inst, 9)

    def test_rank_grows_by_at_most_one(self, make_instance):
        inst = make_instance(L=10, alpha_max=1.5, seed=6)
        ranks = [rank(prefix_submatrix(inst, m)) for m in range(inst.B.n_rows + 1)]
        assert all(0 <= b - a <= 1 for a, b in zip(ranks, ranks[1:]))


class TestFullRank:
    def test_full_rank_instance(self, rng):
        inst = generate_full_rank_instance(InstanceSpec(L=8, alpha_max=1.5), rng)
        assert inst.rank_B == 8

    def test_too_few_rows(self, rng):
        with pytest.raises(InfeasibleEnsembleError):
            generate_full_rank_instance(InstanceSpec(L=8, alpha_max=0.5), rng)


class TestEnsembleStatistics:
    def test_sparse_prefixes_are_almost_always_independent(self):
        # at alpha = 0.5 the measured rows are linearly independent in nearly every matrix
        ratios = [
            generate_instance(InstanceSpec(L=16, alpha_max=0.5, seed=s)).rank_B / 8
            for s in range(500)
        ]
        assert np.mean(ratios) >= 0.99

    def test_rank_ratio_never_exceeds_variables_over_rows(self):
        for s in range(50):
            inst = generate_instance(InstanceSpec(L=8, alpha_max=1.5, seed=s))
            assert inst.rank_B / inst.B.n_rows <= 8 / 12

"""
Verification Service
Oracle checks run by `vitriq verify`: each returns a CheckResult instead of
raising so the whole suite reports in one pass
"""
import time
import traceback
from dataclasses import dataclass
from itertools import product
from typing import Callable, List, Sequence

import numpy as np
from scipy import stats

from app.config.logger import get_logger
from app.services.analysis import DataPoint, SpinConfig, count_ground_states, entropy_rank, hamiltonian_energy
from app.services.compiler import (
    cnot_bound,
    compile_naive,
    compile_optimized,
    gate_stats,
    global_cnot_bound,
    lower_to_cnot,
    naive_cnot_count,
)
from app.services.ensemble import InstanceSpec, generate_instance
from app.services.fss import ScalingGrid, grid_search
from app.services.gf2_core import BitMatrix, BitVector, backfill_optimize, matvec, rank
from app.services.simulator import NoiseModel, dense_entropy_profile, run_shots

logger = get_logger("verifier")

WORKED_B_M = BitMatrix.from_strings(["101001", "010101", "011100", "011010", "110001"])
WORKED_B_MP = BitMatrix.from_strings(["111110", "011110", "001111", "000110", "000010"])

PLANTED_ALPHA_C = 0.918
PLANTED_NU = 2.5


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _timed(name: str, check: Callable[[], str]) -> CheckResult:
    start = time.perf_counter()
    try:
        detail = check()
        passed = True
    except AssertionError as e:
        detail, passed = str(e), False
    except Exception as e:
        logger.error(f"Check {name} crashed: {str(e)}")
        logger.error(traceback.format_exc())
        detail, passed = f"error: {e}", False
    return CheckResult(name, passed, detail, time.perf_counter() - start)


def _random_instances(rng: np.random.Generator, n: int, L_range: Sequence[int], alpha_max: float = 1.5):
    for k in range(n):
        L = int(rng.choice(list(L_range)))
        yield generate_instance(InstanceSpec(L=L, alpha_max=alpha_max, seed=k), rng)


def planted_points(
    sizes: Sequence[int] = (8, 16, 24, 32),
    alpha_c: float = PLANTED_ALPHA_C,
    nu: float = PLANTED_NU,
    noise: float = 5e-5,
    error: float = 1e-3,
    rng: np.random.Generator = None,
) -> List[DataPoint]:
    """Points on the master curve q = (1 + tanh t) / 2 with t = (alpha - alpha_c) L^(1/nu)"""
    rng = rng if rng is not None else np.random.default_rng(7)
    alphas = np.round(0.5 + 0.005 * np.arange(181), 10)
    points = []
    for L in sizes:
        t = (alphas - alpha_c) * L ** (1.0 / nu)
        q = 0.5 * (1 + np.tanh(t)) + noise * rng.standard_normal(len(alphas))
        q = np.clip(q, 0.0, 1.0)
        points.extend(DataPoint(L=L, alpha=float(a), q_mean=float(v), stderr=error, n_samples=100) for a, v in zip(alphas, q))
    return points


# ==================== CHECKS ====================

def check_worked_example() -> str:
    got = backfill_optimize(WORKED_B_M)
    assert got == WORKED_B_MP, f"backfill gave {got.row_strings()}"
    assert rank(WORKED_B_M) == 5, "worked matrix should have rank 5"
    return "B_M' matches bit-exactly"


def check_entropy_identity(n_instances: int, seed: int) -> str:
    rng = np.random.default_rng(seed)
    compared = 0
    for inst in _random_instances(rng, n_instances, range(5, 8)):
        B = inst.B
        circuit = compile_naive(B)
        x = BitVector.from_bits(rng.integers(0, 2, size=B.n_cols))
        y = matvec(B, x)
        profile = dense_entropy_profile(circuit, y.to_list())
        for k, value in enumerate(profile):
            expected = entropy_rank(B, B.head(k))
            assert abs(value - expected) < 1e-9, f"L={B.n_cols} prefix {k}: oracle {value} vs rank {expected}"
            compared += 1
    return f"{compared} prefixes agree within 1e-9"


def check_circuit_semantics(n_instances: int, shots: int, seed: int) -> str:
    rng = np.random.default_rng(seed)
    total = 0
    for inst in _random_instances(rng, n_instances, range(5, 11)):
        b_mp = backfill_optimize(inst.B)
        circuit = lower_to_cnot(compile_optimized(b_mp))
        records = run_shots(circuit, shots, NoiseModel(), rng)
        assert all(r.passed for r in records), f"noiseless shot failed B'x = y at L={inst.B.n_cols}"
        total += len(records)

    inst = generate_instance(InstanceSpec(L=5, alpha_max=0.8, seed=seed), rng)
    b_mp = backfill_optimize(inst.B)
    circuit = lower_to_cnot(compile_optimized(b_mp))
    records = run_shots(circuit, 64 * 40, NoiseModel(), rng)
    counts = np.bincount([r.x.value for r in records], minlength=2 ** 5)
    p_value = stats.chisquare(counts).pvalue
    assert p_value > 0.001, f"shot distribution not uniform (p = {p_value:.2e})"
    return f"{total} shots satisfy B'x = y; chi-square p = {p_value:.3f}"


def check_gate_accounting(n_instances: int, seed: int) -> str:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for inst in _random_instances(rng, n_instances, range(5, 13)):
        L = inst.B.n_cols
        for m in (1, inst.B.n_rows):
            b_m = inst.B.head(m)
            naive = gate_stats(lower_to_cnot(compile_naive(b_m))).n_cnot
            assert naive == naive_cnot_count(m, L), f"naive count {naive} != {naive_cnot_count(m, L)}"
            b_mp = backfill_optimize(b_m)
            opt = gate_stats(lower_to_cnot(compile_optimized(b_mp))).n_cnot
            bound = cnot_bound(b_mp.n_rows, L)
            assert opt <= bound <= global_cnot_bound(L), f"optimized {opt} exceeds bound {bound}"
            worst = max(worst, opt / bound)
    return f"bounds hold; tightest ratio {worst:.3f}"


def check_ground_states(n_instances: int, seed: int) -> str:
    rng = np.random.default_rng(seed)
    for inst in _random_instances(rng, n_instances, range(5, 13), alpha_max=1.2):
        B = inst.B
        L = B.n_cols
        x0 = BitVector.from_bits(rng.integers(0, 2, size=L))
        y = matvec(B, x0)
        configs = np.array(list(product((0, 1), repeat=L)), dtype=np.int64)
        violated = ((configs @ B.to_array().T.astype(np.int64)) + y.to_array()) % 2
        n_zero = int(np.sum(violated.sum(axis=1) == 0))
        assert n_zero == count_ground_states(B), f"L={L}: {n_zero} zero-energy configs vs N_GS {count_ground_states(B)}"
        for idx in rng.choice(len(configs), size=8, replace=False):
            x = BitVector.from_bits(configs[idx])
            energy = hamiltonian_energy(B, SpinConfig.from_bits(x, y))
            assert energy == int(violated[idx].sum()), f"energy {energy} != violated checks"
    return "zero-energy counts equal 2^(L - rank B)"


def check_synthetic_collapse() -> str:
    grid = ScalingGrid()
    result = grid_search(planted_points(), grid)
    d_alpha = abs(result.alpha_c_exp - PLANTED_ALPHA_C) / grid.alpha_c_step
    d_nu = abs(result.nu_exp - PLANTED_NU) / grid.nu_step
    assert d_alpha <= 2 + 1e-9 and d_nu <= 2 + 1e-9, (
        f"recovered ({result.alpha_c_exp}, {result.nu_exp}) vs planted ({PLANTED_ALPHA_C}, {PLANTED_NU})"
    )
    return f"recovered alpha_c={result.alpha_c_exp:.3f}, nu={result.nu_exp:.2f}"


def run_checks(quick: bool = False, seed: int = 0) -> List[CheckResult]:
    """
    Run the oracle suite.

    Args:
        quick: Smaller instance counts for a fast smoke run
        seed: Seed for every randomized check

    Returns:
        One CheckResult per check, in a fixed order
    """
    scale = 0.1 if quick else 1.0
    n = lambda full: max(5, int(full * scale))  # noqa: E731
    checks = [
        ("worked-example", check_worked_example),
        ("entropy-identity", lambda: check_entropy_identity(n(200), seed)),
        ("circuit-semantics", lambda: check_circuit_semantics(n(100), n(1000), seed)),
        ("gate-accounting", lambda: check_gate_accounting(n(10000), seed)),
        ("ground-states", lambda: check_ground_states(n(100), seed)),
        ("synthetic-collapse", check_synthetic_collapse),
    ]
    results = []
    for name, check in checks:
        logger.info(f"Running check {name}")
        results.append(_timed(name, check))
    return results

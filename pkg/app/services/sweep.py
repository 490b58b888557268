"""
Sweep Service
End-to-end experiment: instances, per-alpha compilation, simulation,
post-selection, analysis and aggregation with keyed random streams
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from app.config.logger import get_logger
from app.config.sweep_config import SweepConfig, SweepMode
from app.exceptions import EmptySampleError, OutputError
from app.services.analysis import (
    DataPoint,
    aggregate,
    classical_order_parameter,
    count_ground_states,
    group_by_parity,
    pool_solutions,
    pooled_order_parameter,
    rank_profile,
    write_data_points,
)
from app.services.compiler import CircuitIR, compile_optimized, gate_stats, lower_to_cnot
from app.services.ensemble import InstanceSpec, derive_rng, generate_instance, prefix_submatrix
from app.services.gf2_core import backfill_optimize
from app.services.qasm import export_circuit
from app.services.simulator import filter_shots, run_shots

logger = get_logger("sweep")

VERSION = "1.0.0"
DIAGNOSTIC_COLUMNS = [
    "L", "alpha", "m_rows", "n_samples", "n_missing",
    "pass_ratio", "mean_pool_size", "mean_rank_ratio", "mean_cnot",
]

# Stream key namespaces under the master seed
_INSTANCE_STREAM = 0
_MEASURE_STREAM = 1


@dataclass(frozen=True)
class SampleRecord:
    """Outcome for one (matrix, |M|) pair; q is None when the retry cap was hit"""

    L: int
    sample: int
    m_rows: int
    rank_m: int
    q: Optional[float]
    pool_size: int
    pass_ratio: Optional[float] = None
    n_cnot: Optional[int] = None
    batches: int = 0


@dataclass(frozen=True)
class Diagnostic:
    L: int
    alpha: float
    m_rows: int
    n_samples: int
    n_missing: int
    pass_ratio: Optional[float]
    mean_pool_size: float
    mean_rank_ratio: float
    mean_cnot: Optional[float]


@dataclass
class SweepResult:
    points: List[DataPoint] = field(default_factory=list)
    diagnostics: List[Diagnostic] = field(default_factory=list)
    provenance: Dict[str, object] = field(default_factory=dict)


# ==================== PER-SAMPLE WORK ====================

def _simulate_prefix(cfg: SweepConfig, b_mp, circuit, rng: np.random.Generator):
    """
    Issue shot batches, doubling the batch size, until min_pairs shots pass
    or batch_cap batches are spent.

    Returns:
        (passing shots, overall pass ratio, batches used)
    """
    noise = cfg.noise.to_model()
    passing, total, batch = [], 0, cfg.shots
    for attempt in range(1, cfg.batch_cap + 1):
        shots = run_shots(circuit, batch, noise, rng)
        kept, _ = filter_shots(b_mp, shots)
        passing.extend(kept)
        total += len(shots)
        if len(passing) >= cfg.min_pairs:
            return passing, len(passing) / total, attempt
        logger.debug(f"Batch {attempt}: {len(passing)} of {cfg.min_pairs} passing shots, doubling")
        batch *= 2
    return passing, len(passing) / total, cfg.batch_cap


def run_sample(cfg: SweepConfig, L: int, sample: int) -> List[SampleRecord]:
    """
    Every measured prefix |M| = 1..floor(L alpha_max) of one matrix. Streams
    are keyed by (L, sample) for the instance and (L, sample, |M|) for the
    measurement, so results do not depend on scheduling.
    """
    spec = InstanceSpec(L=L, alpha_max=cfg.alpha_max, seed=cfg.seed)
    inst = generate_instance(spec, derive_rng(cfg.seed, _INSTANCE_STREAM, L, sample))
    ranks = rank_profile(inst.B)
    shots_mode = cfg.mode is SweepMode.SIMULATED_SHOTS
    emit = cfg.emit_circuits_dir is not None and sample < cfg.emit_circuits_samples

    records = []
    for m in range(1, spec.n_rows + 1):
        rng = derive_rng(cfg.seed, _MEASURE_STREAM, L, sample, m)
        b_m = prefix_submatrix(inst, m)
        circuit = None
        if shots_mode or cfg.gate_stats or emit:
            b_mp = backfill_optimize(b_m)
            circuit = lower_to_cnot(compile_optimized(b_mp))
            if emit:
                write_circuit(Path(cfg.emit_circuits_dir) / f"L{L}_s{sample}_m{m}.qasm", circuit)
        n_cnot = gate_stats(circuit).n_cnot if circuit is not None else None

        if not shots_mode:
            q = classical_order_parameter(b_m, cfg.cap, rng)
            records.append(SampleRecord(L, sample, m, ranks[m - 1], q, count_ground_states(b_m), None, n_cnot))
            continue

        passing, ratio, batches = _simulate_prefix(cfg, b_mp, circuit, rng)
        if len(passing) < cfg.min_pairs:
            logger.warning(
                f"L={L} sample={sample} |M|={m}: {len(passing)} passing shots after "
                f"{batches} batches; recorded as missing"
            )
            records.append(SampleRecord(L, sample, m, ranks[m - 1], None, 0, ratio, n_cnot, batches))
            continue
        pool = pool_solutions(b_mp, group_by_parity(passing))
        q = pooled_order_parameter(pool, cfg.cap, rng, cfg.pooling)
        records.append(SampleRecord(L, sample, m, ranks[m - 1], q, len(pool), ratio, n_cnot, batches))
    return records


def _run_sample_task(args: Tuple[SweepConfig, int, int]) -> List[SampleRecord]:
    return run_sample(*args)


# ==================== AGGREGATION ====================

def _mean_or_none(values: Sequence[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def summarize(L: int, m: int, records: Sequence[SampleRecord]) -> Tuple[Optional[DataPoint], Diagnostic]:
    alpha = m / L
    qs = [r.q for r in records if r.q is not None]
    point = None
    try:
        point = aggregate(qs, alpha, L)
    except EmptySampleError:
        logger.warning(f"L={L} |M|={m}: only {len(qs)} usable samples; no data point")
    diagnostic = Diagnostic(
        L=L,
        alpha=alpha,
        m_rows=m,
        n_samples=len(qs),
        n_missing=len(records) - len(qs),
        pass_ratio=_mean_or_none([r.pass_ratio for r in records]),
        mean_pool_size=_mean_or_none([float(r.pool_size) for r in records if r.q is not None]) or 0.0,
        mean_rank_ratio=float(np.mean([r.rank_m / m for r in records])),
        mean_cnot=_mean_or_none([r.n_cnot for r in records]),
    )
    return point, diagnostic


def run_sweep(cfg: SweepConfig, progress: bool = True) -> SweepResult:
    """
    Run the configured experiment for every L, matrix and measured prefix.

    Args:
        cfg: Validated sweep configuration
        progress: Show a progress bar per L

    Returns:
        Data points and diagnostics ordered by (L, |M|), plus provenance
    """
    workers = cfg.effective_workers()
    logger.info(
        f"Sweep {cfg.config_hash()} seed={cfg.seed} mode={cfg.mode.value} "
        f"L={cfg.L} alpha_max={cfg.alpha_max} workers={workers}"
    )
    result = SweepResult(
        provenance={
            "version": VERSION,
            "seed": cfg.seed,
            "config_hash": cfg.config_hash(),
            "mode": cfg.mode.value,
            "config": cfg.model_dump(mode="json"),
            "rank_deficient": {},
        }
    )
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for L in cfg.L:
            n_matrices = cfg.matrices_for(L)
            tasks = [(cfg, L, s) for s in range(n_matrices)]
            if executor is not None:
                outcomes = executor.map(_run_sample_task, tasks, chunksize=max(1, n_matrices // (4 * workers)))
            else:
                outcomes = map(_run_sample_task, tasks)
            per_sample = list(tqdm(outcomes, total=n_matrices, desc=f"L={L}", disable=not progress))

            # the last prefix is the whole matrix, so its rank is rank(B)
            deficient = sum(1 for records in per_sample if records and records[-1].rank_m < L)
            result.provenance["rank_deficient"][str(L)] = deficient
            if deficient:
                logger.warning(
                    f"L={L}: {deficient} of {n_matrices} matrices have rank(B) < L; "
                    f"measured and ground-state entropies differ for them"
                )

            by_m: Dict[int, List[SampleRecord]] = {}
            for records in per_sample:
                for rec in records:
                    by_m.setdefault(rec.m_rows, []).append(rec)
            for m in sorted(by_m):
                point, diagnostic = summarize(L, m, sorted(by_m[m], key=lambda r: r.sample))
                if point is not None:
                    result.points.append(point)
                result.diagnostics.append(diagnostic)
            logger.info(f"L={L}: {n_matrices} matrices, {len(by_m)} alpha values")
    finally:
        if executor is not None:
            executor.shutdown()
    return result


# ==================== OUTPUT ====================

def _cell(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def write_diagnostics(path: str, diagnostics: Sequence[Diagnostic]) -> str:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(DIAGNOSTIC_COLUMNS)
            for d in diagnostics:
                row = asdict(d)
                writer.writerow([_cell(row[col]) for col in DIAGNOSTIC_COLUMNS])
    except OSError as e:
        logger.error(f"Error writing diagnostics: {str(e)}")
        raise OutputError(path, str(e)) from e
    return path


def write_circuit(path: Path, circuit: CircuitIR) -> str:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(export_circuit(circuit), encoding="utf-8")
    except OSError as e:
        logger.error(f"Error writing circuit: {str(e)}")
        raise OutputError(str(path), str(e)) from e
    return str(path)


def _write_curve(path: Path, header: List[str], rows: List[list]):
    try:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        logger.error(f"Error writing curve file: {str(e)}")
        raise OutputError(str(path), str(e)) from e


def emit_outputs(res: SweepResult, directory: str) -> List[str]:
    """
    Write data_points.csv, diagnostics.csv, one q curve per L, one
    pass-ratio curve per L when shots were simulated, and provenance.json.

    Args:
        res: Sweep result
        directory: Run directory, created if missing

    Returns:
        Paths written

    Raises:
        OutputError: Carrying the path that failed
    """
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(str(out), str(e)) from e

    written = [
        write_data_points(str(out / "data_points.csv"), res.points),
        write_diagnostics(str(out / "diagnostics.csv"), res.diagnostics),
    ]
    for L in sorted({p.L for p in res.points}):
        path = out / f"q_curve_L{L}.csv"
        rows = [[_cell(p.alpha), _cell(p.q_mean), _cell(p.stderr)] for p in res.points if p.L == L]
        _write_curve(path, ["alpha", "q_mean", "stderr"], rows)
        written.append(str(path))
    for L in sorted({d.L for d in res.diagnostics if d.pass_ratio is not None}):
        path = out / f"pass_ratio_L{L}.csv"
        rows = [[_cell(d.alpha), _cell(d.pass_ratio)] for d in res.diagnostics if d.L == L]
        _write_curve(path, ["alpha", "pass_ratio"], rows)
        written.append(str(path))

    provenance = out / "provenance.json"
    try:
        provenance.write_text(json.dumps(res.provenance, indent=2, sort_keys=True), encoding="utf-8")
    except OSError as e:
        logger.error(f"Error writing provenance: {str(e)}")
        raise OutputError(str(provenance), str(e)) from e
    written.append(str(provenance))

    logger.info(f"Wrote {len(written)} files to {out}")
    return written

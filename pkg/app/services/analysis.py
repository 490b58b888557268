"""
Analysis Service
Solution pooling, the spin-glass order parameter, entropy identities,
the spin Hamiltonian and per-alpha aggregation
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from math import log, sqrt
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.config.logger import get_logger
from app.exceptions import (
    DimensionMismatchError,
    EmptySampleError,
    MatrixStructureError,
    OutputError,
    UnsatisfiableSystemError,
)
from app.services.ensemble import ROW_WEIGHT
from app.services.gf2_core import (
    ENUMERATION_LIMIT,
    BitMatrix,
    BitVector,
    matvec,
    min_integer_solution,
    null_space_basis,
    rank,
    span,
)

logger = get_logger("analysis")

DEFAULT_CAP = 24
LOG2 = log(2.0)
DATA_POINT_COLUMNS = ["L", "alpha", "q_mean", "stderr", "n_samples"]


class Pooling(str, Enum):
    UNION = "union"
    PER_PARITY = "per_parity"


# ==================== TYPES ====================

@dataclass(frozen=True)
class SolutionPool:
    """
    Distinct shifted solutions x' = x + z(y), all in the null space of the
    post-selection matrix. `groups` keeps the members each parity vector
    contributed; `source_counts` the number of shots seen per parity vector.
    """

    length: int
    members: Tuple[BitVector, ...]
    source_counts: Dict[BitVector, int] = field(default_factory=dict, compare=False)
    groups: Dict[BitVector, Tuple[BitVector, ...]] = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class DataPoint:
    L: int
    alpha: float
    q_mean: float
    stderr: float
    n_samples: int

    def __post_init__(self):
        if not -1e-12 <= self.q_mean <= 1 + 1e-12:
            raise ValueError(f"q_mean {self.q_mean} outside [0, 1]")
        if self.stderr < 0:
            raise ValueError(f"stderr must be nonnegative, got {self.stderr}")


@dataclass(frozen=True)
class SpinConfig:
    sigma: Tuple[int, ...]
    J: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(int(s) for s in self.sigma))
        object.__setattr__(self, "J", tuple(int(j) for j in self.J))
        if any(s not in (1, -1) for s in self.sigma + self.J):
            raise ValueError("Spins and couplings must be +1 or -1")

    @classmethod
    def from_bits(cls, x: BitVector, y: BitVector) -> "SpinConfig":
        """sigma_i = (-1)^x_i and J_a = (-1)^y_a"""
        return cls(sigma=tuple(x.to_signs()), J=tuple(y.to_signs()))


# ==================== POOLING ====================

def group_by_parity(shots: Iterable) -> Dict[BitVector, List[BitVector]]:
    """Group shot records by their parity vector y, keeping shot order"""
    grouped: Dict[BitVector, List[BitVector]] = {}
    for s in shots:
        grouped.setdefault(s.y, []).append(s.x)
    return grouped


def pool_solutions(b_mp: BitMatrix, shots_by_y: Mapping[BitVector, Sequence[BitVector]]) -> SolutionPool:
    """
    Shift each observed solution by the smallest-integer solution of its
    parity vector and pool the distinct results.

    Args:
        b_mp: Post-selection matrix
        shots_by_y: Passing solutions x grouped by parity vector y

    Returns:
        The pooled solution set, ordered by integer value

    Raises:
        UnsatisfiableSystemError: If a parity vector has no solution or a shot
            does not satisfy its own parity vector
    """
    pooled = set()
    counts: Dict[BitVector, int] = {}
    groups: Dict[BitVector, Tuple[BitVector, ...]] = {}
    for y, xs in shots_by_y.items():
        try:
            z = min_integer_solution(b_mp, y)
        except UnsatisfiableSystemError:
            logger.error(f"Parity vector {y} has no solution; shot data is corrupted")
            raise
        mapped = set()
        for x in xs:
            if matvec(b_mp, x) != y:
                raise UnsatisfiableSystemError(f"Shot x={x} does not satisfy parity vector {y}")
            mapped.add(x ^ z)
        counts[y] = len(xs)
        groups[y] = tuple(sorted(mapped, key=lambda v: v.value))
        pooled |= mapped
    return SolutionPool(
        length=b_mp.n_cols,
        members=tuple(sorted(pooled, key=lambda v: v.value)),
        source_counts=counts,
        groups=groups,
    )


def subsample(pool: SolutionPool, cap: int = DEFAULT_CAP, rng: Optional[np.random.Generator] = None) -> List[BitVector]:
    """min(cap, |X|) distinct members drawn uniformly without replacement"""
    if cap < 1:
        raise ValueError(f"cap must be positive, got {cap}")
    if not pool.members:
        raise EmptySampleError("Cannot subsample an empty solution pool")
    rng = rng if rng is not None else np.random.default_rng()
    picks = rng.choice(len(pool.members), size=min(cap, len(pool.members)), replace=False)
    return [pool.members[int(i)] for i in picks]


# ==================== ORDER PARAMETER ====================

def order_parameter(sample: Sequence[BitVector], L: int) -> float:
    """
    q = (1/L) sum_i <(-1)^x_i>^2 over the sample.

    Args:
        sample: Solutions, each of length L
        L: Number of variables

    Returns:
        q in [0, 1]
    """
    if not sample:
        raise EmptySampleError("Order parameter of an empty sample is undefined")
    if any(x.length != L for x in sample):
        raise DimensionMismatchError(f"Every sampled solution must have length {L}")
    spins = np.array([x.to_signs() for x in sample], dtype=np.float64)
    magnetization = spins.mean(axis=0)
    return float(np.mean(magnetization ** 2))


def pooled_order_parameter(
    pool: SolutionPool,
    cap: int = DEFAULT_CAP,
    rng: Optional[np.random.Generator] = None,
    pooling: Pooling = Pooling.UNION,
) -> float:
    """q of a shot-derived pool, either over the union or averaged per parity vector"""
    rng = rng if rng is not None else np.random.default_rng()
    if Pooling(pooling) is Pooling.UNION:
        return order_parameter(subsample(pool, cap, rng), pool.length)
    if not pool.groups:
        raise EmptySampleError("Cannot compute q without any parity vector")
    values = []
    for y in sorted(pool.groups, key=lambda v: v.value):
        group = SolutionPool(length=pool.length, members=pool.groups[y])
        values.append(order_parameter(subsample(group, cap, rng), pool.length))
    return float(np.mean(values))


def classical_order_parameter(b_m: BitMatrix, cap: int = DEFAULT_CAP, rng: Optional[np.random.Generator] = None) -> float:
    """
    q from min(cap, N_GS) distinct null-space members of b_m, drawn as random
    GF(2) combinations of the null-space basis. When cap covers the whole
    null space every member is used.

    Args:
        b_m: Measured prefix matrix
        cap: Sample size limit
        rng: Random stream

    Returns:
        q in [0, 1]
    """
    if cap < 1:
        raise ValueError(f"cap must be positive, got {cap}")
    L = b_m.n_cols
    vectors = null_space_basis(b_m)
    basis = [b.value for b in vectors]
    d = len(basis)
    if 2 ** d <= cap:
        return order_parameter(span(vectors, L), L)

    rng = rng if rng is not None else np.random.default_rng()
    seen = set()
    while len(seen) < cap:
        coeffs = rng.integers(0, 2, size=d)
        value = 0
        for bit, b in zip(coeffs, basis):
            if bit:
                value ^= b
        seen.add(value)
    return order_parameter([BitVector(L, v) for v in sorted(seen)], L)


def exact_order_parameter(b_m: BitMatrix) -> float:
    """q over the full null space (enumeration oracle)"""
    basis = null_space_basis(b_m)
    if len(basis) > ENUMERATION_LIMIT:
        raise ValueError(f"Refusing to enumerate 2^{len(basis)} ground states")
    return order_parameter(span(basis, b_m.n_cols), b_m.n_cols)


# ==================== ENTROPY ====================

def entropy_rank(b: BitMatrix, b_m: BitMatrix) -> float:
    """[rank(b) - rank(b_m)] log 2, the entropy in nats after measuring b_m"""
    if b.n_cols != b_m.n_cols:
        raise DimensionMismatchError(f"Column counts differ: {b.n_cols} vs {b_m.n_cols}")
    return (rank(b) - rank(b_m)) * LOG2


def ground_state_entropy(b: BitMatrix) -> float:
    """[L - rank(b)] log 2"""
    return (b.n_cols - rank(b)) * LOG2


def entropy_density_asymptotic(q: float, alpha: float) -> float:
    """
    Averaged entropy density [(1-q)(1 - log(1-q)) - alpha(1 - q^3)] log 2,
    continuously extended to 0 at q = 1.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if q == 1.0:
        return 0.0
    return ((1 - q) * (1 - log(1 - q)) - alpha * (1 - q ** 3)) * LOG2


# ==================== HAMILTONIAN ====================

def hamiltonian_energy(b: BitMatrix, cfg: SpinConfig) -> int:
    """
    H = sum_a (1 - J_a sigma_a1 sigma_a2 sigma_a3) / 2, the number of
    violated parity checks.

    Args:
        b: Weight-3 parity-check matrix
        cfg: Spins and couplings

    Returns:
        Nonnegative integer energy
    """
    if len(cfg.sigma) != b.n_cols or len(cfg.J) != b.n_rows:
        raise DimensionMismatchError(
            f"Config ({len(cfg.sigma)}, {len(cfg.J)}) does not fit a {b.n_rows}x{b.n_cols} matrix"
        )
    weights = b.row_weights()
    if any(w != ROW_WEIGHT for w in weights):
        raise MatrixStructureError(f"Every row must have weight {ROW_WEIGHT}, got {sorted(set(weights))}")
    energy = 0
    for a in range(b.n_rows):
        product = cfg.J[a]
        for i in range(b.n_cols):
            if b[a, i]:
                product *= cfg.sigma[i]
        energy += (1 - product) // 2
    return energy


def count_ground_states(b: BitMatrix) -> int:
    """N_GS = 2^(L - rank(b))"""
    return 2 ** (b.n_cols - rank(b))


def rank_profile(b: BitMatrix) -> List[int]:
    """rank of every prefix b[:m] for m = 1..R, by incremental insertion"""
    by_lead: Dict[int, int] = {}
    profile = []
    for row in b.rows:
        v = row
        while v and (v.bit_length() in by_lead):
            v ^= by_lead[v.bit_length()]
        if v:
            by_lead[v.bit_length()] = v
        profile.append(len(by_lead))
    return profile


# ==================== AGGREGATION ====================

def aggregate(samples: Sequence[float], alpha: float, L: int) -> DataPoint:
    """
    Mean and standard error sqrt(sum (q - mean)^2 / (n (n - 1))).

    Args:
        samples: Per-matrix q values
        alpha: |M| / L
        L: System size

    Returns:
        The aggregated data point
    """
    n = len(samples)
    if n < 2:
        raise EmptySampleError(f"Standard error needs at least two samples, got {n}")
    values = np.asarray(samples, dtype=np.float64)
    mean = float(values.mean())
    stderr = sqrt(float(np.sum((values - mean) ** 2)) / (n * (n - 1)))
    return DataPoint(L=L, alpha=alpha, q_mean=mean, stderr=stderr, n_samples=n)


def write_data_points(path: str, points: Sequence[DataPoint]) -> str:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(DATA_POINT_COLUMNS)
            for p in points:
                writer.writerow([p.L, repr(p.alpha), repr(p.q_mean), repr(p.stderr), p.n_samples])
    except OSError as e:
        logger.error(f"Error writing data points: {str(e)}")
        raise OutputError(path, str(e)) from e
    return path


def load_data_points(path: str) -> List[DataPoint]:
    """Read a DataPoint CSV written by write_data_points"""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = set(DATA_POINT_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path} lacks columns {sorted(missing)}")
        return [
            DataPoint(
                L=int(row["L"]),
                alpha=float(row["alpha"]),
                q_mean=float(row["q_mean"]),
                stderr=float(row["stderr"]),
                n_samples=int(row["n_samples"]),
            )
            for row in reader
        ]

"""
Instance Ensemble Service
Random p-XORSAT parity-check matrices and their measured prefixes
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, floor
from typing import Dict, Optional

import numpy as np

from app.config.logger import get_logger
from app.exceptions import InfeasibleEnsembleError
from app.services.gf2_core import BitMatrix, rank

logger = get_logger("ensemble")

ROW_WEIGHT = 3


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """
    Independent random stream for a task key. Streams depend only on the
    master seed and the key, never on scheduling order.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key)))


def measured_rows(L: int, alpha: float) -> int:
    """|M| = floor(L * alpha), guarded against float round-off"""
    return int(floor(L * alpha + 1e-9))


@dataclass(frozen=True)
class InstanceSpec:
    L: int
    alpha_max: float
    seed: int = 0
    p: int = ROW_WEIGHT

    def __post_init__(self):
        if self.L < 4:
            raise ValueError(f"L must be at least 4, got {self.L}")
        if self.alpha_max <= 0:
            raise ValueError(f"alpha_max must be positive, got {self.alpha_max}")
        if not 1 <= self.p <= self.L:
            raise ValueError(f"Row weight p={self.p} impossible with L={self.L}")

    @property
    def n_rows(self) -> int:
        return measured_rows(self.L, self.alpha_max)

    def is_feasible(self) -> bool:
        return self.n_rows <= comb(self.L, self.p)


@dataclass(frozen=True)
class Instance:
    B: BitMatrix
    spec: InstanceSpec
    rank_B: int

    def to_text(self) -> str:
        header = (
            f"# seed={self.spec.seed} L={self.spec.L} "
            f"alpha_max={self.spec.alpha_max!r} p={self.spec.p}\n"
        )
        return header + self.B.to_text()

    @classmethod
    def from_text(cls, text: str) -> "Instance":
        first = text.splitlines()[0] if text else ""
        if not first.startswith("#"):
            raise ValueError("Instance text must start with a '# seed=...' header")
        fields: Dict[str, str] = dict(part.split("=", 1) for part in first[1:].split())
        spec = InstanceSpec(
            L=int(fields["L"]),
            alpha_max=float(fields["alpha_max"]),
            seed=int(fields["seed"]),
            p=int(fields.get("p", ROW_WEIGHT)),
        )
        B = BitMatrix.from_text(text)
        if B.n_cols != spec.L:
            raise ValueError(f"Header says L={spec.L} but matrix has {B.n_cols} columns")
        return cls(B=B, spec=spec, rank_B=rank(B))


def generate_instance(spec: InstanceSpec, rng: Optional[np.random.Generator] = None) -> Instance:
    """
    Draw floor(L * alpha_max) distinct rows, each a uniformly random p-subset
    of the L variables, rejecting repeats.

    Args:
        spec: Instance parameters
        rng: Random stream; defaults to one seeded from spec.seed

    Returns:
        The instance with rank(B) recorded

    Raises:
        InfeasibleEnsembleError: If there are fewer distinct rows than requested
    """
    if not spec.is_feasible():
        raise InfeasibleEnsembleError(
            f"Cannot draw {spec.n_rows} distinct weight-{spec.p} rows over {spec.L} variables"
        )
    if rng is None:
        rng = np.random.default_rng(spec.seed)

    seen = set()
    rows = []
    while len(rows) < spec.n_rows:
        cols = rng.choice(spec.L, size=spec.p, replace=False)
        row = 0
        for c in cols:
            row |= 1 << (spec.L - 1 - int(c))
        if row in seen:
            continue
        seen.add(row)
        rows.append(row)

    B = BitMatrix(spec.L, tuple(rows))
    rank_B = rank(B)
    if rank_B < spec.L:
        logger.debug(f"Instance seed={spec.seed} L={spec.L} has rank {rank_B} < L")
    return Instance(B=B, spec=spec, rank_B=rank_B)


def generate_full_rank_instance(
    spec: InstanceSpec,
    rng: np.random.Generator,
    max_attempts: int = 1000,
) -> Instance:
    """Redraw until rank(B) = L, the case where measured entropy equals ground-state entropy"""
    if spec.n_rows < spec.L:
        raise InfeasibleEnsembleError(f"{spec.n_rows} rows can never reach rank {spec.L}")
    for attempt in range(1, max_attempts + 1):
        inst = generate_instance(spec, rng)
        if inst.rank_B == spec.L:
            if attempt > 1:
                logger.debug(f"Full-rank instance found after {attempt} draws")
            return inst
    raise InfeasibleEnsembleError(f"No full-rank instance in {max_attempts} draws")


def prefix_submatrix(inst: Instance, m_rows: int) -> BitMatrix:
    """The first m_rows rows of B, order preserved"""
    if not 0 <= m_rows <= inst.B.n_rows:
        raise ValueError(f"m_rows={m_rows} outside [0, {inst.B.n_rows}]")
    return inst.B.head(m_rows)

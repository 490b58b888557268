"""
Stabilizer Simulator Service
Tableau execution of compiled circuits with optional noise, Born-rule
sampling, post-selection and a dense state-vector oracle for small sizes
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from enum import Enum
from math import sqrt
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.config.logger import get_logger
from app.exceptions import (
    CircuitSizeError,
    DimensionMismatchError,
    EmptySampleError,
    OutputError,
    UnloweredGateError,
)
from app.services.compiler import CircuitIR, GateKind
from app.services.gf2_core import BitMatrix, BitVector, matvec

logger = get_logger("simulator")

DENSE_QUBIT_LIMIT = 20
SHOT_CSV_COLUMNS = ["sample_id", "alpha", "shot_id", "x_bits", "y_bits", "passed"]

# Two-qubit Pauli index k -> (k // 4, k % 4) with 0=I, 1=X, 2=Y, 3=Z
_TWO_QUBIT_PAULIS = 16


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing probability per CNOT and independent readout flip probability"""

    p2: float = 0.0
    p_ro: float = 0.0

    def __post_init__(self):
        for name in ("p2", "p_ro"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    @property
    def noiseless(self) -> bool:
        return self.p2 == 0.0 and self.p_ro == 0.0


@dataclass(frozen=True)
class ShotRecord:
    x: BitVector
    y: BitVector
    passed: bool


class Determinism(str, Enum):
    DETERMINISTIC = "deterministic"
    RANDOM = "random"


@dataclass(frozen=True)
class MeasurementEvent:
    clbit: int
    p_zero: float
    outcome: int


class Tableau:
    """
    Stabilizer tableau over n qubits: rows 0..n-1 destabilizers, rows
    n..2n-1 stabilizers, each an X/Z bit row plus a sign bit. Starts in |0...0>.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"Number of qubits must be positive, got {n}")
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=bool)
        idx = np.arange(n)
        self.x[idx, idx] = True
        self.z[n + idx, idx] = True

    def copy(self) -> "Tableau":
        other = Tableau.__new__(Tableau)
        other.n = self.n
        other.x = self.x.copy()
        other.z = self.z.copy()
        other.r = self.r.copy()
        return other

    # ==================== GATES ====================

    def h(self, q: int):
        self.r ^= self.x[:, q] & self.z[:, q]
        col = self.x[:, q].copy()
        self.x[:, q] = self.z[:, q]
        self.z[:, q] = col

    def cnot(self, control: int, target: int):
        xc, zc = self.x[:, control], self.z[:, control]
        xt, zt = self.x[:, target], self.z[:, target]
        self.r ^= xc & zt & ~(xt ^ zc)
        self.x[:, target] ^= xc
        self.z[:, control] ^= zt

    def swap(self, a: int, b: int):
        self.x[:, [a, b]] = self.x[:, [b, a]]
        self.z[:, [a, b]] = self.z[:, [b, a]]

    def pauli(self, q: int, which: int):
        """Apply X (1), Y (2) or Z (3) to qubit q; 0 is the identity"""
        if which == 1:
            self.r ^= self.z[:, q]
        elif which == 2:
            self.r ^= self.x[:, q] ^ self.z[:, q]
        elif which == 3:
            self.r ^= self.x[:, q]

    # ==================== MEASUREMENT ====================

    def is_deterministic(self, q: int) -> bool:
        return not self.x[self.n:, q].any()

    def _rowsum_into(self, rows: np.ndarray, p: int):
        # rows := row p * rows, with the sign tracked through i-exponents mod 4
        x1, z1 = self.x[p].astype(np.int64), self.z[p].astype(np.int64)
        x2, z2 = self.x[rows].astype(np.int64), self.z[rows].astype(np.int64)
        g = x1 * z1 + x2 * z2 + 2 * z1 * x2 - (x1 ^ x2) * (z1 ^ z2)
        e = 2 * self.r[rows].astype(np.int64) + 2 * int(self.r[p]) + g.sum(axis=1)
        self.r[rows] = (e % 4) == 2
        self.x[rows] ^= self.x[p]
        self.z[rows] ^= self.z[p]

    def _deterministic_outcome(self, q: int) -> int:
        n = self.n
        sel = n + np.flatnonzero(self.x[:n, q])
        xs, zs = self.x[sel].astype(np.int64), self.z[sel].astype(np.int64)
        before = np.cumsum(zs, axis=0) - zs
        e = 2 * int(self.r[sel].sum()) + int((xs * zs).sum()) + 2 * int((xs * before).sum())
        return (e % 4) // 2

    def measure(self, q: int, rng: Optional[np.random.Generator] = None, forced: Optional[int] = None) -> Tuple[int, bool]:
        """
        Z-basis measurement of qubit q. A random outcome draws one integer
        from rng (or uses `forced`); a deterministic one draws nothing.

        Returns:
            (outcome, was_random)
        """
        n = self.n
        hits = np.flatnonzero(self.x[n:, q])
        if hits.size == 0:
            outcome = self._deterministic_outcome(q)
            if forced is not None and forced != outcome:
                raise ValueError(f"Outcome {forced} on qubit {q} has probability zero")
            return outcome, False

        p = n + int(hits[0])
        rows = np.flatnonzero(self.x[:, q])
        rows = rows[rows != p]
        if rows.size:
            self._rowsum_into(rows, p)
        self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
        self.x[p] = False
        self.z[p] = False
        self.z[p, q] = True
        if forced is None:
            if rng is None:
                raise ValueError("A random stream is required for a random measurement")
            forced = int(rng.integers(2))
        self.r[p] = bool(forced)
        return forced, True


class DenseState:
    """Full state vector; qubit 0 is the most significant index bit"""

    def __init__(self, n: int):
        if n > DENSE_QUBIT_LIMIT:
            raise CircuitSizeError(f"{n} qubits exceed the dense limit of {DENSE_QUBIT_LIMIT}")
        self.n = n
        self.psi = np.zeros(2 ** n, dtype=np.complex128)
        self.psi[0] = 1.0

    def _tensor(self) -> np.ndarray:
        return self.psi.reshape((2,) * self.n)

    def h(self, q: int):
        t = self.psi.reshape(2 ** q, 2, -1)
        a, b = t[:, 0, :].copy(), t[:, 1, :].copy()
        t[:, 0, :] = (a + b) / sqrt(2)
        t[:, 1, :] = (a - b) / sqrt(2)

    def cnot(self, control: int, target: int):
        v = self._tensor()
        index = [slice(None)] * self.n
        index[control] = 1
        axis = target if target < control else target - 1
        v[tuple(index)] = np.flip(v[tuple(index)], axis=axis).copy()

    def swap(self, a: int, b: int):
        self.psi = np.ascontiguousarray(np.swapaxes(self._tensor(), a, b)).reshape(-1)

    def p_zero(self, q: int) -> float:
        return float(np.sum(np.abs(np.take(self._tensor(), 0, axis=q)) ** 2))

    def project(self, q: int, outcome: int):
        v = self._tensor()
        index = [slice(None)] * self.n
        index[q] = 1 - outcome
        v[tuple(index)] = 0.0
        norm = np.linalg.norm(self.psi)
        if norm < 1e-12:
            raise ValueError(f"Outcome {outcome} on qubit {q} has probability zero")
        self.psi /= norm

    def entropy(self, side: Sequence[int]) -> float:
        """Von Neumann entropy (nats) of the reduced state on `side`"""
        side = list(side)
        rest = [q for q in range(self.n) if q not in side]
        m = np.transpose(self._tensor(), side + rest).reshape(2 ** len(side), -1)
        s = np.linalg.svd(m, compute_uv=False)
        p = s ** 2
        p = p[p > 1e-15]
        return float(-np.sum(p * np.log(p)))

    def apply(self, kind: GateKind, qubits: Tuple[int, ...]):
        if kind is GateKind.H:
            self.h(qubits[0])
        elif kind is GateKind.CNOT:
            self.cnot(*qubits)
        elif kind is GateKind.SWAP:
            self.swap(*qubits)


# ==================== EXECUTION ====================

def _apply_unitary(tab: Tableau, kind: GateKind, qubits: Tuple[int, ...]):
    if kind is GateKind.H:
        tab.h(qubits[0])
    elif kind is GateKind.CNOT:
        tab.cnot(*qubits)
    elif kind is GateKind.SWAP:
        tab.swap(*qubits)


def _shot_from_bits(c: CircuitIR, bits: List[int]) -> ShotRecord:
    x = BitVector.from_bits(bits[k] for k in c.variable_clbits)
    y = BitVector.from_bits(bits[k] for k in c.parity_clbits)
    return ShotRecord(x=x, y=y, passed=matvec(c.matrix, x) == y)


def run_shots(
    c: CircuitIR,
    n_shots: int,
    noise: NoiseModel = NoiseModel(),
    rng: Optional[np.random.Generator] = None,
) -> List[ShotRecord]:
    """
    Execute a lowered circuit n_shots times from |0...0>. Noise, when
    configured, applies a uniformly random non-identity two-qubit Pauli after
    a CNOT with probability p2 and flips each recorded bit with probability p_ro.

    Args:
        c: Lowered circuit carrying its source matrix
        n_shots: Number of executions
        noise: Error model
        rng: Random stream; the same stream state gives the same shots

    Returns:
        One ShotRecord per execution
    """
    if n_shots < 1:
        raise ValueError(f"n_shots must be positive, got {n_shots}")
    if not c.is_lowered():
        raise UnloweredGateError("run_shots expects a lowered circuit")
    if c.matrix is None:
        raise ValueError("Circuit has no source matrix to check shots against")
    rng = rng if rng is not None else np.random.default_rng()

    gates = c.gates
    # The noiseless stretch before the first measurement is shared by every shot
    start = 0
    base = Tableau(c.n_qubits)
    if noise.p2 == 0.0:
        while start < len(gates) and gates[start].kind is not GateKind.MEASURE:
            _apply_unitary(base, gates[start].kind, gates[start].qubits)
            start += 1

    shots = []
    for _ in range(n_shots):
        tab = base.copy()
        bits = [0] * c.n_clbits
        for g in gates[start:]:
            if g.kind is GateKind.MEASURE:
                outcome, _ = tab.measure(g.qubits[0], rng)
                if noise.p_ro > 0.0 and rng.random() < noise.p_ro:
                    outcome ^= 1
                bits[g.clbit] = outcome
                continue
            _apply_unitary(tab, g.kind, g.qubits)
            if g.kind is GateKind.CNOT and noise.p2 > 0.0 and rng.random() < noise.p2:
                k = int(rng.integers(1, _TWO_QUBIT_PAULIS))
                tab.pauli(g.qubits[0], k // 4)
                tab.pauli(g.qubits[1], k % 4)
        shots.append(_shot_from_bits(c, bits))
    return shots


def filter_shots(b_mp: BitMatrix, shots: Sequence[ShotRecord]) -> Tuple[List[ShotRecord], float]:
    """
    Keep shots with b_mp x = y.

    Returns:
        (passing shots, passing / total)
    """
    if not shots:
        raise EmptySampleError("Pass ratio is undefined for an empty shot list")
    passing = []
    for s in shots:
        if s.x.length != b_mp.n_cols or s.y.length != b_mp.n_rows:
            raise DimensionMismatchError(
                f"Shot ({s.x.length}, {s.y.length}) does not fit a {b_mp.n_rows}x{b_mp.n_cols} matrix"
            )
        ok = matvec(b_mp, s.x) == s.y
        if ok:
            passing.append(s if s.passed else replace(s, passed=True))
    return passing, len(passing) / len(shots)


def _parity_measure_index(c: CircuitIR, row: int) -> int:
    clbit = c.parity_clbits[row]
    for i, g in enumerate(c.gates):
        if g.kind is GateKind.MEASURE and g.clbit == clbit:
            return i
    raise ValueError(f"Row {row} is never measured")


def measurement_determinism(c: CircuitIR, row: int, rng: Optional[np.random.Generator] = None) -> Determinism:
    """
    Whether the parity qubit of `row` is already fixed by earlier
    measurements when its own measurement arrives. Earlier random outcomes
    are sampled from rng.
    """
    stop = _parity_measure_index(c, row)
    rng = rng if rng is not None else np.random.default_rng()
    tab = Tableau(c.n_qubits)
    for g in c.gates[:stop]:
        if g.kind is GateKind.MEASURE:
            tab.measure(g.qubits[0], rng)
        else:
            _apply_unitary(tab, g.kind, g.qubits)
    q = c.gates[stop].qubits[0]
    return Determinism.DETERMINISTIC if tab.is_deterministic(q) else Determinism.RANDOM


def determinism_profile(c: CircuitIR, rng: Optional[np.random.Generator] = None) -> List[Determinism]:
    """Determinism of every parity measurement in one noiseless pass, indexed by row"""
    rng = rng if rng is not None else np.random.default_rng()
    parity_rows = c.parity_map()
    profile: List[Optional[Determinism]] = [None] * c.n_parities
    tab = Tableau(c.n_qubits)
    for g in c.gates:
        if g.kind is GateKind.MEASURE:
            _, was_random = tab.measure(g.qubits[0], rng)
            if g.clbit in parity_rows:
                profile[parity_rows[g.clbit]] = Determinism.RANDOM if was_random else Determinism.DETERMINISTIC
        else:
            _apply_unitary(tab, g.kind, g.qubits)
    return profile


def trace_measurements(c: CircuitIR, rng: np.random.Generator) -> List[MeasurementEvent]:
    """Tableau view of every measurement along one sampled branch"""
    tab = Tableau(c.n_qubits)
    events = []
    for g in c.gates:
        if g.kind is GateKind.MEASURE:
            outcome, was_random = tab.measure(g.qubits[0], rng)
            p_zero = 0.5 if was_random else float(outcome == 0)
            events.append(MeasurementEvent(g.clbit, p_zero, outcome))
        else:
            _apply_unitary(tab, g.kind, g.qubits)
    return events


def outcome_probabilities(c: CircuitIR, outcomes: Sequence[int]) -> List[MeasurementEvent]:
    """State-vector view of the same branch, forced to the given outcomes"""
    state = DenseState(c.n_qubits)
    events = []
    k = 0
    for g in c.gates:
        if g.kind is GateKind.MEASURE:
            q = g.qubits[0]
            p_zero = state.p_zero(q)
            state.project(q, outcomes[k])
            events.append(MeasurementEvent(g.clbit, p_zero, outcomes[k]))
            k += 1
        else:
            state.apply(g.kind, g.qubits)
    return events


def dense_entropy_oracle(
    c: CircuitIR,
    cut: Optional[Sequence[int]] = None,
    measured_prefix: Sequence[int] = (),
) -> float:
    """
    Entanglement entropy (nats) across the variable/parity cut after
    projecting the first len(measured_prefix) parity rows onto the given
    outcomes. Other measurements are skipped.

    Args:
        c: Circuit on at most 20 qubits
        cut: Wires on the variable side; defaults to the variables' final wires
        measured_prefix: Outcome bit for parity rows 0..k-1

    Returns:
        Von Neumann entropy in nats
    """
    if c.n_qubits > DENSE_QUBIT_LIMIT:
        raise CircuitSizeError(f"{c.n_qubits} qubits exceed the dense limit of {DENSE_QUBIT_LIMIT}")
    if len(measured_prefix) > c.n_parities:
        raise DimensionMismatchError(f"{len(measured_prefix)} outcomes for {c.n_parities} parity rows")
    parity_rows = c.parity_map()
    state = DenseState(c.n_qubits)
    for g in c.gates:
        if g.kind is GateKind.MEASURE:
            row = parity_rows.get(g.clbit)
            if row is not None and row < len(measured_prefix):
                state.project(g.qubits[0], int(measured_prefix[row]))
            continue
        state.apply(g.kind, g.qubits)
    side = list(cut) if cut is not None else c.variable_wires()
    return state.entropy(side)


def dense_entropy_profile(
    c: CircuitIR,
    outcomes: Sequence[int],
    cut: Optional[Sequence[int]] = None,
) -> List[float]:
    """
    Entropies for every measured prefix length 0..len(outcomes) from one
    unitary pass. Parity wires must stay untouched once measured, so the
    projections can all be applied after the last gate.
    """
    if c.n_qubits > DENSE_QUBIT_LIMIT:
        raise CircuitSizeError(f"{c.n_qubits} qubits exceed the dense limit of {DENSE_QUBIT_LIMIT}")
    if len(outcomes) > c.n_parities:
        raise DimensionMismatchError(f"{len(outcomes)} outcomes for {c.n_parities} parity rows")
    parity_rows = c.parity_map()
    wire_of_row: dict = {}
    dead = set()
    state = DenseState(c.n_qubits)
    for g in c.gates:
        if g.kind is GateKind.MEASURE:
            if g.clbit in parity_rows:
                wire_of_row[parity_rows[g.clbit]] = g.qubits[0]
                dead.add(g.qubits[0])
            continue
        if dead.intersection(g.qubits):
            raise ValueError(f"Gate {g} acts on an already measured parity wire")
        state.apply(g.kind, g.qubits)

    side = list(cut) if cut is not None else c.variable_wires()
    profile = [state.entropy(side)]
    for row, bit in enumerate(outcomes):
        state.project(wire_of_row[row], int(bit))
        profile.append(state.entropy(side))
    return profile


# ==================== SHOT DUMPS ====================

def write_shots_csv(path: str, rows: Iterable[Tuple[int, float, int, ShotRecord]]) -> str:
    """Write (sample_id, alpha, shot_id, record) tuples as a shot dump"""
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(SHOT_CSV_COLUMNS)
            for sample_id, alpha, shot_id, rec in rows:
                writer.writerow([sample_id, alpha, shot_id, rec.x.to_string(), rec.y.to_string(), int(rec.passed)])
    except OSError as e:
        logger.error(f"Error writing shot dump: {str(e)}")
        raise OutputError(path, str(e)) from e
    logger.info(f"Shot dump written: {path}")
    return path


def read_shots_csv(path: str) -> List[Tuple[int, float, int, ShotRecord]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        return [
            (
                int(row["sample_id"]),
                float(row["alpha"]),
                int(row["shot_id"]),
                ShotRecord(
                    x=BitVector.from_string(row["x_bits"]),
                    y=BitVector.from_string(row["y_bits"]),
                    passed=row["passed"] == "1",
                ),
            )
            for row in reader
        ]

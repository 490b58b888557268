"""
Circuit Compiler Service
Lowers parity-check matrices to Clifford circuits: the naive two-register
construction, the interleaved construction for backfill-optimized matrices,
SWAP lowering with cancellation, and CNOT accounting
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from app.config.logger import get_logger
from app.exceptions import MatrixStructureError
from app.services.gf2_core import BitMatrix
from app.services.ensemble import ROW_WEIGHT

logger = get_logger("compiler")


class GateKind(str, Enum):
    H = "h"
    CNOT = "cx"
    SWAP = "swap"
    MEASURE = "measure"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: Tuple[int, ...]
    clbit: Optional[int] = None

    def __post_init__(self):
        arity = 2 if self.kind in (GateKind.CNOT, GateKind.SWAP) else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind.value} takes {arity} qubit(s), got {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"{self.kind.value} operands must be distinct, got {self.qubits}")
        if self.kind is GateKind.MEASURE and self.clbit is None:
            raise ValueError("measure needs a classical bit")

    @classmethod
    def h(cls, q: int) -> "Gate":
        return cls(GateKind.H, (q,))

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls(GateKind.CNOT, (control, target))

    @classmethod
    def swap(cls, a: int, b: int) -> "Gate":
        return cls(GateKind.SWAP, (a, b))

    @classmethod
    def measure(cls, q: int, clbit: int) -> "Gate":
        return cls(GateKind.MEASURE, (q,), clbit)


@dataclass(frozen=True)
class CircuitIR:
    """
    Ordered gate list over n_qubits wires.

    parity_clbits[r] is the classical bit holding row r of `matrix`;
    variable_clbits[j] is the classical bit holding variable j. `optimized`
    marks circuits built with deferred Hadamards, where lowering may use
    reduced SWAPs.
    """

    n_qubits: int
    gates: Tuple[Gate, ...]
    parity_clbits: Tuple[int, ...]
    variable_clbits: Tuple[int, ...]
    matrix: Optional[BitMatrix] = field(default=None, compare=False)
    optimized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(not 0 <= q < self.n_qubits for q in g.qubits):
                raise ValueError(f"Gate {g} addresses a qubit outside [0, {self.n_qubits})")
            if g.clbit is not None and not 0 <= g.clbit < self.n_clbits:
                raise ValueError(f"Gate {g} writes outside [0, {self.n_clbits}) classical bits")

    @property
    def n_clbits(self) -> int:
        return len(self.parity_clbits) + len(self.variable_clbits)

    @property
    def n_variables(self) -> int:
        return len(self.variable_clbits)

    @property
    def n_parities(self) -> int:
        return len(self.parity_clbits)

    def parity_map(self) -> Dict[int, int]:
        """classical bit -> matrix row"""
        return {c: r for r, c in enumerate(self.parity_clbits)}

    def variable_map(self) -> Dict[int, int]:
        """classical bit -> variable index"""
        return {c: j for j, c in enumerate(self.variable_clbits)}

    def is_lowered(self) -> bool:
        return all(g.kind is not GateKind.SWAP for g in self.gates)

    def variable_wires(self) -> List[int]:
        """Wire measured into each variable's classical bit, indexed by variable"""
        wire_of_clbit = {g.clbit: g.qubits[0] for g in self.gates if g.kind is GateKind.MEASURE}
        return [wire_of_clbit[c] for c in self.variable_clbits]

    def depth(self) -> int:
        level = [0] * self.n_qubits
        for g in self.gates:
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level, default=0)


@dataclass(frozen=True)
class GateStats:
    n_cnot: int = 0
    n_h: int = 0
    n_measure: int = 0
    n_qubits: int = 0
    n_swap: int = 0
    depth: int = 0


# ==================== CONSTRUCTION ====================

class _Layout:
    """Tracks which logical qubit sits on which wire while gates exchange them"""

    def __init__(self):
        self.wire_of: Dict[Tuple[str, int], int] = {}

    def place(self, role: str, index: int, wire: int):
        self.wire_of[(role, index)] = wire

    def exchange(self, a: Tuple[str, int], b: Tuple[str, int]):
        self.wire_of[a], self.wire_of[b] = self.wire_of[b], self.wire_of[a]


def compile_naive(b_m: BitMatrix) -> CircuitIR:
    """
    Two-register construction: variables on wires 0..L-1 start in |+>,
    parity qubit r starts on wire L + r and walks up past variables L..1.
    A one is a CNOT (variable -> parity) followed by a SWAP, a zero is a SWAP.

    Args:
        b_m: Measured prefix matrix, at least one row

    Returns:
        Circuit on L + |M| qubits
    """
    if b_m.n_rows == 0:
        raise MatrixStructureError("Cannot compile a matrix without rows")
    L, R = b_m.n_cols, b_m.n_rows
    layout = _Layout()
    for j in range(L):
        layout.place("v", j, j)
    for r in range(R):
        layout.place("p", r, L + r)

    gates = [Gate.h(j) for j in range(L)]
    for r in range(R):
        parity = ("p", r)
        for j in reversed(range(L)):
            var = ("v", j)
            wv, wp = layout.wire_of[var], layout.wire_of[parity]
            if b_m[r, j]:
                gates.append(Gate.cnot(wv, wp))
            gates.append(Gate.swap(wv, wp))
            layout.exchange(var, parity)
        gates.append(Gate.measure(layout.wire_of[parity], r))

    for j in range(L):
        gates.append(Gate.measure(layout.wire_of[("v", j)], R + j))

    return CircuitIR(
        n_qubits=L + R,
        gates=tuple(gates),
        parity_clbits=tuple(range(R)),
        variable_clbits=tuple(range(R, R + L)),
        matrix=b_m,
        optimized=False,
    )


def compile_optimized(b_mp: BitMatrix) -> CircuitIR:
    """
    Interleaved construction for a backfill-optimized matrix. Row r's parity
    qubit enters below the variable line and exchanges with variables L down
    to its leading column, where it is measured; zeros left of the leading
    one emit nothing. Each "1" is the reversed primitive: a SWAP followed by a
    CNOT from the variable's new wire onto the parity's new wire. A variable
    gets its Hadamard just before its first "1"; variables without any ones
    get theirs before the final readout.

    Args:
        b_mp: Matrix with strictly increasing leading ones and no zero rows

    Returns:
        Circuit on L + rank qubits
    """
    leads = b_mp.leading_columns()
    if not leads:
        raise MatrixStructureError("Cannot compile a matrix without rows")
    for r, c in enumerate(leads):
        if c < 0 or (r and c <= leads[r - 1]):
            raise MatrixStructureError(
                f"Row {r} breaks the echelon structure (leading columns {leads})"
            )

    L, P = b_mp.n_cols, b_mp.n_rows
    layout = _Layout()
    for j in range(L):
        layout.place("v", j, j)
    for r in range(P):
        layout.place("p", r, L + r)

    superposed = [False] * L
    gates: List[Gate] = []
    for r in range(P):
        parity = ("p", r)
        for j in range(L - 1, leads[r] - 1, -1):
            var = ("v", j)
            wv, wp = layout.wire_of[var], layout.wire_of[parity]
            if b_mp[r, j] and not superposed[j]:
                gates.append(Gate.h(wv))
                superposed[j] = True
            gates.append(Gate.swap(wp, wv))
            layout.exchange(var, parity)
            if b_mp[r, j]:
                gates.append(Gate.cnot(wp, wv))
        gates.append(Gate.measure(layout.wire_of[parity], r))

    for j in range(L):
        if not superposed[j]:
            gates.append(Gate.h(layout.wire_of[("v", j)]))
    for j in range(L):
        gates.append(Gate.measure(layout.wire_of[("v", j)], P + j))

    return CircuitIR(
        n_qubits=L + P,
        gates=tuple(gates),
        parity_clbits=tuple(range(P)),
        variable_clbits=tuple(range(P, P + L)),
        matrix=b_mp,
        optimized=True,
    )


# ==================== LOWERING ====================

def _swap_as_cnots(a: int, b: int, zero: set, reduce: bool, prev: Optional[Gate], nxt: Optional[Gate]) -> List[Gate]:
    if reduce and b in zero:
        return [Gate.cnot(a, b), Gate.cnot(b, a)]
    if reduce and a in zero:
        return [Gate.cnot(b, a), Gate.cnot(a, b)]
    # Orient the outer CNOTs to meet a neighbouring CNOT on the same pair
    x, y = a, b
    for neighbour in (prev, nxt):
        if neighbour is not None and neighbour.kind is GateKind.CNOT and set(neighbour.qubits) == {a, b}:
            x, y = neighbour.qubits
            break
    return [Gate.cnot(x, y), Gate.cnot(y, x), Gate.cnot(x, y)]


def _cancel_cnot_pairs(gates: Sequence[Gate], n_qubits: int) -> List[Gate]:
    """Drop identical CNOT pairs with no gate on either qubit between them"""
    out: List[Optional[Gate]] = []
    stacks: List[List[int]] = [[] for _ in range(n_qubits)]
    for g in gates:
        if g.kind is GateKind.CNOT:
            a, b = g.qubits
            if stacks[a] and stacks[b] and stacks[a][-1] == stacks[b][-1] and out[stacks[a][-1]] == g:
                out[stacks[a].pop()] = None
                stacks[b].pop()
                continue
        out.append(g)
        for q in g.qubits:
            stacks[q].append(len(out) - 1)
    return [g for g in out if g is not None]


def lower_to_cnot(c: CircuitIR, reduce_zero_swaps: Optional[bool] = None) -> CircuitIR:
    """
    Rewrite every SWAP as CNOTs and cancel adjacent identical CNOT pairs.
    A static pass tracks wires provably in |0>: a wire stays |0> until it
    gets a Hadamard or is the target of a CNOT whose control is not provably
    |0>. SWAPs touching such a wire become two CNOTs when reductions are on.

    Args:
        c: Any circuit
        reduce_zero_swaps: Allow reduced SWAPs; defaults to c.optimized

    Returns:
        Equivalent circuit over H, CNOT and MEASURE
    """
    reduce = c.optimized if reduce_zero_swaps is None else reduce_zero_swaps
    zero = set(range(c.n_qubits))
    expanded: List[Gate] = []
    src = c.gates
    for i, g in enumerate(src):
        if g.kind is GateKind.SWAP:
            a, b = g.qubits
            prev = expanded[-1] if expanded else None
            nxt = src[i + 1] if i + 1 < len(src) else None
            expanded.extend(_swap_as_cnots(a, b, zero, reduce, prev, nxt))
            a_zero, b_zero = a in zero, b in zero
            zero.discard(a)
            zero.discard(b)
            if b_zero:
                zero.add(a)
            if a_zero:
                zero.add(b)
            continue
        if g.kind is GateKind.H:
            zero.discard(g.qubits[0])
        elif g.kind is GateKind.CNOT and g.qubits[0] not in zero:
            zero.discard(g.qubits[1])
        expanded.append(g)

    lowered = _cancel_cnot_pairs(expanded, c.n_qubits)
    logger.debug(f"Lowered {len(c.gates)} gates to {len(lowered)} (reduced swaps: {reduce})")
    return CircuitIR(
        n_qubits=c.n_qubits,
        gates=tuple(lowered),
        parity_clbits=c.parity_clbits,
        variable_clbits=c.variable_clbits,
        matrix=c.matrix,
        optimized=c.optimized,
    )


# ==================== ACCOUNTING ====================

def gate_stats(c: CircuitIR) -> GateStats:
    counts = {kind: 0 for kind in GateKind}
    for g in c.gates:
        counts[g.kind] += 1
    return GateStats(
        n_cnot=counts[GateKind.CNOT],
        n_h=counts[GateKind.H],
        n_measure=counts[GateKind.MEASURE],
        n_qubits=c.n_qubits,
        n_swap=counts[GateKind.SWAP],
        depth=c.depth(),
    )


def upper_entry_count(P: int, Q: int) -> int:
    """Entries on and right of the diagonal of a P x Q echelon matrix: P(Q - (P - 1)/2)"""
    return P * (2 * Q - P + 1) // 2


def cnot_bound(rank: int, L: int) -> int:
    """
    Worst-case CNOTs for an optimized circuit: every row holds its leading
    one and zeros elsewhere, so 3Z + 2P with Z = U(P, L) - P. Equals
    (3/2) rank (2L - rank + 1/3), always an integer.
    """
    if not 0 <= rank <= L:
        raise ValueError(f"rank={rank} must lie in [0, L={L}]")
    zeros = upper_entry_count(rank, L) - rank
    return 3 * zeros + 2 * rank


def global_cnot_bound(L: int) -> int:
    """Maximum of cnot_bound over rank: L(3L + 1)/2"""
    return L * (3 * L + 1) // 2


def naive_cnot_count(m_rows: int, L: int, p: int = ROW_WEIGHT) -> int:
    """|M| [2p + 3(L - p)]: two CNOTs per one, three per zero"""
    return m_rows * (2 * p + 3 * (L - p))

"""
OpenQASM Service
Exports lowered circuits as OpenQASM 2.0 text and parses that dialect back
"""
import re
from typing import List, Optional

from app.config.logger import get_logger
from app.exceptions import QasmParseError, UnloweredGateError
from app.services.compiler import CircuitIR, Gate, GateKind
from app.services.gf2_core import BitMatrix

logger = get_logger("qasm")

HEADER = ['OPENQASM 2.0;', 'include "qelib1.inc";']
META = "// vitriq:"

_GATE_PATTERNS = {
    GateKind.H: re.compile(r'^h\s+q\[(\d+)\];$'),
    GateKind.CNOT: re.compile(r'^cx\s+q\[(\d+)\]\s*,\s*q\[(\d+)\];$'),
    GateKind.MEASURE: re.compile(r'^measure\s+q\[(\d+)\]\s*->\s*c\[(\d+)\];$'),
}
_QREG = re.compile(r'^qreg\s+q\[(\d+)\];$')
_CREG = re.compile(r'^creg\s+c\[(\d+)\];$')


def export_circuit(c: CircuitIR) -> str:
    """
    Render a lowered circuit as OpenQASM 2.0. Register maps, the source
    matrix and the optimized flag travel in `// vitriq:` comments so the
    text parses back to the same circuit.

    Args:
        c: Circuit containing only H, CNOT and MEASURE

    Returns:
        QASM text ending with a newline

    Raises:
        UnloweredGateError: If a SWAP remains
    """
    if not c.is_lowered():
        raise UnloweredGateError("Lower the circuit before exporting; SWAP has no qelib1 form here")

    lines: List[str] = list(HEADER)
    if c.matrix is not None:
        lines.append(f"{META} matrix {c.matrix.n_rows} {c.matrix.n_cols}")
        lines.extend(f"{META} row {row}" for row in c.matrix.row_strings())
    lines.append(f"{META} parity {' '.join(map(str, c.parity_clbits))}".rstrip())
    lines.append(f"{META} variable {' '.join(map(str, c.variable_clbits))}".rstrip())
    lines.append(f"{META} optimized {int(c.optimized)}")
    lines.append(f"qreg q[{c.n_qubits}];")
    lines.append(f"creg c[{c.n_clbits}];")

    for g in c.gates:
        if g.kind is GateKind.H:
            lines.append(f"h q[{g.qubits[0]}];")
        elif g.kind is GateKind.CNOT:
            lines.append(f"cx q[{g.qubits[0]}],q[{g.qubits[1]}];")
        else:
            lines.append(f"measure q[{g.qubits[0]}] -> c[{g.clbit}];")
    return "\n".join(lines) + "\n"


def parse_qasm(text: str) -> CircuitIR:
    """
    Parse text produced by export_circuit.

    Args:
        text: QASM source

    Returns:
        The circuit, with metadata restored when present

    Raises:
        QasmParseError: On any statement outside the exported dialect
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if lines[:2] != HEADER:
        raise QasmParseError("Missing OPENQASM 2.0 header")

    n_qubits: Optional[int] = None
    n_clbits: Optional[int] = None
    matrix_shape = None
    matrix_rows: List[str] = []
    parity: List[int] = []
    variable: List[int] = []
    optimized = False
    gates: List[Gate] = []

    for number, line in enumerate(lines[2:], start=3):
        if line.startswith(META):
            words = line[len(META):].split()
            key, values = words[0], words[1:]
            if key == "matrix":
                matrix_shape = (int(values[0]), int(values[1]))
            elif key == "row":
                matrix_rows.append(values[0])
            elif key == "parity":
                parity = [int(v) for v in values]
            elif key == "variable":
                variable = [int(v) for v in values]
            elif key == "optimized":
                optimized = values[0] == "1"
            continue
        if line.startswith("//"):
            continue
        if (m := _QREG.match(line)):
            n_qubits = int(m.group(1))
            continue
        if (m := _CREG.match(line)):
            n_clbits = int(m.group(1))
            continue
        for kind, pattern in _GATE_PATTERNS.items():
            m = pattern.match(line)
            if not m:
                continue
            if kind is GateKind.H:
                gates.append(Gate.h(int(m.group(1))))
            elif kind is GateKind.CNOT:
                gates.append(Gate.cnot(int(m.group(1)), int(m.group(2))))
            else:
                gates.append(Gate.measure(int(m.group(1)), int(m.group(2))))
            break
        else:
            raise QasmParseError(f"Line {number}: unsupported statement {line!r}")

    if n_qubits is None or n_clbits is None:
        raise QasmParseError("Missing qreg or creg declaration")
    if not parity and not variable:
        # Plain QASM without metadata: treat every classical bit as a variable
        variable = list(range(n_clbits))
    if len(parity) + len(variable) != n_clbits:
        raise QasmParseError(f"Register maps cover {len(parity) + len(variable)} of {n_clbits} bits")

    matrix = None
    if matrix_shape is not None:
        matrix = BitMatrix.from_strings(matrix_rows, matrix_shape[1])
        if matrix.n_rows != matrix_shape[0]:
            raise QasmParseError(f"Matrix header declares {matrix_shape[0]} rows, found {matrix.n_rows}")

    try:
        return CircuitIR(
            n_qubits=n_qubits,
            gates=tuple(gates),
            parity_clbits=tuple(parity),
            variable_clbits=tuple(variable),
            matrix=matrix,
            optimized=optimized,
        )
    except ValueError as e:
        raise QasmParseError(str(e)) from e

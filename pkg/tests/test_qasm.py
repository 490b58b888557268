"""
Tests for OpenQASM export and parsing
"""
import pytest

from app.exceptions import QasmParseError, UnloweredGateError
from app.services.compiler import compile_naive, compile_optimized, lower_to_cnot
from app.services.qasm import HEADER, export_circuit, parse_qasm


class TestExport:
    def test_header_and_registers(self, worked_b_mp):
        text = export_circuit(lower_to_cnot(compile_optimized(worked_b_mp)))
        lines = text.splitlines()
        assert lines[:2] == HEADER
        assert "qreg q[11];" in lines
        assert "creg c[11];" in lines
        assert text.endswith("\n")

    def test_only_supported_gates(self, worked_b_m):
        text = export_circuit(lower_to_cnot(compile_naive(worked_b_m)))
        body = [ln for ln in text.splitlines()[2:] if not ln.startswith(("//", "qreg", "creg"))]
        assert all(ln.split()[0] in ("h", "cx", "measure") for ln in body)

    def test_unlowered_rejected(self, worked_b_m):
        with pytest.raises(UnloweredGateError):
            export_circuit(compile_naive(worked_b_m))


class TestParse:
    @pytest.mark.parametrize("optimized", [False, True])
    def test_parses_exported_circuit(self, worked_b_m, worked_b_mp, optimized):
        c = compile_optimized(worked_b_mp) if optimized else compile_naive(worked_b_m)
        lowered = lower_to_cnot(c)
        parsed = parse_qasm(export_circuit(lowered))
        assert parsed == lowered
        assert parsed.matrix == lowered.matrix

    def test_re_export_is_byte_identical(self, worked_b_mp):
        text = export_circuit(lower_to_cnot(compile_optimized(worked_b_mp)))
        assert export_circuit(parse_qasm(text)) == text

    def test_plain_qasm_treated_as_variables(self):
        text = "\n".join(HEADER + ["qreg q[2];", "creg c[2];", "h q[0];", "cx q[0],q[1];",
                                   "measure q[0] -> c[0];", "measure q[1] -> c[1];"])
        c = parse_qasm(text)
        assert c.n_qubits == 2
        assert c.parity_clbits == ()
        assert c.variable_clbits == (0, 1)
        assert c.matrix is None

    def test_missing_header(self):
        with pytest.raises(QasmParseError):
            parse_qasm("qreg q[1];\ncreg c[1];\n")

    def test_unsupported_statement(self):
        text = "\n".join(HEADER + ["qreg q[2];", "creg c[2];", "swap q[0],q[1];"])
        with pytest.raises(QasmParseError, match="unsupported"):
            parse_qasm(text)

    def test_missing_registers(self):
        with pytest.raises(QasmParseError):
            parse_qasm("\n".join(HEADER + ["h q[0];"]))

    def test_out_of_range_qubit(self):
        text = "\n".join(HEADER + ["qreg q[1];", "creg c[1];", "h q[3];"])
        with pytest.raises(QasmParseError):
            parse_qasm(text)

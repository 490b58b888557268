from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field
from typing import List
import traceback
from app.config.logger import get_logger
from app.services.compiler import compile_naive, compile_optimized, gate_stats, lower_to_cnot, cnot_bound
from app.services.gf2_core import BitMatrix, backfill_optimize, has_fill_property, rank
from app.services.qasm import export_circuit

# ==================== CIRCUIT COMPILATION ====================
router = APIRouter()
logger = get_logger("compile_route")


class MatrixRequest(BaseModel):
    rows: List[str] = Field(..., min_length=1, description="Matrix rows as 0/1 strings")


class CompileRequest(MatrixRequest):
    naive: bool = False
    qasm: bool = True


@router.post("/api/backfill")
async def backfill(request: MatrixRequest):
    logger.info(f"Received backfill request for {len(request.rows)} rows")
    try:
        matrix = BitMatrix.from_strings(request.rows)
        optimized = backfill_optimize(matrix)
        return {
            "status": "success",
            "data": {
                "rows": optimized.row_strings(),
                "rank": rank(matrix),
                "leading_columns": optimized.leading_columns(),
                "fill_property": has_fill_property(optimized),
            }
        }

    except ValueError as e:
        logger.error(f"Validation error: {str(e)}")
        raise HTTPException(
            status_code=400,
            detail=str(e)
        )
    except Exception as e:
        logger.error(f"Error optimizing matrix: {str(e)}")
        logger.error(traceback.format_exc())
        raise HTTPException(
            status_code=500,
            detail=f"Error optimizing matrix: {str(e)}"
        )


@router.post("/api/compile")
async def compile_circuit(request: CompileRequest):
    logger.info(f"Received compile request: {len(request.rows)} rows, naive={request.naive}")
    try:
        matrix = BitMatrix.from_strings(request.rows)
        if request.naive:
            circuit = lower_to_cnot(compile_naive(matrix))
        else:
            circuit = lower_to_cnot(compile_optimized(backfill_optimize(matrix)))
        stats = gate_stats(circuit)

        data = {
            "rank": rank(matrix),
            "n_qubits": stats.n_qubits,
            "n_cnot": stats.n_cnot,
            "n_h": stats.n_h,
            "n_measure": stats.n_measure,
            "depth": stats.depth,
            "cnot_bound": cnot_bound(circuit.n_parities, matrix.n_cols) if not request.naive else None,
        }
        if request.qasm:
            data["qasm"] = export_circuit(circuit)
        return {
            "status": "success",
            "data": data
        }

    except ValueError as e:
        logger.error(f"Validation error: {str(e)}")
        raise HTTPException(
            status_code=400,
            detail=str(e)
        )
    except Exception as e:
        logger.error(f"Error compiling circuit: {str(e)}")
        logger.error(traceback.format_exc())
        raise HTTPException(
            status_code=500,
            detail=f"Error compiling circuit: {str(e)}"
        )

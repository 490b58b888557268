from fastapi import APIRouter, HTTPException
from dataclasses import asdict
import traceback
from app.config.logger import get_logger
from app.config.sweep_config import SweepConfig
from app.services.ensemble import measured_rows
from app.services.sweep import run_sweep

# ==================== SWEEPS ====================
router = APIRouter()
logger = get_logger("sweep_route")

# Synchronous sweeps only; larger runs go through the CLI
MAX_SYNC_WORK = 20000


def _work(cfg: SweepConfig) -> int:
    return sum(cfg.matrices_for(L) * measured_rows(L, cfg.alpha_max) for L in cfg.L)


@router.post("/api/sweep")
def sweep(cfg: SweepConfig):
    logger.info(f"Received sweep request: L={cfg.L}, mode={cfg.mode.value}")
    if _work(cfg) > MAX_SYNC_WORK:
        raise HTTPException(
            status_code=400,
            detail=f"Sweep too large for a synchronous request ({_work(cfg)} > {MAX_SYNC_WORK} matrix prefixes)"
        )
    try:
        result = run_sweep(cfg.model_copy(update={"workers": 1, "emit_circuits_dir": None}), progress=False)

        return {
            "status": "success",
            "data": {
                "points": [asdict(p) for p in result.points],
                "diagnostics": [asdict(d) for d in result.diagnostics],
                "provenance": result.provenance,
            }
        }

    except ValueError as e:
        logger.error(f"Validation error: {str(e)}")
        raise HTTPException(
            status_code=400,
            detail=str(e)
        )
    except Exception as e:
        logger.error(f"Error running sweep: {str(e)}")
        logger.error(traceback.format_exc())
        raise HTTPException(
            status_code=500,
            detail=f"Error running sweep: {str(e)}"
        )

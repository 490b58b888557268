from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field
from typing import List
import traceback
from app.config.logger import get_logger
from app.services.analysis import DataPoint
from app.services.fss import ScalingGrid, grid_search, render_report

# ==================== SCALING COLLAPSE ====================
router = APIRouter()
logger = get_logger("collapse_route")


class DataPointModel(BaseModel):
    L: int = Field(..., ge=1)
    alpha: float
    q_mean: float
    stderr: float = Field(..., ge=0)
    n_samples: int = Field(2, ge=0)


class CollapseRequest(BaseModel):
    points: List[DataPointModel] = Field(..., min_length=3)
    grid: ScalingGrid = Field(default_factory=ScalingGrid)


@router.post("/api/collapse")
async def collapse(request: CollapseRequest):
    logger.info(f"Received collapse request with {len(request.points)} points")
    try:
        points = [DataPoint(**p.model_dump()) for p in request.points]
        result = grid_search(points, request.grid)

        return {
            "status": "success",
            "data": {
                "alpha_c": result.alpha_c_exp,
                "nu": result.nu_exp,
                "c_min": result.c_min,
                "uncertainty_alpha": result.uncertainty_alpha,
                "uncertainty_nu": result.uncertainty_nu,
                "unbounded": result.unbounded,
                "n_points": result.n_points,
                "report": render_report(result, request.grid),
            }
        }

    except ValueError as e:
        logger.error(f"Validation error: {str(e)}")
        raise HTTPException(
            status_code=400,
            detail=str(e)
        )
    except Exception as e:
        logger.error(f"Error running collapse: {str(e)}")
        logger.error(traceback.format_exc())
        raise HTTPException(
            status_code=500,
            detail=f"Error running collapse: {str(e)}"
        )

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field
from typing import List, Optional
import traceback
import numpy as np
from app.config.logger import get_logger
from app.services.analysis import (
    DEFAULT_CAP,
    classical_order_parameter,
    count_ground_states,
    exact_order_parameter,
    ground_state_entropy,
    rank_profile,
)
from app.services.gf2_core import BitMatrix, rank

# ==================== ORDER PARAMETER ====================
router = APIRouter()
logger = get_logger("analysis_route")


class OrderParameterRequest(BaseModel):
    rows: List[str] = Field(default_factory=list, description="Measured rows as 0/1 strings")
    n_cols: Optional[int] = Field(None, ge=1, description="Required when rows is empty")
    cap: int = Field(DEFAULT_CAP, ge=1)
    seed: int = 0
    exact: bool = False


@router.post("/api/order-parameter")
async def order_parameter(request: OrderParameterRequest):
    logger.info(f"Received order parameter request: {len(request.rows)} rows, exact={request.exact}")
    try:
        matrix = BitMatrix.from_strings(request.rows, request.n_cols)
        if request.exact:
            q = exact_order_parameter(matrix)
        else:
            q = classical_order_parameter(matrix, request.cap, np.random.default_rng(request.seed))

        return {
            "status": "success",
            "data": {
                "q": q,
                "rank": rank(matrix),
                "n_ground_states": count_ground_states(matrix),
                "ground_state_entropy_bits": ground_state_entropy(matrix) / np.log(2.0),
                "rank_profile": rank_profile(matrix),
            }
        }

    except ValueError as e:
        logger.error(f"Validation error: {str(e)}")
        raise HTTPException(
            status_code=400,
            detail=str(e)
        )
    except Exception as e:
        logger.error(f"Error computing order parameter: {str(e)}")
        logger.error(traceback.format_exc())
        raise HTTPException(
            status_code=500,
            detail=f"Error computing order parameter: {str(e)}"
        )

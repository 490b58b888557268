from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from dotenv import load_dotenv
import traceback
import numpy
import scipy
from app.routes import register_routers
from app.config.logger import get_logger
from app.config.settings import settings
from app.routes.v1.sweep_route import MAX_SYNC_WORK
from app.services.gf2_core import ENUMERATION_LIMIT
from app.services.simulator import DENSE_QUBIT_LIMIT
from app.services.sweep import VERSION

load_dotenv()
logger = get_logger("main")

app = FastAPI(
    title="vitriq API",
    description="Parity-check compilation, stabilizer sampling and scaling collapse for the measurement-driven entanglement transition",
    version=VERSION,
    docs_url="/api/docs",
    openapi_url="/api/openapi.json"
)

allowed_origins = [origin.strip() for origin in settings.FRONTEND_ORIGIN.split(",")]
app.add_middleware(
    CORSMiddleware,
    allow_origins=allowed_origins,
    allow_credentials=True,
    allow_methods=["GET", "POST"],
    allow_headers=["*"],
)

register_routers(app)
logger.info(f"vitriq API {VERSION} ready ({settings.ENV}, origins={allowed_origins})")

# ==================== ROOT ENDPOINTS ====================

@app.get("/")
async def root():
    """API information and the available operations"""
    return {
        "message": "vitriq API",
        "version": VERSION,
        "status": "running",
        "docs": "/api/docs",
        "endpoints": sorted(
            route.path for route in app.routes if route.path.startswith("/v1/")
        ),
    }


@app.get("/health")
async def health_check():
    """Health check with engine limits and numerical library versions"""
    return {
        "status": "healthy",
        "environment": settings.ENV,
        "limits": {
            "dense_state_qubits": DENSE_QUBIT_LIMIT,
            "enumeration_null_dim": ENUMERATION_LIMIT,
            "sync_sweep_prefixes": MAX_SYNC_WORK,
        },
        "versions": {
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
        },
    }

# ==================== ERROR HANDLERS ====================

@app.exception_handler(HTTPException)
async def http_exception_handler(request, exc):
    logger.info(f"HTTP exception on {request.url.path}: {str(exc.detail)}")
    return JSONResponse(
        status_code=exc.status_code,
        content={"detail": exc.detail}
    )


@app.exception_handler(OSError)
async def output_exception_handler(request, exc):
    """Failed artifact writes carry the offending path"""
    logger.error(f"I/O failure on {request.url.path}: {str(exc)}")
    return JSONResponse(
        status_code=500,
        content={"detail": "Could not write output", "path": getattr(exc, "path", None)}
    )


@app.exception_handler(Exception)
async def general_exception_handler(request, exc):
    logger.error(f"Unhandled exception on {request.url.path}: {str(exc)}")
    logger.error(traceback.format_exc())
    return JSONResponse(
        status_code=500,
        content={"detail": "Internal server error"}
    )

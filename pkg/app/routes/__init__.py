from fastapi import FastAPI
from .v1.compile_route import router as compile_router
from .v1.analysis_route import router as analysis_router
from .v1.collapse_route import router as collapse_router
from .v1.sweep_route import router as sweep_router

def register_routers(app: FastAPI):
    app.include_router(compile_router, prefix="/v1")
    app.include_router(analysis_router, prefix="/v1")
    app.include_router(collapse_router, prefix="/v1")
    app.include_router(sweep_router, prefix="/v1")

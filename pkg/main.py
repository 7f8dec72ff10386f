# main.py

import logging
import time

import uvicorn
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from app.logging_config import setup_logging
from app.routes import prior_router

setup_logging()
logger = logging.getLogger("app.main")

app = FastAPI(title="Prior oracle")

app.include_router(prior_router)


# Custom Exception Handlers
@app.exception_handler(HTTPException)
async def http_exception_handler(request: Request, exc: HTTPException):
    logger.error("HTTPException on %s: %s", request.url.path, exc.detail)
    return JSONResponse(
        status_code=exc.status_code,
        content={"error": exc.detail},
    )


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    error_messages = "; ".join([f"{err['loc'][-1]}: {err['msg']}" for err in exc.errors()])
    logger.error("ValidationError on %s: %s", request.url.path, error_messages)
    return JSONResponse(
        status_code=400,
        content={"error": error_messages},
    )


@app.get("/health")
async def health():
    return {"status": "ok"}


# Request/response logging middleware
@app.middleware("http")
async def log_requests(request: Request, call_next):
    start = time.monotonic()
    client_host = request.client.host if request.client else "unknown"
    status = "N/A"
    try:
        response = await call_next(request)
        status = response.status_code
        return response
    finally:
        duration_ms = (time.monotonic() - start) * 1000
        logger.info("%s %s %s -> %s in %.2fms", client_host, request.method, request.url.path, status, duration_ms)


@app.on_event("startup")
async def on_startup():
    logger.info("Application startup complete")


@app.on_event("shutdown")
async def on_shutdown():
    logger.info("Application shutdown initiated")


if __name__ == "__main__":
    uvicorn.run(app, host="127.0.0.1", port=8000)

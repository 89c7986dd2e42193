"""HTTP serving layer: classify uploads and return explanation overlays.

One checkpoint is loaded at startup and shared read-only across requests.
Explanations run on a bounded worker pool with a wall-clock budget; every
error path returns JSON of the form {"error_code": ..., "message": ...}.
"""

from __future__ import annotations

import base64
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout

import numpy as np
from fastapi import FastAPI, File, Form, Query, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from .config import ServiceConfig
from .data import decode_image
from .errors import DecodeError, InvalidConfig, OctClassError, UnknownMethod
from .models import ModelHandle, load_checkpoint
from .models.checkpoint import checkpoint_digest
from .xai import METHODS, explain, to_uint8

logger = logging.getLogger(__name__)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"error_code": code, "message": message}, status_code=status)


def _png_base64(image: np.ndarray) -> str:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(to_uint8(image)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def create_app(
    checkpoint_path: str | None = None,
    service: ServiceConfig | None = None,
    handle: ModelHandle | None = None,
) -> FastAPI:
    """Build the app. Pass checkpoint_path to load at startup, or a prebuilt
    handle (tests); with neither, endpoints answer 503 until a model exists."""
    service = service or ServiceConfig()
    app = FastAPI(title="octclass inference service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    app.state.handle = handle
    app.state.model_name = handle.config.architecture if handle else None
    app.state.digest = None
    app.state.service = service
    app.state.executor = ThreadPoolExecutor(
        max_workers=max(1, service.max_concurrent_explains)
    )
    if checkpoint_path is not None:
        app.state.handle = load_checkpoint(checkpoint_path)
        app.state.model_name = app.state.handle.config.architecture
        app.state.digest = checkpoint_digest(checkpoint_path)

    max_upload_bytes = int(service.max_upload_mb * 1024 * 1024)

    @app.exception_handler(StarletteHTTPException)
    async def http_error(request, exc):
        return _error(exc.status_code, "HttpError", str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def validation_error(request, exc):
        return _error(400, "BadRequest", str(exc.errors()))

    @app.exception_handler(Exception)
    async def unhandled_error(request, exc):
        logger.exception("unhandled service error")
        return _error(500, "InternalError", str(exc))

    def _read_upload(data: bytes):
        if len(data) > max_upload_bytes:
            raise _UploadTooLarge(
                f"upload of {len(data)} bytes exceeds limit {max_upload_bytes}"
            )
        return decode_image(data, source="<upload>")

    @app.get("/api/health")
    def health():
        if app.state.handle is None:
            return _error(503, "ModelNotLoaded", "no checkpoint loaded")
        return {
            "status": "ok",
            "model_name": app.state.model_name,
            "checkpoint_digest": app.state.digest,
        }

    @app.get("/api/classes")
    def classes():
        if app.state.handle is None:
            return _error(503, "ModelNotLoaded", "no checkpoint loaded")
        return list(app.state.handle.class_order)

    @app.post("/api/predict")
    def predict(file: UploadFile = File(...)):
        if app.state.handle is None:
            return _error(503, "ModelNotLoaded", "no checkpoint loaded")
        data = file.file.read()
        try:
            image = _read_upload(data)
        except _UploadTooLarge as exc:
            return _error(413, "TooLarge", str(exc))
        except DecodeError as exc:
            return _error(400, "DecodeError", str(exc))

        model: ModelHandle = app.state.handle
        t0 = time.perf_counter()
        probs = model.forward(image.pixels[None])[0]
        latency_ms = (time.perf_counter() - t0) * 1000.0
        top = int(np.argmax(probs))
        return {
            "top_class": model.class_order[top],
            "confidence": float(probs[top]),
            "probabilities": {
                name: float(p) for name, p in zip(model.class_order, probs)
            },
            "model_name": app.state.model_name,
            "latency_ms": latency_ms,
        }

    @app.post("/api/explain")
    def explain_endpoint(
        method: str = Query(...),
        target_class: str | None = Query(None),
        file: UploadFile = File(...),
        params: str | None = Form(None),
    ):
        if app.state.handle is None:
            return _error(503, "ModelNotLoaded", "no checkpoint loaded")
        if method not in METHODS:
            return _error(400, "UnknownMethod",
                          f"method must be one of {list(METHODS)}, got {method!r}")
        data = file.file.read()
        try:
            image = _read_upload(data)
        except _UploadTooLarge as exc:
            return _error(413, "TooLarge", str(exc))
        except DecodeError as exc:
            return _error(400, "DecodeError", str(exc))

        model: ModelHandle = app.state.handle
        if params is not None:
            try:
                params_doc = json.loads(params)
            except json.JSONDecodeError as exc:
                return _error(400, "BadParams", f"params is not valid JSON: {exc}")
            if not isinstance(params_doc, dict):
                return _error(400, "BadParams", "params must be a JSON object")
        else:
            params_doc = {}

        if target_class is None:
            probs = model.forward(image.pixels[None])[0]
            class_idx = int(np.argmax(probs))
        else:
            try:
                class_idx = _parse_target_class(target_class, model.class_order)
            except ValueError as exc:
                return _error(400, "BadParams", str(exc))

        budget = app.state.service.explain_timeout_s
        future = app.state.executor.submit(
            explain, model, image.pixels, class_idx, method, params_doc
        )
        try:
            result = future.result(timeout=budget)
        except FutureTimeout:
            future.cancel()
            return _error(504, "ExplainTimeout",
                          f"explanation exceeded the {budget}s budget")
        except (InvalidConfig, UnknownMethod) as exc:
            return _error(400, "BadParams", str(exc))
        except OctClassError as exc:
            return _error(400, "BadParams", str(exc))

        return {
            "method": method,
            "overlay_image": _png_base64(result.overlay),
            "raw_map": result.map.values.tolist(),
            "params": result.params,
            "target_class": result.map.target_class.name,
            "class_probability": result.class_probability,
        }

    return app


class _UploadTooLarge(Exception):
    pass


def _parse_target_class(value: str, class_order: tuple[str, ...]) -> int:
    try:
        idx = int(value)
    except ValueError:
        upper = {name.upper(): i for i, name in enumerate(class_order)}
        if value.upper() in upper:
            return upper[value.upper()]
        raise ValueError(f"unknown class {value!r}; expected one of {list(class_order)}")
    if not 0 <= idx < len(class_order):
        raise ValueError(f"class index {idx} out of range 0..{len(class_order) - 1}")
    return idx

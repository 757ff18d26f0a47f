"""HTTP inference service for the drawing app and other JSON clients.

Endpoints:
    POST /api/predict  {"model": "digits"|"letters", "pixels": [side^2 floats]}
    GET  /api/health   loaded model names, input sides, format versions
    GET  /api/models   class-name catalog per loaded model

Models are loaded once at startup into immutable shared state; request
handling is stateless. Bodies over 1 MiB are rejected before parsing.
"""

from __future__ import annotations

import logging
import math
import os

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .store import load_model

log = logging.getLogger(__name__)

MAX_BODY_BYTES = 1 << 20
MODEL_KINDS = ("digits", "letters")


class PredictRequest(BaseModel):
    model: str
    pixels: list[float]


def _load_available(model_dir: str) -> dict[str, tuple]:
    models = {}
    for kind in MODEL_KINDS:
        base = os.path.join(model_dir, kind)
        if os.path.exists(base + ".json"):
            models[kind] = load_model(base)
            log.info("loaded %s model from %s", kind, base)
    return models


def predict(model, manifest, pixels: np.ndarray, topk: int = 3) -> dict:
    """Eval-mode forward on one upright [0,1] image; shared by all clients."""
    side = model.spec.side
    x = np.clip(pixels, 0.0, 1.0).astype(np.float32).reshape(1, side, side, 1)
    probs = model.forward(x, mode="eval")[0]
    names = manifest["class_names"]
    order = np.argsort(-probs, kind="stable")
    best = int(order[0])
    return {
        "label": names[best],
        "class_index": best,
        "probabilities": [float(p) for p in probs],
        "topk": [[names[int(i)], float(probs[int(i)])] for i in order[:topk]],
    }


def create_app(model_dir: str = ".", ui_dir: str | None = None,
               allow_origins: list[str] | None = None) -> FastAPI:
    app = FastAPI(title="huruf inference service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=allow_origins if allow_origins is not None else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    models = _load_available(model_dir)
    app.state.models = models

    @app.middleware("http")
    async def limit_body(request: Request, call_next):
        length = request.headers.get("content-length")
        if length is not None and int(length) > MAX_BODY_BYTES:
            return JSONResponse({"detail": "request body too large"}, status_code=413)
        return await call_next(request)

    @app.post("/api/predict")
    def api_predict(req: PredictRequest):
        entry = models.get(req.model)
        if entry is None:
            raise HTTPException(404, f"unknown model {req.model!r}")
        model, manifest = entry
        side = model.spec.side
        if len(req.pixels) != side * side:
            raise HTTPException(
                400, f"wrong pixel count {len(req.pixels)}, expected {side * side}"
            )
        if not all(math.isfinite(p) for p in req.pixels):
            raise HTTPException(400, "pixels must be finite")
        return predict(model, manifest, np.array(req.pixels, dtype=np.float64))

    @app.get("/api/health")
    def api_health():
        return {
            "status": "ok",
            "models": [
                {
                    "name": kind,
                    "side": m.spec.side,
                    "format_version": manifest["format_version"],
                }
                for kind, (m, manifest) in sorted(models.items())
            ],
        }

    @app.get("/api/models")
    def api_models():
        return {
            "models": [
                {
                    "name": kind,
                    "side": m.spec.side,
                    "class_names": manifest["class_names"],
                }
                for kind, (m, manifest) in sorted(models.items())
            ]
        }

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/app", StaticFiles(directory=ui_dir, html=True), name="app")
    return app

"""HTTP+JSON survey service.

Endpoints (full field reference in docs/http-api.md):

    GET  /api/styles                 style names and per-style tempi
    POST /api/grooves                body {style, kick_grid: 4x48 bools};
                                     returns {id, style, output_phrase,
                                     steps: {voice letter: 4x48 bools}}
    POST /api/grooves/{id}/rating    body {rating: poor|average|good}
    GET  /api/reports/methods        raw + normalised counts per method
    GET  /api/reports/brackets       mean rating per probability bracket
    GET  /api/reports/styles         rating counts and poor share per style

The generation response deliberately omits the sampling method so raters
stay blind; the method is persisted in the log and surfaces only through
the reports.  State lives entirely in the append-only log; the process can
be restarted against the same log at any time.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .checkpoint import load_checkpoint
from .corpus import load_grammars
from .survey import (
    AlreadyRatedError,
    SurveyStore,
    UnknownGrooveError,
    aggregate_by_method,
    aggregate_by_probability_bracket,
    aggregate_by_style,
    phrase_to_voice_grids,
)
from .tokens import parse_phrase

STYLE_NAMES = ("pop", "rock", "funk", "afrocuban")


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    checkpoint_path: str = "model.ckpt"
    log_path: str = "survey-log.ndjson"
    seed: int | None = None
    static_dir: str | None = None


_ENV_PREFIX = "KICK2KIT_"


def load_service_config(
    path: str | Path | None = None, env: dict | None = None
) -> ServiceConfig:
    """Config file (JSON object) with environment overrides.

    Recognized keys / variables: host (KICK2KIT_HOST), port (KICK2KIT_PORT),
    checkpoint_path (KICK2KIT_CHECKPOINT), log_path (KICK2KIT_LOG),
    seed (KICK2KIT_SEED), static_dir (KICK2KIT_STATIC).
    """
    import json

    env = dict(os.environ if env is None else env)
    values: dict = {}
    if path is not None:
        values.update(json.loads(Path(path).read_text(encoding="utf-8")))
    if _ENV_PREFIX + "HOST" in env:
        values["host"] = env[_ENV_PREFIX + "HOST"]
    if _ENV_PREFIX + "PORT" in env:
        values["port"] = int(env[_ENV_PREFIX + "PORT"])
    if _ENV_PREFIX + "CHECKPOINT" in env:
        values["checkpoint_path"] = env[_ENV_PREFIX + "CHECKPOINT"]
    if _ENV_PREFIX + "LOG" in env:
        values["log_path"] = env[_ENV_PREFIX + "LOG"]
    if _ENV_PREFIX + "SEED" in env:
        values["seed"] = int(env[_ENV_PREFIX + "SEED"])
    if _ENV_PREFIX + "STATIC" in env:
        values["static_dir"] = env[_ENV_PREFIX + "STATIC"]
    return ServiceConfig(**values)


class CreateGrooveRequest(BaseModel):
    style: Literal["pop", "rock", "funk", "afrocuban"]
    kick_grid: list[list[bool]] = Field(description="4 bars x 48 steps")


class RatingRequest(BaseModel):
    rating: Literal["poor", "average", "good"]


def create_app(store: SurveyStore, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="kick2kit survey service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    tempi = {style.word: g.tempo_bpm for style, g in load_grammars().items()}

    @app.get("/api/styles")
    def styles() -> dict:
        return {
            "styles": [
                {"name": name, "tempo_bpm": tempi[name]} for name in STYLE_NAMES
            ]
        }

    @app.post("/api/grooves")
    def create_groove(request: CreateGrooveRequest) -> dict:
        try:
            record = store.create_groove(request.style, kick_grid=request.kick_grid)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {
            "id": record.id,
            "style": record.style.word,
            "output_phrase": record.output_text,
            "steps": phrase_to_voice_grids(parse_phrase(record.output_text)),
        }

    @app.post("/api/grooves/{groove_id}/rating")
    def submit_rating(groove_id: str, request: RatingRequest) -> dict:
        try:
            record = store.submit_rating(groove_id, request.rating)
        except UnknownGrooveError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        except AlreadyRatedError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        return {"id": record.id, "rating": record.rating}

    @app.get("/api/reports/methods")
    def report_methods() -> dict:
        table = aggregate_by_method(store.records())
        return {
            "methods": [
                {
                    "method": method,
                    "raw": aggregate.raw,
                    "normalised": aggregate.normalised,
                }
                for method, aggregate in sorted(table.items())
            ]
        }

    @app.get("/api/reports/brackets")
    def report_brackets() -> dict:
        return {"brackets": aggregate_by_probability_bracket(store.records())}

    @app.get("/api/reports/styles")
    def report_styles() -> dict:
        return {"styles": aggregate_by_style(store.records())}

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app


def run_service(config: ServiceConfig) -> None:
    """Load the model bundle and serve until interrupted."""
    import uvicorn

    bundle = load_checkpoint(config.checkpoint_path)
    store = SurveyStore(bundle, config.log_path, seed=config.seed)
    app = create_app(store, static_dir=config.static_dir)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")

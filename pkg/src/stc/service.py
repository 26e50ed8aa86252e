"""HTTP API over an immutable engine snapshot.

POST /api/respond, GET /api/health, GET /api/models. Request bodies are
validated by hand so malformed input is a 400 (not a framework 422); the
engine snapshot is read-only, so concurrent requests need no locks.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .corpus import ShortText, Token, parse_short_text
from .engine import ModelRegistry, read_manifest, respond


def _whitespace_text(message: str) -> ShortText:
    tokens = tuple(Token(surface) for surface in message.split())
    if not tokens:
        raise ValueError("message has no tokens")
    return ShortText(sentences=(tokens,),
                     raw_char_len=sum(len(t.surface) for t in tokens))


def parse_message(message: str, tokenized: bool) -> tuple[ShortText, list]:
    """Returns (text, warnings). Untokenized messages get whitespace
    tokenization and a warning; quality degrades gracefully."""
    if tokenized:
        return parse_short_text(message), []
    return _whitespace_text(message), [
        "message treated as untokenized; whitespace tokenization applied"]


def create_app(registry: ModelRegistry | None = None,
               model_dir: str | None = None,
               static_dir: str | None = None) -> FastAPI:
    """static_dir, when given, is mounted at / so the web chat UI and the
    API share an origin."""
    app = FastAPI(title="stc", version=__version__)
    app.state.registry = registry
    app.state.model_dir = model_dir

    @app.get("/api/health")
    def health():
        return {"status": "ok", "engine_loaded": app.state.registry is not None}

    @app.get("/api/models")
    def models():
        if app.state.model_dir is None:
            return JSONResponse({"error": "engine not loaded from a model "
                                          "directory"}, status_code=503)
        manifest = read_manifest(app.state.model_dir)
        return {"manifest": manifest, "engine_version": __version__}

    @app.post("/api/respond")
    async def api_respond(request: Request):
        reg = app.state.registry
        if reg is None:
            return JSONResponse({"error": "engine not loaded"}, status_code=503)
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "body is not valid JSON"},
                                status_code=400)
        if not isinstance(body, dict):
            return JSONResponse({"error": "body must be a JSON object"},
                                status_code=400)
        message = body.get("message")
        if not isinstance(message, str) or not message.strip():
            return JSONResponse({"error": "message must be a non-empty string"},
                                status_code=400)
        top_k = body.get("top_k", 10)
        if not isinstance(top_k, int) or isinstance(top_k, bool) \
                or not 1 <= top_k <= 100:
            return JSONResponse({"error": "top_k must be an integer in [1, 100]"},
                                status_code=400)
        tokenized = body.get("tokenized", False)
        if not isinstance(tokenized, bool):
            return JSONResponse({"error": "tokenized must be a boolean"},
                                status_code=400)
        try:
            text, warnings = parse_message(message, tokenized)
        except ValueError as exc:
            return JSONResponse({"error": f"unparseable message: {exc}"},
                                status_code=400)

        started = time.perf_counter()
        result = respond(reg, text, top_k=top_k)
        elapsed_ms = (time.perf_counter() - started) * 1000.0

        candidates = []
        for r in result.responses:
            breakdown = {}
            for i, name in enumerate(reg.ranker.schema.names):
                weight = float(reg.ranker.weights[i])
                std = r.features_std[name]
                breakdown[name] = {
                    "raw": r.features_raw[name],
                    "standardized": std,
                    "weight": weight,
                    "weighted": weight * std,
                }
            candidates.append({
                "rank": r.rank,
                "pair_id": r.pair_id,
                "response": r.response,
                "post": r.post,
                "score": r.score,
                "features": r.features_raw,
                "breakdown": breakdown,
            })
        return {
            "candidates": candidates,
            "timing_ms": elapsed_ms,
            "engine_version": __version__,
            "warnings": warnings + result.diagnostics,
        }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")

    return app

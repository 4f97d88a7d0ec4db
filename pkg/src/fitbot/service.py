"""Stateless HTTP message service.

Watson-V2-shaped surface: ``POST /v2/sessions``, ``POST
/v2/sessions/{id}/message``, ``DELETE /v2/sessions/{id}``, ``GET /health``.
Every message is handled purely from (request, stored session snapshot);
replaying the same pair produces a byte-identical response body, which is
why responses are serialized through one canonical JSON encoder.
"""

from __future__ import annotations

import datetime as dt
import json
import time

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from .conditions import IDENT_RE
from .dialog import JumpLimitExceeded, NoFallback
from .engine import REFERENCE_TIME_VAR, Assistant, resolve_reference_time
from .textprep import MAX_INPUT_CHARS

USER_ID_VAR = "user_id"

# a defective-but-valid skill (jump cycle, no fallback node) must degrade to
# a chat turn, never a 500
ENGINE_FAILURE_TEXT = "Sorry, I could not process that. Please try rephrasing."


def canonical_json(payload) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


def _json_response(payload, status_code: int = 200) -> Response:
    return Response(
        content=canonical_json(payload),
        status_code=status_code,
        media_type="application/json",
    )


def _error(status_code: int, message: str) -> Response:
    return _json_response({"error": message}, status_code)


def build_message_response(turn) -> dict:
    output: dict = {
        "generic": [{"response_type": "text", "text": t} for t in turn.result.responses],
        "intents": [
            {"intent": p.intent, "confidence": p.confidence} for p in turn.nlu.intents
        ],
        "entities": [
            {
                "entity": m.entity,
                "value": m.value_json(),
                "location": [m.start, m.end],
                "confidence": m.confidence,
            }
            for m in turn.nlu.mentions
        ],
    }
    if turn.nlu.corrected_text is not None:
        output["corrected_text"] = turn.nlu.corrected_text
    return {"output": output, "context": turn.result.updated_session.context}


def create_app(
    assistant: Assistant | None,
    session_store,
    profile_store,
    cors_origins: list[str] | None = None,
    webchat_dir=None,
) -> FastAPI:
    app = FastAPI(title="fitbot", docs_url=None, redoc_url=None)
    app.state.assistant = assistant
    app.state.session_store = session_store
    app.state.profile_store = profile_store
    app.state.started_at = time.time()

    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["GET", "POST", "DELETE", "OPTIONS"],
        allow_headers=["*"],
    )

    @app.get("/health")
    def health():
        bot = app.state.assistant
        if bot is None:
            return _error(503, "skill not loaded")
        return _json_response(
            {
                "status": "ok",
                "skill": bot.skill.name,
                "intents": len(bot.skill.intents),
                "entities": len(bot.skill.entities),
                "uptime_seconds": round(time.time() - app.state.started_at, 3),
            }
        )

    @app.post("/v2/sessions")
    def create_session():
        if app.state.assistant is None:
            return _error(503, "skill not loaded")
        state = app.state.session_store.create()
        return _json_response({"session_id": state.session_id}, 201)

    @app.delete("/v2/sessions/{session_id}")
    def delete_session(session_id: str):
        if app.state.session_store.delete(session_id):
            return Response(status_code=204)
        return _error(404, f"session {session_id} not found")

    @app.post("/v2/sessions/{session_id}/message")
    async def message(session_id: str, request: Request):
        bot = app.state.assistant
        if bot is None:
            return _error(503, "skill not loaded")
        try:
            body = json.loads(await request.body() or b"{}")
        except json.JSONDecodeError:
            return _error(400, "request body is not valid JSON")
        if not isinstance(body, dict) or not isinstance(body.get("input"), dict):
            return _error(400, "body must contain an 'input' object")
        text = body["input"].get("text")
        if not isinstance(text, str):
            return _error(400, "input.text is required and must be a string")
        if len(text) > MAX_INPUT_CHARS:
            return _error(413, f"input.text exceeds {MAX_INPUT_CHARS} characters")
        overrides = body.get("context", {})
        if not isinstance(overrides, dict):
            return _error(400, "context must be an object")
        for key in overrides:
            if not IDENT_RE.fullmatch(str(key)):
                return _error(400, f"context key {key!r} is not a valid variable name")

        store = app.state.session_store
        with store.locks.get(session_id):
            session = store.load(session_id)
            if session is None:
                return _error(404, f"session {session_id} not found or expired")
            session.context.update(overrides)
            arrival = dt.datetime.now().replace(microsecond=0)
            reference = resolve_reference_time(overrides, session.context, arrival)
            session.context[REFERENCE_TIME_VAR] = reference.isoformat()

            profile = None
            if bot.catalog is not None:
                user_id = str(session.context.get(USER_ID_VAR) or session.session_id)
                profile = app.state.profile_store.load(user_id)

            try:
                turn = bot.message(session, text, reference, profile)
            except (JumpLimitExceeded, NoFallback) as exc:
                store.save(session)
                return _json_response(
                    {
                        "output": {
                            "generic": [
                                {"response_type": "text", "text": ENGINE_FAILURE_TEXT}
                            ],
                            "intents": [],
                            "entities": [],
                        },
                        "context": dict(session.context) | {"engine_error": str(exc)},
                    }
                )
            store.save(turn.result.updated_session)
            if turn.profile is not None and turn.profile is not profile:
                app.state.profile_store.save(turn.profile)
        return _json_response(build_message_response(turn))

    if webchat_dir is not None:
        app.mount("/", StaticFiles(directory=webchat_dir, html=True), name="webchat")

    return app

"""HTTP scoring service.

Request bodies are parsed from raw bytes with the same document parsers the
CLI uses, and responses are emitted through the same dump_document
serializer, so a given input produces byte-identical output on both
surfaces. Each request is stateless; the only shared object is the
embedding provider (and its read-through cache), which is safe under
concurrent readers.

Error bodies are {"code", "message", "detail"} with status:

  400  parse errors
  422  precondition violations (empty graph, bad group, cyclic input, ...)
  502  embedding provider unavailable
  500  anything unexpected
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Request, Response

from . import __version__
from .config import EngineConfig, load_config, make_provider
from .documents import (
    breakdown_document,
    ceg_document,
    dump_document,
    extract_ceg_with_stats,
    parse_triplet_document,
)
from .errors import ParseError, ProviderUnavailable, RewardEngineError
from .graph import build_graph
from .grpo import group_advantages
from .reward import crp_reward
from .validation import as_ceg, as_triplets

_JSON = "application/json"


def _status_for(err: RewardEngineError) -> int:
    if isinstance(err, ParseError):
        return 400
    if isinstance(err, ProviderUnavailable):
        return 502
    return 422


def _error_response(err: RewardEngineError) -> Response:
    body = dump_document({"code": err.code, "message": str(err), "detail": err.detail()})
    return Response(content=body, status_code=_status_for(err), media_type=_JSON)


def _document(payload: dict, status_code: int = 200) -> Response:
    return Response(content=dump_document(payload), status_code=status_code, media_type=_JSON)


def _parse_object(raw: bytes) -> dict:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"malformed JSON body: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("request body must be a JSON object")
    return doc


def _require(doc: dict, *names: str) -> None:
    for name in names:
        if name not in doc:
            raise ParseError(f'missing required field "{name}"', field=name)


def create_app(config: EngineConfig | None = None, provider=None) -> FastAPI:
    """Build the service; provider may be injected for tests."""
    config = load_config() if config is None else config
    app = FastAPI(title="cegreward", version=__version__, docs_url=None, redoc_url=None)

    def resolve_provider():
        # deferred so the app can start before the backend is reachable
        nonlocal provider
        if provider is None:
            provider = make_provider(config)
        return provider

    @app.exception_handler(RewardEngineError)
    async def engine_error_handler(request: Request, err: RewardEngineError):
        return _error_response(err)

    @app.exception_handler(Exception)
    async def internal_error_handler(request: Request, err: Exception):
        body = dump_document(
            {"code": "internal", "message": f"{type(err).__name__}: {err}", "detail": {}}
        )
        return Response(content=body, status_code=500, media_type=_JSON)

    @app.get("/health")
    async def health():
        try:
            name = resolve_provider().name
        except RewardEngineError:
            name = f"unconfigured:{config.provider.kind}"
        return _document({"status": "ok", "provider": name, "version": __version__})

    @app.post("/v1/ceg/extract")
    async def extract(request: Request):
        raw = await request.body()
        doc = _parse_object(raw)
        _require(doc, "triplets", "answer")
        if not isinstance(doc["answer"], str):
            raise ParseError('"answer" must be a string', field="answer")
        triplets = parse_triplet_document(raw)
        ceg, stats = extract_ceg_with_stats(triplets, doc["answer"], resolve_provider())
        return _document(ceg_document(ceg, stats))

    @app.post("/v1/score")
    async def score(request: Request):
        doc = _parse_object(await request.body())
        _require(doc, "reference", "generated_triplets")
        try:
            reference = as_ceg(doc["reference"])
            generated = as_triplets(doc["generated_triplets"])
        except TypeError as exc:
            raise ParseError(str(exc)) from exc
        response = doc.get("response")
        gold = doc.get("gold")
        if response is not None and not isinstance(response, str):
            raise ParseError('"response" must be a string', field="response")
        if gold is not None and not isinstance(gold, str):
            raise ParseError('"gold" must be a string', field="gold")
        breakdown = crp_reward(
            reference,
            build_graph(generated),
            response,
            gold,
            provider=resolve_provider(),
            weights=config.reward_weights(),
            theta_entity=config.theta_entity,
            theta_relation=config.theta_relation,
        )
        return _document(breakdown_document(breakdown))

    @app.post("/v1/grpo/advantages")
    async def advantages(request: Request):
        doc = _parse_object(await request.body())
        _require(doc, "rewards")
        if not isinstance(doc["rewards"], list):
            raise ParseError('"rewards" must be an array', field="rewards")
        out = group_advantages(doc["rewards"], mode=config.advantage_mode)
        return _document({"format_version": 1, "advantages": out.tolist()})

    return app

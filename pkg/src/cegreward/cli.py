"""Command-line front end.

Every subcommand reads and writes the wire documents from
cegreward.documents, so CLI output is byte-identical to the HTTP service for
the same inputs. Failures print one machine-readable JSON error object to
stderr and exit with a class-stable code:

  1  parse errors, missing files, bad config
  2  precondition violations (empty graph, empty reference, bad group, ...)
  3  cyclic input where a DAG is required (witness cycle in detail)
  4  embedding provider unavailable
"""

from __future__ import annotations

import functools
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import __version__
from .config import EngineConfig, load_config, make_provider, with_overrides
from .documents import (
    breakdown_document,
    ceg_document,
    dump_document,
    extract_ceg_with_stats,
    parse_ceg_document,
    parse_triplet_document,
    reduce_document,
)
from .errors import (
    CyclicGraph,
    ParseError,
    ProviderUnavailable,
    RewardEngineError,
)
from .graph import build_graph, graph_jaccard
from .grpo import GrpoGroup, group_advantages, grpo_objective
from .reward import crp_reward
from .validation import as_ceg, as_triplets


def exit_code_for(err: RewardEngineError) -> int:
    if isinstance(err, ParseError):
        return 1
    if isinstance(err, CyclicGraph):
        return 3
    if isinstance(err, ProviderUnavailable):
        return 4
    return 2


def _fail(code: str, message: str, detail: dict, exit_code: int):
    click.get_binary_stream("stderr").write(
        dump_document({"code": code, "message": message, "detail": detail})
    )
    sys.exit(exit_code)


def _engine_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except RewardEngineError as err:
            _fail(err.code, str(err), err.detail(), exit_code_for(err))
        except FileNotFoundError as err:
            path = err.filename if err.filename else str(err)
            _fail("missing_file", f"file not found: {path}", {"path": str(path)}, 1)

    return wrapper


def _config(ctx: click.Context) -> EngineConfig:
    opts = ctx.obj or {}
    try:
        config = load_config(opts.get("config_path"))
    except (ValueError, RewardEngineError) as err:
        _fail("config_error", str(err), {}, 1)
    return with_overrides(
        config,
        provider_kind=opts.get("provider_kind"),
        theta_entity=opts.get("theta_entity"),
        theta_relation=opts.get("theta_relation"),
    )


def _emit(payload: bytes, output: Path | None) -> None:
    if output is None:
        click.get_binary_stream("stdout").write(payload)
    else:
        output.write_bytes(payload)


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_path", type=click.Path(path_type=Path),
              default=None, help="JSON config overlaying the shipped defaults.")
@click.option("--provider", "provider_kind", type=click.Choice(["http", "hash", "discrete"]),
              default=None, help="Embedding provider override.")
@click.option("--theta-entity", type=float, default=None,
              help="Entity similarity gate override.")
@click.option("--theta-relation", type=float, default=None,
              help="Relation similarity gate override.")
@click.pass_context
def main(ctx, config_path, provider_kind, theta_entity, theta_relation):
    """Evidence-graph extraction, reasoning-reward scoring, and serving."""
    ctx.obj = {
        "config_path": config_path,
        "provider_kind": provider_kind,
        "theta_entity": theta_entity,
        "theta_relation": theta_relation,
    }


@main.command("extract-ceg")
@click.argument("input_path", metavar="TRIPLETS", type=click.Path(path_type=Path))
@click.option("--answer", required=True, help="Gold answer anchoring the conclusion node.")
@click.option("--output", "-o", type=click.Path(path_type=Path), default=None,
              help="Destination file; stdout when omitted.")
@click.pass_context
@_engine_errors
def cli_extract_ceg(ctx, input_path: Path, answer: str, output: Path | None):
    """Extract the critical evidence graph from a triplet document."""
    config = _config(ctx)
    provider = make_provider(config)
    triplets = parse_triplet_document(input_path.read_bytes())
    ceg, stats = extract_ceg_with_stats(triplets, answer, provider)
    _emit(dump_document(ceg_document(ceg, stats)), output)


def _score_one(config: EngineConfig, provider, reference, generated_triplets,
               response: str | None, gold: str | None) -> bytes:
    breakdown = crp_reward(
        reference,
        build_graph(generated_triplets),
        response,
        gold,
        provider=provider,
        weights=config.reward_weights(),
        theta_entity=config.theta_entity,
        theta_relation=config.theta_relation,
    )
    return dump_document(breakdown_document(breakdown))


@main.command("score")
@click.option("--reference", "reference_path", required=True,
              type=click.Path(path_type=Path), help="Reference CEG document.")
@click.option("--generated", "generated_path", required=True,
              type=click.Path(path_type=Path), help="Generated triplet document.")
@click.option("--response", "response_path", type=click.Path(path_type=Path),
              default=None, help="Model response text for answer/format bits.")
@click.option("--gold", default=None, help="Gold answer string.")
@click.option("--output", "-o", type=click.Path(path_type=Path), default=None)
@click.pass_context
@_engine_errors
def cli_score(ctx, reference_path, generated_path, response_path, gold, output):
    """Score a generated graph against a reference CEG."""
    config = _config(ctx)
    provider = make_provider(config)
    reference, _ = parse_ceg_document(reference_path.read_bytes())
    generated = parse_triplet_document(generated_path.read_bytes())
    response = None
    if response_path is not None:
        response = response_path.read_text("utf-8")
    _emit(_score_one(config, provider, reference, generated, response, gold), output)


def _batch_item(line_number: int, line: str):
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {line_number}: malformed JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"line {line_number}: each line must be a JSON object")
    try:
        reference = as_ceg(doc["reference"])
        generated = as_triplets(doc["generated_triplets"])
    except KeyError as exc:
        raise ParseError(f"line {line_number}: missing required field {exc}",
                         field=str(exc.args[0])) from exc
    except TypeError as exc:
        raise ParseError(f"line {line_number}: {exc}") from exc
    return reference, generated, doc.get("response"), doc.get("gold")


@main.command("score-batch")
@click.option("--input", "input_path", required=True, type=click.Path(path_type=Path),
              help="JSONL file, one scoring request per line.")
@click.option("--output", "-o", type=click.Path(path_type=Path), default=None)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True,
              help="Concurrent scoring threads; output order is input order.")
@click.pass_context
@_engine_errors
def cli_score_batch(ctx, input_path: Path, output: Path | None, workers: int):
    """Score many reference/generated pairs, one JSON line each."""
    config = _config(ctx)
    provider = make_provider(config)
    lines = [
        (number, line)
        for number, line in enumerate(input_path.read_text("utf-8").splitlines(), start=1)
        if line.strip()
    ]
    items = [_batch_item(number, line) for number, line in lines]

    def score(item) -> bytes:
        reference, generated, response, gold = item
        return _score_one(config, provider, reference, generated, response, gold)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        chunks = list(pool.map(score, items))
    _emit(b"".join(chunks), output)


@main.command("reduce")
@click.argument("input_path", metavar="TRIPLETS", type=click.Path(path_type=Path))
@click.option("--output", "-o", type=click.Path(path_type=Path), default=None)
@click.pass_context
@_engine_errors
def cli_reduce(ctx, input_path: Path, output: Path | None):
    """Transitively reduce a triplet document."""
    _emit(dump_document(reduce_document(input_path.read_bytes())), output)


@main.command("jaccard")
@click.argument("left", type=click.Path(path_type=Path))
@click.argument("right", type=click.Path(path_type=Path))
@click.pass_context
@_engine_errors
def cli_jaccard(ctx, left: Path, right: Path):
    """Triplet-set Jaccard similarity of two documents."""
    a = build_graph(parse_triplet_document(left.read_bytes()))
    b = build_graph(parse_triplet_document(right.read_bytes()))
    _emit(dump_document({"format_version": 1, "jaccard": graph_jaccard(a, b)}), None)


def _load_json_doc(path: Path) -> dict:
    raw = path.read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object")
    return doc


@main.command("grpo-advantage")
@click.argument("input_path", metavar="GROUP", type=click.Path(path_type=Path))
@click.pass_context
@_engine_errors
def cli_grpo_advantage(ctx, input_path: Path):
    """Group-relative advantages for a {"rewards": [...]} document."""
    config = _config(ctx)
    doc = _load_json_doc(input_path)
    if "rewards" not in doc:
        raise ParseError('missing required field "rewards"', field="rewards")
    if not isinstance(doc["rewards"], list):
        raise ParseError('"rewards" must be an array', field="rewards")
    advantages = group_advantages(doc["rewards"], mode=config.advantage_mode)
    _emit(dump_document({"format_version": 1, "advantages": advantages.tolist()}), None)


@main.command("grpo-objective")
@click.argument("input_path", metavar="GROUP", type=click.Path(path_type=Path))
@click.pass_context
@_engine_errors
def cli_grpo_objective(ctx, input_path: Path):
    """Clipped-surrogate objective for a full rollout-group document."""
    config = _config(ctx)
    doc = _load_json_doc(input_path)
    for name in ("rewards", "token_logps", "old_logps", "ref_logps"):
        if name not in doc:
            raise ParseError(f'missing required field "{name}"', field=name)
    group = GrpoGroup(
        rewards=doc["rewards"],
        token_logps=doc["token_logps"],
        old_logps=doc["old_logps"],
        ref_logps=doc["ref_logps"],
        epsilon_clip=doc.get("epsilon_clip", config.epsilon_clip),
        beta=doc.get("beta", config.beta),
    )
    result = grpo_objective(
        group, kl_estimator=config.kl_estimator, advantage_mode=config.advantage_mode
    )
    _emit(
        dump_document(
            {
                "format_version": 1,
                "objective": result.objective,
                "advantages": list(result.advantages),
                "per_output": list(result.per_output),
                "ratios": [list(r) for r in result.ratios],
                "surrogates": [list(s) for s in result.surrogates],
                "kl_terms": [list(k) for k in result.kl_terms],
            }
        ),
        None,
    )


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.pass_context
@_engine_errors
def cli_serve(ctx, host: str, port: int):
    """Run the HTTP scoring service."""
    import uvicorn

    from .service import create_app

    config = _config(ctx)
    uvicorn.run(create_app(config), host=host, port=port)


if __name__ == "__main__":
    main()

"""Engine configuration: shipped defaults, file overlay, env overrides.

Resolution order, lowest to highest precedence:
  1. the packaged default_config.json
  2. an explicit config file (--config / load_config(path=...))
  3. process environment (EMBED_URL, EMBED_MODEL, EMBED_TIMEOUT_MS,
     CEG_CACHE_DIR)

Every knob the scoring and optimization layers read lives here so that the
CLI and the service resolve identical behavior from identical inputs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Mapping

from .embedding import (
    CachedProvider,
    DiscreteMatchProvider,
    EmbeddingProvider,
    HashEmbeddingProvider,
    HttpEmbeddingProvider,
)
from .reward import RewardWeights

_PROVIDER_KINDS = ("hash", "discrete", "http")


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "hash"
    dimension: int = 256
    url: str | None = None
    model: str | None = None
    timeout_ms: int = 30000
    cache_dir: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in _PROVIDER_KINDS:
            raise ValueError(f"provider.kind must be one of {_PROVIDER_KINDS}, got {self.kind!r}")
        if not isinstance(self.dimension, int) or self.dimension < 8:
            raise ValueError("provider.dimension must be an integer >= 8")
        if not isinstance(self.timeout_ms, int) or self.timeout_ms <= 0:
            raise ValueError("provider.timeout_ms must be a positive integer")


@dataclass(frozen=True)
class EngineConfig:
    theta_entity: float = 0.85
    theta_relation: float = 0.80
    lambda_node: float = 0.5
    lambda_struct: float = 0.3
    lambda_chain: float = 0.2
    w_reason: float = 0.3
    w_answer: float = 0.6
    w_format: float = 0.1
    epsilon_clip: float = 0.2
    beta: float = 0.001
    kl_estimator: str = "k3"
    advantage_mode: str = "standardized"
    provider: ProviderConfig = field(default_factory=ProviderConfig)

    def __post_init__(self) -> None:
        for name in ("theta_entity", "theta_relation"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
        self.reward_weights()  # weight triples validated by construction
        if not 0.0 < self.epsilon_clip < 1.0:
            raise ValueError("epsilon_clip must lie in (0, 1)")
        if self.beta < 0.0:
            raise ValueError("beta must be nonnegative")
        if self.kl_estimator not in ("k1", "k2", "k3"):
            raise ValueError(f"kl_estimator must be k1, k2, or k3, got {self.kl_estimator!r}")
        if self.advantage_mode not in ("standardized", "centered"):
            raise ValueError(f"advantage_mode must be standardized or centered, got {self.advantage_mode!r}")

    def reward_weights(self) -> RewardWeights:
        return RewardWeights(
            lambda_node=self.lambda_node,
            lambda_struct=self.lambda_struct,
            lambda_chain=self.lambda_chain,
            w_reason=self.w_reason,
            w_answer=self.w_answer,
            w_format=self.w_format,
        )


def _from_mapping(data: Mapping) -> EngineConfig:
    if not isinstance(data, Mapping):
        raise ValueError("config document must be a JSON object")
    known = {f.name for f in fields(EngineConfig)}
    stray = sorted(set(data) - known)
    if stray:
        raise ValueError(f"unknown config keys: {', '.join(stray)}")
    kwargs = dict(data)
    if "provider" in kwargs:
        pdata = kwargs["provider"]
        if not isinstance(pdata, Mapping):
            raise ValueError("provider must be a JSON object")
        pknown = {f.name for f in fields(ProviderConfig)}
        pstray = sorted(set(pdata) - pknown)
        if pstray:
            raise ValueError(f"unknown provider config keys: {', '.join(pstray)}")
        kwargs["provider"] = ProviderConfig(**pdata)
    return EngineConfig(**kwargs)


def _default_mapping() -> dict:
    text = resources.files("cegreward").joinpath("data/default_config.json").read_text("utf-8")
    return json.loads(text)


def _merge(base: dict, overlay: Mapping) -> dict:
    out = dict(base)
    for key, value in overlay.items():
        if key == "provider" and isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = {**out[key], **value}
        else:
            out[key] = value
    return out


def load_config(path: str | Path | None = None, env: Mapping[str, str] | None = None) -> EngineConfig:
    """Shipped defaults, overlaid by an optional file, overlaid by env vars."""
    env = os.environ if env is None else env
    data = _default_mapping()
    if path is not None:
        raw = Path(path).read_bytes()
        try:
            overlay = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(overlay, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        data = _merge(data, overlay)

    provider = dict(data.get("provider") or {})
    if env.get("EMBED_URL"):
        provider["url"] = env["EMBED_URL"]
    if env.get("EMBED_MODEL"):
        provider["model"] = env["EMBED_MODEL"]
    if env.get("EMBED_TIMEOUT_MS"):
        try:
            provider["timeout_ms"] = int(env["EMBED_TIMEOUT_MS"])
        except ValueError as exc:
            raise ValueError("EMBED_TIMEOUT_MS must be an integer") from exc
    if env.get("CEG_CACHE_DIR"):
        provider["cache_dir"] = env["CEG_CACHE_DIR"]
    data["provider"] = provider
    return _from_mapping(data)


def make_provider(config: EngineConfig, env: Mapping[str, str] | None = None) -> EmbeddingProvider:
    """Build the embedding provider the config names.

    The discrete provider is exact string matching and is never wrapped in a
    cache; the hash provider is pure and cheap, cached only when a disk cache
    directory is configured; the http provider always gets a read-through
    cache so repeated scoring does not refetch.
    """
    pc = config.provider
    if pc.kind == "discrete":
        return DiscreteMatchProvider()
    if pc.kind == "hash":
        inner: EmbeddingProvider = HashEmbeddingProvider(dimension=pc.dimension)
        if pc.cache_dir:
            return CachedProvider(inner, cache_dir=pc.cache_dir)
        return inner
    env = os.environ if env is None else env
    if pc.url:
        inner = HttpEmbeddingProvider(
            url=pc.url,
            model=pc.model or "default",
            timeout_ms=pc.timeout_ms,
        )
    else:
        inner = HttpEmbeddingProvider.from_env(env)
    return CachedProvider(inner, cache_dir=pc.cache_dir)


def with_overrides(
    config: EngineConfig,
    *,
    provider_kind: str | None = None,
    theta_entity: float | None = None,
    theta_relation: float | None = None,
) -> EngineConfig:
    """Apply CLI-level flag overrides, highest precedence of all."""
    if provider_kind is not None:
        config = replace(config, provider=replace(config.provider, kind=provider_kind))
    if theta_entity is not None:
        config = replace(config, theta_entity=theta_entity)
    if theta_relation is not None:
        config = replace(config, theta_relation=theta_relation)
    return config

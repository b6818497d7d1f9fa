"""Group-relative policy optimization kernel.

Pure numerics, no gradients: advantages, probability ratios, the clipped
surrogate, a per-token KL estimator, and the aggregated objective. External
trainers own forward passes and optimizer state; this module only evaluates
the loss surface pointwise so it can be unit-tested and served cheaply.

Summation is sequential (math.fsum over fixed orderings), so repeated calls
with identical inputs are bitwise stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGroup, InvalidReward, RatioOverflow

# zero-variance guard for reward standardization
_ADV_EPS = 1e-8

_ADVANTAGE_MODES = ("standardized", "centered")
_KL_ESTIMATORS = ("k1", "k2", "k3")


def _as_logp_matrix(name: str, rows) -> tuple[tuple[float, ...], ...]:
    try:
        out = tuple(tuple(float(x) for x in row) for row in rows)
    except (TypeError, ValueError) as exc:
        raise InvalidGroup(f"{name} must be a sequence of float sequences") from exc
    for row in out:
        if not row:
            raise InvalidGroup(f"{name} has an empty per-output sequence")
        for x in row:
            if not math.isfinite(x) or x > 0.0:
                raise InvalidGroup(f"{name} entries must be finite log-probabilities <= 0")
    return out


@dataclass(frozen=True)
class GrpoGroup:
    """One sampled group: G rewards plus per-token log-probs for three policies.

    Token sequences are ragged (outputs differ in length), so the log-prob
    fields are tuples of tuples rather than rectangular arrays.
    """

    rewards: tuple[float, ...]
    token_logps: tuple[tuple[float, ...], ...]
    old_logps: tuple[tuple[float, ...], ...]
    ref_logps: tuple[tuple[float, ...], ...]
    epsilon_clip: float = 0.2
    beta: float = 0.001

    def __post_init__(self) -> None:
        rewards = tuple(float(r) for r in self.rewards)
        if not rewards:
            raise InvalidGroup("group needs at least one sampled output")
        for r in rewards:
            if not math.isfinite(r):
                raise InvalidReward("rewards must be finite")
        object.__setattr__(self, "rewards", rewards)
        for name in ("token_logps", "old_logps", "ref_logps"):
            object.__setattr__(self, name, _as_logp_matrix(name, getattr(self, name)))
        shapes = {name: tuple(len(row) for row in getattr(self, name))
                  for name in ("token_logps", "old_logps", "ref_logps")}
        if len(set(shapes.values())) != 1:
            raise InvalidGroup(f"per-output lengths differ across policies: {shapes}")
        if len(self.token_logps) != len(rewards):
            raise InvalidGroup(
                f"{len(rewards)} rewards but {len(self.token_logps)} outputs"
            )
        if not (math.isfinite(self.epsilon_clip) and self.epsilon_clip > 0.0):
            raise InvalidGroup("epsilon_clip must be positive")
        if not (math.isfinite(self.beta) and self.beta >= 0.0):
            raise InvalidGroup("beta must be nonnegative")

    @property
    def size(self) -> int:
        return len(self.rewards)


def group_advantages(rewards, mode: str = "standardized") -> np.ndarray:
    """Per-output advantages relative to the group's own reward statistics.

    standardized: (r - mean) / (population std + 1e-8), the zero-variance
    guard making a constant-reward or single-output group score all zeros.
    centered: r - mean, no rescaling.
    """
    if mode not in _ADVANTAGE_MODES:
        raise ValueError(f"mode must be one of {_ADVANTAGE_MODES}, got {mode!r}")
    arr = np.asarray(rewards, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidGroup("rewards must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise InvalidReward("rewards must be finite")
    centered = arr - arr.mean()
    if mode == "centered":
        return centered
    return centered / (arr.std() + _ADV_EPS)


def prob_ratio(logp_new, logp_old):
    """exp(logp_new - logp_old), elementwise; never clamped here."""
    new = np.asarray(logp_new, dtype=np.float64)
    old = np.asarray(logp_old, dtype=np.float64)
    with np.errstate(over="ignore"):
        ratio = np.exp(new - old)
    if not np.all(np.isfinite(ratio)):
        raise RatioOverflow("probability ratio overflowed to a non-finite value")
    return float(ratio) if ratio.ndim == 0 else ratio


def clipped_surrogate(ratio, advantage, epsilon: float = 0.2):
    """min(ratio * A, clip(ratio, 1-eps, 1+eps) * A), the pessimistic branch."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    r = np.asarray(ratio, dtype=np.float64)
    a = np.asarray(advantage, dtype=np.float64)
    out = np.minimum(r * a, np.clip(r, 1.0 - epsilon, 1.0 + epsilon) * a)
    return float(out) if out.ndim == 0 else out


def kl_penalty(logp_policy, logp_ref, estimator: str = "k3"):
    """Per-token KL(policy || ref) estimate from two log-probabilities.

    With rho = exp(logp_ref - logp_policy):
      k1: -log rho (unbiased, may be negative per token)
      k2: (log rho)^2 / 2
      k3: rho - log rho - 1 (nonnegative, low variance; the default)
    """
    if estimator not in _KL_ESTIMATORS:
        raise ValueError(f"estimator must be one of {_KL_ESTIMATORS}, got {estimator!r}")
    d = np.asarray(logp_ref, dtype=np.float64) - np.asarray(logp_policy, dtype=np.float64)
    if estimator == "k1":
        out = -d
    elif estimator == "k2":
        out = d * d / 2.0
    else:
        with np.errstate(over="ignore"):
            rho = np.exp(d)
        if not np.all(np.isfinite(rho)):
            raise RatioOverflow("KL ratio overflowed to a non-finite value")
        # clamp: rho - d - 1 >= 0 analytically, but rounding can dip below
        out = np.maximum(rho - d - 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GrpoResult:
    """Scalar objective plus the per-token pieces trainers need to audit it."""

    objective: float
    advantages: tuple[float, ...]
    ratios: tuple[tuple[float, ...], ...] = field(repr=False)
    surrogates: tuple[tuple[float, ...], ...] = field(repr=False)
    kl_terms: tuple[tuple[float, ...], ...] = field(repr=False)
    per_output: tuple[float, ...]


def grpo_objective(
    group: GrpoGroup,
    *,
    kl_estimator: str = "k3",
    advantage_mode: str = "standardized",
) -> GrpoResult:
    """(1/G) sum_i (1/|o_i|) sum_t (surrogate - beta * kl), token level.

    Each output's advantage broadcasts to all of its tokens. The per-output
    token means and the group mean both use fsum over the natural ordering.
    """
    advantages = group_advantages(group.rewards, mode=advantage_mode)
    ratios: list[tuple[float, ...]] = []
    surrogates: list[tuple[float, ...]] = []
    kl_terms: list[tuple[float, ...]] = []
    per_output: list[float] = []
    for i in range(group.size):
        new = np.asarray(group.token_logps[i])
        ratio = prob_ratio(new, np.asarray(group.old_logps[i]))
        surr = clipped_surrogate(ratio, advantages[i], group.epsilon_clip)
        kl = kl_penalty(new, np.asarray(group.ref_logps[i]), estimator=kl_estimator)
        term = surr - group.beta * kl
        ratios.append(tuple(np.atleast_1d(ratio).tolist()))
        surrogates.append(tuple(np.atleast_1d(surr).tolist()))
        kl_terms.append(tuple(np.atleast_1d(kl).tolist()))
        per_output.append(math.fsum(np.atleast_1d(term).tolist()) / len(group.token_logps[i]))
    objective = math.fsum(per_output) / group.size
    return GrpoResult(
        objective=objective,
        advantages=tuple(advantages.tolist()),
        ratios=tuple(ratios),
        surrogates=tuple(surrogates),
        kl_terms=tuple(kl_terms),
        per_output=tuple(per_output),
    )

"""Factored linear-softmax policy.

Three heads over named weights:
  * action head (``act::<feature>``): scores every candidate action;
  * status head (``status::<feature>``): CONTINUE vs FINISH for the chosen action;
  * plan head (``plan::*``): autoregressive scoring over a plan-step
    vocabulary with an end token.

Parameters are immutable values during inference; training constructs new
ones. Checkpoints are JSON weight tables keyed by feature name; loading a
checkpoint with unknown names is an error.
"""

from __future__ import annotations

import json
import math
import os
import random
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import CheckpointError
from ..env_sim import ActionCall, STATUS_CONTINUE, STATUS_FINISH
from ..textutil import token_overlap
from .candidates import CandidateAction, enumerate_candidates
from .features import FEATURE_NAMES, STATUS_FEATURES, featurize, status_features
from .state import AgentState

__all__ = [
    "END_TOKEN",
    "ModelParams",
    "ActionDistribution",
    "softmax",
    "action_distribution",
    "select_action",
    "plan_scores",
    "generate_plan",
    "build_plan_vocab",
]

END_TOKEN = "<END>"
MAX_PLAN_STEPS = 20


def softmax(scores: list[float]) -> tuple[list[float], list[float]]:
    """Returns (probabilities, log-probabilities), numerically stable."""
    m = max(scores)
    exps = [math.exp(s - m) for s in scores]
    total = sum(exps)
    log_total = math.log(total)
    probs = [e / total for e in exps]
    log_probs = [(s - m) - log_total for s in scores]
    return probs, log_probs


@dataclass(frozen=True)
class ModelParams:
    weights: dict[str, float] = field(default_factory=dict)
    plan_vocab: tuple[str, ...] = ()

    @classmethod
    def zeros(cls, plan_vocab: tuple[str, ...] = ()) -> "ModelParams":
        vocab = tuple(plan_vocab)
        if vocab and END_TOKEN not in vocab:
            vocab = vocab + (END_TOKEN,)
        weights = {f"act::{name}": 0.0 for name in FEATURE_NAMES}
        weights.update({f"status::{name}": 0.0 for name in STATUS_FEATURES})
        weights.update({"plan::overlap": 0.0, "plan::used": 0.0})
        for v in vocab:
            weights[f"plan::bias::{v}"] = 0.0
        return cls(weights=weights, plan_vocab=vocab)

    def get(self, name: str) -> float:
        return self.weights.get(name, 0.0)

    def replaced(self, updates: dict[str, float]) -> "ModelParams":
        merged = dict(self.weights)
        merged.update(updates)
        return ModelParams(weights=merged, plan_vocab=self.plan_vocab)

    def scaled(self, factor: float) -> "ModelParams":
        return ModelParams(
            weights={k: v * factor for k, v in self.weights.items()},
            plan_vocab=self.plan_vocab,
        )

    def validate(self) -> None:
        vocab = set(self.plan_vocab)
        for name, value in self.weights.items():
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise CheckpointError(f"weight {name!r} is not finite: {value!r}")
            if not _known_feature(name, vocab):
                raise CheckpointError(f"unknown feature name {name!r}")

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "format_version": 1,
            "kind": "policy",
            "plan_vocab": list(self.plan_vocab),
            "weights": dict(sorted(self.weights.items())),
        }
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | Path) -> "ModelParams":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
        if payload.get("kind") != "policy":
            raise CheckpointError(f"checkpoint {path} is not a policy checkpoint")
        params = cls(
            weights={k: float(v) for k, v in payload.get("weights", {}).items()},
            plan_vocab=tuple(payload.get("plan_vocab", ())),
        )
        params.validate()
        return params


def _known_feature(name: str, vocab: set[str]) -> bool:
    if name.startswith("act::"):
        return name[len("act::") :] in FEATURE_NAMES
    if name.startswith("status::"):
        return name[len("status::") :] in STATUS_FEATURES
    if name in ("plan::overlap", "plan::used"):
        return True
    if name.startswith("plan::bias::"):
        return name[len("plan::bias::") :] in vocab
    if name.startswith("plan::pos::"):
        rest = name[len("plan::pos::") :]
        pos_str, sep, step = rest.partition("::")
        return bool(sep) and pos_str.isdigit() and step in vocab
    return False


@dataclass(frozen=True)
class ActionDistribution:
    candidates: tuple[CandidateAction, ...]
    scores: tuple[float, ...]
    probs: tuple[float, ...]
    log_probs: tuple[float, ...]
    finish_prob: float  # status head: P(FINISH) for a non-finish action

    def prob_of(self, index: int) -> float:
        return self.probs[index]


def _candidate_score(state: AgentState, candidate: CandidateAction, params: ModelParams) -> float:
    vector = featurize(state, candidate)
    return sum(params.get(f"act::{name}") * x for name, x in zip(FEATURE_NAMES, vector))


def action_distribution(
    state: AgentState,
    params: ModelParams,
    candidates: list[CandidateAction] | None = None,
) -> ActionDistribution:
    if candidates is None:
        candidates = enumerate_candidates(state)
    scores = [_candidate_score(state, c, params) for c in candidates]
    probs, log_probs = softmax(scores)
    logit = sum(
        params.get(f"status::{name}") * x
        for name, x in zip(STATUS_FEATURES, status_features(state))
    )
    finish_prob = 1.0 / (1.0 + math.exp(-logit))
    return ActionDistribution(
        candidates=tuple(candidates),
        scores=tuple(scores),
        probs=tuple(probs),
        log_probs=tuple(log_probs),
        finish_prob=finish_prob,
    )


def select_action(
    state: AgentState,
    params: ModelParams,
    mode: str = "argmax",
    seed: int | None = None,
) -> ActionCall:
    dist = action_distribution(state, params)
    if mode == "argmax":
        best = max(
            range(len(dist.candidates)),
            key=lambda i: (dist.scores[i], _neg_sort_key(dist.candidates[i])),
        )
        finish = dist.finish_prob > 0.5
    elif mode == "sample":
        rng = random.Random(seed)
        r = rng.random()
        cumulative = 0.0
        best = len(dist.candidates) - 1
        for i, p in enumerate(dist.probs):
            cumulative += p
            if r < cumulative:
                best = i
                break
        finish = rng.random() < dist.finish_prob
    else:
        raise ValueError(f"unknown mode {mode!r}")
    candidate = dist.candidates[best]
    if candidate.is_finish:
        return candidate.to_action_call()
    return candidate.to_action_call(STATUS_FINISH if finish else STATUS_CONTINUE)


class _NegKey:
    """Inverts comparison so max() breaks score ties by the *lowest* sort key."""

    __slots__ = ("key",)

    def __init__(self, key: tuple):
        self.key = key

    def __lt__(self, other: "_NegKey") -> bool:
        return self.key > other.key

    def __eq__(self, other: object) -> bool:
        return isinstance(other, _NegKey) and self.key == other.key


def _neg_sort_key(candidate: CandidateAction) -> _NegKey:
    return _NegKey(candidate.sort_key())


# --- plan head ----------------------------------------------------------------

def build_plan_vocab(plans: list[list[str]]) -> tuple[str, ...]:
    steps = sorted({step for plan in plans for step in plan})
    return tuple(steps) + (END_TOKEN,)


def plan_scores(
    task: str,
    params: ModelParams,
    position: int,
    used: set[str],
    vocab: tuple[str, ...] | None = None,
) -> list[float]:
    vocab = vocab if vocab is not None else params.plan_vocab
    scores = []
    for v in vocab:
        score = params.get(f"plan::bias::{v}")
        score += params.get(f"plan::pos::{position}::{v}")
        if v != END_TOKEN:
            score += params.get("plan::overlap") * token_overlap(v, task)
            if v in used:
                score += params.get("plan::used")
        scores.append(score)
    return scores


def generate_plan(task: str, params: ModelParams, max_steps: int = MAX_PLAN_STEPS) -> list[str]:
    """Greedy autoregressive decode; the end token is barred at position 1 so
    every generated plan has at least one step."""
    if not params.plan_vocab:
        return []
    plan: list[str] = []
    used: set[str] = set()
    for position in range(1, max_steps + 1):
        scores = plan_scores(task, params, position, used)
        best, best_score = None, None
        for v, score in zip(params.plan_vocab, scores):
            if v == END_TOKEN and position == 1:
                continue
            if best_score is None or score > best_score:
                best, best_score = v, score
        if best == END_TOKEN or best is None:
            break
        plan.append(best)
        used.add(best)
    return plan

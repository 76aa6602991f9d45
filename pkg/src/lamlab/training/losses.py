"""Differentiable objectives with exact analytic gradients.

All heads are linear in their named weights, so cross-entropy gradients have
the closed form sum((p - y) * x) and match finite differences to numerical
precision. Gradients come back as name -> value dicts over the weights the
loss touches.
"""

from __future__ import annotations

import math
import random
from typing import Sequence

from ..errors import EmptyCorpus, ValidationFailure
from ..env_sim import ActionCall
from ..policy import AgentState, enumerate_candidates, featurize, match_expert, status_features
from ..policy.features import FEATURE_NAMES, STATUS_FEATURES
from ..policy.model import END_TOKEN, ModelParams, plan_scores, softmax
from ..textutil import token_overlap
from .configs import SftConfig

__all__ = [
    "sft_plan_loss",
    "imitation_loss",
    "status_loss",
    "ImitationStep",
    "train_params",
    "learning_rate_at",
]

ImitationStep = tuple[AgentState, ActionCall]

# Plans in records.


def _plan_targets(plan: Sequence[str]) -> list[str]:
    return list(plan) + [END_TOKEN]


def sft_plan_loss(
    params: ModelParams, batch: Sequence, step_mean: bool = True
) -> tuple[float, dict[str, float]]:
    """Mean cross-entropy over plan-step targets (including the end token).

    Batch items carry ``task`` and ``plan`` attributes. With step_mean
    (default) every target counts equally; otherwise records are weighted
    equally regardless of plan length.
    """
    if not batch:
        raise EmptyCorpus("sft_plan_loss needs a non-empty batch")
    vocab = params.plan_vocab
    if not vocab:
        raise ValidationFailure("model has no plan vocabulary")
    index = {v: i for i, v in enumerate(vocab)}

    total_loss = 0.0
    grads: dict[str, float] = {}
    contributions: list[tuple[float, float, dict[str, float]]] = []

    for record in batch:
        targets = _plan_targets(record.plan)
        record_loss = 0.0
        record_grads: dict[str, float] = {}
        used: set[str] = set()
        for position, target in enumerate(targets, 1):
            if target not in index:
                raise ValidationFailure(f"plan step {target!r} is not in the vocabulary")
            scores = plan_scores(record.task, params, position, used, vocab)
            probs, log_probs = softmax(scores)
            record_loss += -log_probs[index[target]]
            for i, v in enumerate(vocab):
                coef = probs[i] - (1.0 if v == target else 0.0)
                if coef == 0.0:
                    continue
                _accumulate(record_grads, f"plan::bias::{v}", coef)
                _accumulate(record_grads, f"plan::pos::{position}::{v}", coef)
                if v != END_TOKEN:
                    _accumulate(
                        record_grads, "plan::overlap", coef * token_overlap(v, record.task)
                    )
                    if v in used:
                        _accumulate(record_grads, "plan::used", coef)
            if target != END_TOKEN:
                used.add(target)
        contributions.append((record_loss, float(len(targets)), record_grads))

    if step_mean:
        total_targets = sum(n for _, n, _ in contributions)
        for record_loss, _, record_grads in contributions:
            total_loss += record_loss / total_targets
            for name, g in record_grads.items():
                _accumulate(grads, name, g / total_targets)
    else:
        n_records = len(contributions)
        for record_loss, n_targets, record_grads in contributions:
            total_loss += record_loss / (n_targets * n_records)
            for name, g in record_grads.items():
                _accumulate(grads, name, g / (n_targets * n_records))
    return total_loss, grads


def imitation_loss(
    params: ModelParams,
    trajectories: Sequence[Sequence[ImitationStep]],
    step_mean: bool = False,
) -> tuple[float, dict[str, float]]:
    """Cross-entropy between the action distribution and the expert action,
    averaged per trajectory then across trajectories (or globally over steps
    with step_mean)."""
    if not trajectories or not any(len(t) for t in trajectories):
        raise EmptyCorpus("imitation_loss needs at least one step")
    total_steps = sum(len(t) for t in trajectories)
    n_traj = len(trajectories)

    loss = 0.0
    grads: dict[str, float] = {}
    for trajectory in trajectories:
        if not trajectory:
            continue
        weight = 1.0 / total_steps if step_mean else 1.0 / (n_traj * len(trajectory))
        for state, expert in trajectory:
            candidates = enumerate_candidates(state)
            expert_idx = match_expert(candidates, expert)
            vectors = [featurize(state, c) for c in candidates]
            scores = [
                sum(params.get(f"act::{n}") * x for n, x in zip(FEATURE_NAMES, vec))
                for vec in vectors
            ]
            probs, log_probs = softmax(scores)
            loss += -log_probs[expert_idx] * weight
            for i, vec in enumerate(vectors):
                coef = (probs[i] - (1.0 if i == expert_idx else 0.0)) * weight
                if coef == 0.0:
                    continue
                for name, x in zip(FEATURE_NAMES, vec):
                    if x != 0.0:
                        _accumulate(grads, f"act::{name}", coef * x)
    return loss, grads


def status_loss(
    params: ModelParams, steps: Sequence[tuple[AgentState, str]]
) -> tuple[float, dict[str, float]]:
    """Binary cross-entropy of the status head against CONTINUE/FINISH labels."""
    if not steps:
        raise EmptyCorpus("status_loss needs at least one step")
    loss = 0.0
    grads: dict[str, float] = {}
    n = len(steps)
    for state, status in steps:
        features = status_features(state)
        logit = sum(
            params.get(f"status::{name}") * x for name, x in zip(STATUS_FEATURES, features)
        )
        target = 1.0 if status == "FINISH" else 0.0
        prob = 1.0 / (1.0 + math.exp(-logit))
        eps = 1e-12
        loss += -(target * math.log(prob + eps) + (1 - target) * math.log(1 - prob + eps)) / n
        coef = (prob - target) / n
        for name, x in zip(STATUS_FEATURES, features):
            if x != 0.0:
                _accumulate(grads, f"status::{name}", coef * x)
    return loss, grads


def _accumulate(grads: dict[str, float], name: str, value: float) -> None:
    grads[name] = grads.get(name, 0.0) + value


# --- generic full/mini-batch descent ------------------------------------------

def learning_rate_at(step: int, total_steps: int, config: SftConfig) -> float:
    """Warmup then cosine decay (or constant after warmup)."""
    if config.warmup_steps > 0 and step < config.warmup_steps:
        return config.learning_rate * (step + 1) / config.warmup_steps
    if config.schedule == "constant" or total_steps <= config.warmup_steps:
        return config.learning_rate
    span = total_steps - config.warmup_steps
    t = (step - config.warmup_steps) / span
    return config.learning_rate * 0.5 * (1.0 + math.cos(math.pi * min(t, 1.0)))


def train_params(
    params: ModelParams,
    examples: Sequence,
    loss_fn,
    config: SftConfig,
    seed: int = 0,
) -> ModelParams:
    """Minibatch gradient descent on loss_fn(params, batch) -> (loss, grads)."""
    if not examples:
        raise EmptyCorpus("nothing to train on")
    rng = random.Random(seed)
    order = list(range(len(examples)))
    batches_per_epoch = max(1, math.ceil(len(examples) / config.batch_size))
    total_steps = batches_per_epoch * config.epochs
    step = 0
    for _ in range(config.epochs):
        rng.shuffle(order)
        for start in range(0, len(order), config.batch_size):
            batch = [examples[i] for i in order[start : start + config.batch_size]]
            _, grads = loss_fn(params, batch)
            lr = learning_rate_at(step, total_steps, config)
            params = params.replaced(
                {name: params.get(name) - lr * g for name, g in grads.items()}
            )
            step += 1
    return params

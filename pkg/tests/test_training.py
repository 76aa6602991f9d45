"""Training: losses with gradient checks, reward model, PPO, phases."""

import math
import random

import pytest

from lamlab.dataflow import judge_trajectory
from lamlab.env_sim import ActionCall, list_controls, load_template
from lamlab.errors import (
    DegenerateRatio,
    EmptyCorpus,
    MissingPredecessor,
    StepActionNotInCandidateSet,
)
from lamlab.oracle import MockOracle
from lamlab.policy import AgentState, ModelParams, build_plan_vocab
from lamlab.training import (
    FailedTask,
    PpoConfig,
    RmConfig,
    RewardModelParams,
    RewardedStep,
    clipped_term,
    compute_advantage,
    imitation_loss,
    ppo_update,
    rm_mse_loss,
    self_boost,
    sft_plan_loss,
    status_loss,
    surrogate_value,
    train_reward_model,
)
from lamlab.training.reward import RM_FEATURE_NAMES


class PlanRec:
    def __init__(self, task, plan):
        self.task = task
        self.plan = tuple(plan)


def make_state(task, step_id=1, previous_actions=(), previous_plan=(), template="plain_text"):
    snapshot = load_template(template)
    return AgentState(
        task=task,
        step_id=step_id,
        controls=tuple(list_controls(snapshot)),
        previous_actions=tuple(previous_actions),
        previous_plan=tuple(previous_plan),
    )


def random_params(rng, vocab=()):
    params = ModelParams.zeros(plan_vocab=vocab)
    return params.replaced({name: rng.uniform(-0.5, 0.5) for name in params.weights})


def finite_difference_check(loss_fn, params, grads, h=1e-5, tol=1e-4):
    """Central finite differences against the analytic gradient."""
    checked = 0
    for name, g in grads.items():
        plus = loss_fn(params.replaced({name: params.get(name) + h}))
        minus = loss_fn(params.replaced({name: params.get(name) - h}))
        numeric = (plus - minus) / (2 * h)
        denom = max(abs(g), abs(numeric), 1e-8)
        assert abs(g - numeric) / denom < tol, f"{name}: analytic {g} vs numeric {numeric}"
        checked += 1
    assert checked > 0


# --- sft_plan_loss ------------------------------------------------------------


def test_sft_uniform_model_gives_log_vocab():
    vocab = build_plan_vocab([[f"Step {i}." for i in range(7)]])  # 7 steps + END = 8
    assert len(vocab) == 8
    params = ModelParams.zeros(plan_vocab=vocab)
    loss, _ = sft_plan_loss(params, [PlanRec("task", ["Step 0."])])
    assert abs(loss - math.log(8)) < 1e-12


def test_sft_perfect_model_gives_zero_loss():
    vocab = build_plan_vocab([["Step A.", "Step B."]])
    params = ModelParams.zeros(plan_vocab=vocab).replaced(
        {
            "plan::pos::1::Step A.": 200.0,
            "plan::pos::2::<END>": 200.0,
        }
    )
    loss, _ = sft_plan_loss(params, [PlanRec("task", ["Step A."])])
    assert loss < 1e-9


def test_sft_gradient_matches_finite_differences():
    rng = random.Random(0)
    vocab = build_plan_vocab([["Alpha step.", "Beta step.", "Gamma step."]])
    for trial in range(5):
        params = random_params(random.Random(trial), vocab)
        batch = [
            PlanRec("do the alpha thing", ["Alpha step.", "Beta step."]),
            PlanRec("try gamma now", ["Gamma step."]),
        ]
        loss, grads = sft_plan_loss(params, batch)
        finite_difference_check(lambda p: sft_plan_loss(p, batch)[0], params, grads)


# --- imitation_loss ------------------------------------------------------------


def expert_step(task='Highlight the text "Test For Fun" in yellow in the document.'):
    state = make_state(task)
    return state, ActionCall(function="select_text", args={"text": "Test For Fun"})


def test_imitation_uniform_is_log_candidate_count():
    from lamlab.policy import enumerate_candidates

    state, expert = expert_step()
    n = len(enumerate_candidates(state))
    loss, _ = imitation_loss(ModelParams.zeros(), [[(state, expert)]])
    assert abs(loss - math.log(n)) < 1e-12


def test_imitation_uniform_over_exactly_four_candidates_is_ln4():
    from lamlab.policy import enumerate_candidates

    # No controls and no extractable args: only the three always-available
    # target-free functions plus the FINISH pseudo-candidate remain.
    state = AgentState(task="tidy up the open file", step_id=1, controls=())
    candidates = enumerate_candidates(state)
    assert len(candidates) == 4
    expert = ActionCall(function="insert_page_border", args={"style": "box"})
    loss, _ = imitation_loss(ModelParams.zeros(), [[(state, expert)]])
    assert abs(loss - math.log(4)) < 1e-12


def test_imitation_expert_absent_raises():
    state, _ = expert_step()
    ghost = ActionCall(function="click_input", control_text="Ghost",
                       args={"button": "left", "double": False})
    with pytest.raises(StepActionNotInCandidateSet):
        imitation_loss(ModelParams.zeros(), [[(state, ghost)]])


def test_imitation_gradient_matches_finite_differences():
    for trial in range(5):
        rng = random.Random(100 + trial)
        params = random_params(rng)
        sel = (ActionCall(function="select_text", args={"text": "Test For Fun"}), {"ok": True})
        trajectories = [
            [expert_step()],
            [
                (
                    make_state(
                        'Make the text "Test For Fun" bold in the document.',
                        step_id=2,
                        previous_actions=(sel,),
                        previous_plan=("Toggle bold formatting on the selection.",),
                    ),
                    ActionCall(function="toggle_bold", args={}),
                )
            ],
        ]
        loss, grads = imitation_loss(params, trajectories)
        finite_difference_check(lambda p: imitation_loss(p, trajectories)[0], params, grads)


def test_imitation_mean_of_means_vs_step_mean():
    state, expert = expert_step()
    one = [(state, expert)]
    two = [(state, expert), (state, expert)]
    params = ModelParams.zeros()
    loss_mm, _ = imitation_loss(params, [one, two])
    loss_sm, _ = imitation_loss(params, [one, two], step_mean=True)
    # Same per-step CE here, so the two weightings agree; both are finite.
    assert abs(loss_mm - loss_sm) < 1e-12


def test_status_loss_gradient():
    state, _ = expert_step()
    steps = [(state, "CONTINUE"), (make_state("task two", step_id=3), "FINISH")]
    for trial in range(3):
        params = random_params(random.Random(trial))
        loss, grads = status_loss(params, steps)
        finite_difference_check(lambda p: status_loss(p, steps)[0], params, grads)


# --- loss descent property --------------------------------------------------------


def test_fifty_full_batch_steps_strictly_decrease_losses():
    rng = random.Random(2)
    vocab = build_plan_vocab([["One step.", "Two step."], ["Three step."]])
    batch = [
        PlanRec("first task text", ["One step.", "Two step."]),
        PlanRec("second task text", ["Three step."]),
        PlanRec("third thing to do", ["Two step."]),
        PlanRec("fourth task entry", ["One step."]),
        PlanRec("fifth task item", ["Three step.", "One step."]),
        PlanRec("sixth task", ["Two step.", "Three step."]),
        PlanRec("seventh task", ["One step.", "Three step."]),
        PlanRec("eighth task", ["Three step.", "Two step."]),
    ]
    params = ModelParams.zeros(plan_vocab=vocab)
    lr = 1e-2
    previous, _ = sft_plan_loss(params, batch)
    for _ in range(50):
        _, grads = sft_plan_loss(params, batch)
        params = params.replaced({n: params.get(n) - lr * g for n, g in grads.items()})
        current, _ = sft_plan_loss(params, batch)
        assert current < previous + 1e-12
        previous = current

    trajectories = [[expert_step()], [expert_step('Make the text "Test For Fun" bold in the document.')]]
    params = ModelParams.zeros()
    previous, _ = imitation_loss(params, trajectories)
    for _ in range(50):
        _, grads = imitation_loss(params, trajectories)
        params = params.replaced({n: params.get(n) - lr * g for n, g in grads.items()})
        current, _ = imitation_loss(params, trajectories)
        assert current < previous + 1e-12
        previous = current


# --- reward model ------------------------------------------------------------------


def rewarded_toy_set():
    """One feature (the function one-hot) perfectly separates the labels."""
    steps = []
    good_task = 'Highlight the text "Test For Fun" in yellow in the document.'
    for i in range(10):
        state = make_state(good_task, step_id=1)
        steps.append(
            RewardedStep(
                state=state,
                action=ActionCall(function="select_text", args={"text": "Test For Fun"}),
                reward=1,
            )
        )
        steps.append(
            RewardedStep(
                state=state,
                action=ActionCall(function="insert_page_border", args={"style": "box"}),
                reward=-1,
            )
        )
    return steps


def test_rm_separable_set_reaches_low_mse():
    steps = rewarded_toy_set()
    config = RmConfig(learning_rate=0.1, optimizer="gd", epochs=2, batch_size=2)
    _, final_mse = train_reward_model(RewardModelParams.zeros(), steps, config)
    assert final_mse < 0.1


def test_rm_all_success_constant_predictor():
    steps = [s for s in rewarded_toy_set() if s.reward == 1]
    config = RmConfig(learning_rate=0.1, optimizer="gd", epochs=4, batch_size=2)
    params, final_mse = train_reward_model(RewardModelParams.zeros(), steps, config)
    assert final_mse < 0.05


def test_rm_normalized_output_in_unit_interval():
    rng = random.Random(3)
    params = RewardModelParams(
        weights={name: rng.uniform(-5, 5) for name in RM_FEATURE_NAMES}
    )
    for step in rewarded_toy_set():
        value = params.normalized(step.state, step.action)
        assert 0.0 <= value <= 1.0


def test_rm_gradient_matches_finite_differences():
    steps = rewarded_toy_set()[:6]
    for trial in range(3):
        rng = random.Random(trial)
        params = RewardModelParams(
            weights={name: rng.uniform(-0.5, 0.5) for name in RM_FEATURE_NAMES}
        )
        loss, grads = rm_mse_loss(params, steps)
        checked = 0
        h = 1e-5
        for name, g in grads.items():
            plus, _ = rm_mse_loss(
                RewardModelParams(weights={**params.weights, name: params.weights[name] + h}), steps
            )
            minus, _ = rm_mse_loss(
                RewardModelParams(weights={**params.weights, name: params.weights[name] - h}), steps
            )
            numeric = (plus - minus) / (2 * h)
            denom = max(abs(g), abs(numeric), 1e-8)
            assert abs(g - numeric) / denom < 1e-4
            checked += 1
        assert checked


def test_rm_reward_labels_validated():
    state = make_state("task text here")
    with pytest.raises(Exception):
        RewardedStep(state=state, action=ActionCall(function="toggle_bold"), reward=0)


# --- advantages ---------------------------------------------------------------------


def test_advantage_equal_rewards_are_zero():
    for adv in compute_advantage([0.3, 0.3, 0.3]):
        assert abs(adv) < 1e-15


def test_advantage_affine_map():
    advs = compute_advantage([0.0, 1.0])
    assert abs(advs[0] + 0.5) < 1e-15
    assert abs(advs[1] - 0.5) < 1e-15


def test_advantage_batch_mean_zero():
    rng = random.Random(4)
    rewards = [rng.random() for _ in range(37)]
    advs = compute_advantage(rewards)
    assert abs(sum(advs) / len(advs)) < 1e-12


# --- PPO ---------------------------------------------------------------------------


def ppo_steps():
    sel = (ActionCall(function="select_text", args={"text": "Test For Fun"}), {"ok": True})
    return [
        expert_step(),
        (
            make_state(
                'Make the text "Test For Fun" bold in the document.',
                step_id=2,
                previous_actions=(sel,),
                previous_plan=("Toggle bold formatting on the selection.",),
            ),
            ActionCall(function="toggle_bold", args={}),
        ),
    ]


def test_ppo_ratio_identity():
    rng = random.Random(7)
    params = random_params(rng)
    steps = ppo_steps()
    advantages = [0.31, -0.17]
    value = surrogate_value(params, params, steps, advantages)
    assert abs(value - sum(advantages) / len(advantages)) < 1e-12


def test_ppo_clip_arithmetic():
    assert clipped_term(1.5, 1.0, 0.2) == pytest.approx(1.2, abs=1e-15)
    assert clipped_term(0.5, -1.0, 0.2) == pytest.approx(-0.8, abs=1e-15)


def test_ppo_clip_bound_property():
    rng = random.Random(8)
    eps = 0.2
    for _ in range(500):
        ratio = rng.uniform(0.0, 3.0)
        adv = rng.uniform(-2.0, 2.0)
        term = clipped_term(ratio, adv, eps)
        bounds = [ratio * adv, (1 - eps) * adv, (1 + eps) * adv]
        assert min(bounds) - 1e-12 <= term <= max(bounds) + 1e-12
        if 1 - eps <= ratio <= 1 + eps:
            assert term == pytest.approx(ratio * adv, abs=1e-15)


def test_ppo_update_runs_and_reports():
    params = ModelParams.zeros()
    steps = ppo_steps()
    advantages = [0.4, -0.2]
    new_params, diag = ppo_update(params, params, steps, advantages, PpoConfig(), seed=0)
    assert diag.updates == PpoConfig().ppo_epochs * len(steps)
    assert math.isfinite(diag.kl_final)
    for name, value in new_params.weights.items():
        assert math.isfinite(value)


def test_ppo_improves_surrogate_with_workable_lr():
    params = ModelParams.zeros()
    steps = ppo_steps()
    advantages = [0.4, -0.2]
    config = PpoConfig(learning_rate=0.05, ppo_epochs=4)
    new_params, diag = ppo_update(params, params, steps, advantages, config, seed=0)
    assert diag.surrogate_after > diag.surrogate_before


def test_ppo_degenerate_ratio():
    state, expert = expert_step()
    # Make the old policy assign essentially zero probability to the expert action.
    old = ModelParams.zeros().replaced({"act::func::select_text": -60.0})
    with pytest.raises(DegenerateRatio):
        ppo_update(ModelParams.zeros(), old, [(state, expert)], [0.1], PpoConfig())


def test_ppo_kl_coefficient_adapts_upward():
    params = ModelParams.zeros()
    steps = ppo_steps()
    config = PpoConfig(learning_rate=2.0, ppo_epochs=4, kl_target=1e-6, kl_coef_init=0.2)
    _, diag = ppo_update(params, params, steps, [1.0, 1.0], config, seed=0)
    assert diag.kl_coef_final > 0.2


# --- self-boost ----------------------------------------------------------------------


def trained_highlight_params():
    """Parameters that reliably solve single-format tasks."""
    params = ModelParams.zeros()
    return params.replaced(
        {
            "act::func_task_affinity": 8.0,
            "act::select_needed": 6.0,
            "act::selection_ready": 6.0,
            "act::selection_missing": -6.0,
            "act::repeat_last": -8.0,
            "act::args_present": 1.0,
            "status::bias": -2.0,
            "status::is_first_step": 5.0,
            "status::format_task": -6.0,
            "status::plan_on_last_step": 8.0,
        }
    )


def test_self_boost_finds_success_for_solvable_task():
    oracle = MockOracle()
    tasks = [
        FailedTask(
            task_id="bz1",
            template_id="plain_text",
            task="Add a box page border to the document.",
        )
    ]
    out = self_boost(
        trained_highlight_params(), tasks, judge=lambda t: judge_trajectory(t, oracle)
    )
    assert len(out) == 1
    assert out[0].final_status == "success"


def test_self_boost_returns_empty_when_never_judged_yes():
    oracle = MockOracle()
    tasks = [
        FailedTask(
            task_id="bz2",
            template_id="plain_text",
            task="Rearrange the pictures in the document.",  # no goal rule: never "yes"
        )
    ]
    out = self_boost(
        trained_highlight_params(), tasks, judge=lambda t: judge_trajectory(t, oracle)
    )
    assert out == []


def test_self_boost_merged_corpus_arithmetic():
    expert_count = 7
    new = 2
    assert expert_count + new == 9  # merged corpus size is the plain sum


# --- run_phase -----------------------------------------------------------------------


def test_run_phase_missing_predecessor(tmp_path):
    from lamlab.training import run_phase

    with pytest.raises(MissingPredecessor):
        run_phase(4, tmp_path, MockOracle())


def test_run_phase_empty_corpus(tmp_path):
    from lamlab.training import run_phase

    with pytest.raises(EmptyCorpus):
        run_phase(1, tmp_path, MockOracle())


def test_phase_manifests_record_corpus_sizes(tmp_path):
    import json

    from lamlab.harness import build_suite_workspace, desk_phase_configs
    from lamlab.jsonl import read_jsonl
    from lamlab.training import run_phase

    ws = tmp_path / "ws"
    build_suite_workspace(ws)
    configs = desk_phase_configs()
    run_phase(1, ws, MockOracle(), configs, seed=0)
    manifest = json.loads((ws / "checkpoints" / "lam1" / "manifest.json").read_text())
    assert manifest["data_size"] == len(read_jsonl(ws / "corpus" / "evolved.jsonl"))
    run_phase(2, ws, MockOracle(), configs, seed=0)
    manifest2 = json.loads((ws / "checkpoints" / "lam2" / "manifest.json").read_text())
    records = read_jsonl(ws / "corpus" / "training.jsonl")
    assert manifest2["data_size"] == len({r["trajectory_id"] for r in records})

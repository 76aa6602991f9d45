"""Agent-visible state: what the model sees before choosing an action.

The serialized form of a state is byte-for-byte the ``input`` object of an
offline training record, so online inference and offline training consume
the same schema by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..env_sim import ActionCall

__all__ = ["AgentState"]


@dataclass(frozen=True)
class AgentState:
    task: str
    step_id: int
    controls: tuple[dict, ...]
    canvas_digest: str = ""
    thoughts: str = ""
    previous_actions: tuple[tuple[ActionCall, dict], ...] = ()
    previous_plan: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.step_id < 1:
            raise ValueError("step_id starts at 1")

    def observations(self) -> dict:
        return {"controls": list(self.controls), "canvas_digest": self.canvas_digest}

    def selection_active(self) -> bool:
        """Whether a prior select_text succeeded (and still holds)."""
        for action, result in reversed(self.previous_actions):
            if action.function == "select_text" and result.get("ok"):
                return True
        return False

    def last_action(self) -> ActionCall | None:
        return self.previous_actions[-1][0] if self.previous_actions else None

    def to_record_input(self) -> dict:
        return {
            "available_controls": [dict(c) for c in self.controls],
            "user_request": self.task,
            "step_history": [
                {"action": action.to_call_dict(), "result": dict(result)}
                for action, result in self.previous_actions
            ],
            "previous_plan": list(self.previous_plan),
        }

    @classmethod
    def from_record_input(cls, obj: dict) -> "AgentState":
        history = tuple(
            (
                ActionCall.from_call_dict(item["action"]),
                dict(item["result"]),
            )
            for item in obj["step_history"]
        )
        return cls(
            task=obj["user_request"],
            step_id=len(history) + 1,
            controls=tuple(obj["available_controls"]),
            previous_actions=history,
            previous_plan=tuple(obj["previous_plan"]),
        )

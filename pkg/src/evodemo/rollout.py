"""Demonstration generation: roll a policy out from a start state.

A trajectory keeps two views of the episode.  ``states`` holds the visited
positions with consecutive duplicates collapsed (a grid agent bumping into a
wall does not stretch its path), while ``actions``, ``rewards``, and
``certainties`` keep one entry per executed step.  Return and mean certainty
therefore still account for steps whose states were collapsed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .environments import EnvSpec, GridSpec, make_env, position
from .errors import ContractViolationError

OUTCOME_REACHED = "reached_target"
OUTCOME_FAILED = "failed"
OUTCOME_TRUNCATED = "truncated"
OUTCOMES = (OUTCOME_REACHED, OUTCOME_FAILED, OUTCOME_TRUNCATED)


@dataclass(frozen=True)
class Trajectory:
    """One deterministic policy demonstration."""

    states: tuple[tuple[float, ...], ...]
    actions: tuple
    rewards: tuple[float, ...]
    certainties: tuple[float, ...]
    raw_length: int
    episode_return: float
    outcome: str

    def __post_init__(self) -> None:
        if not self.states:
            raise ContractViolationError("a trajectory needs at least one state")
        if not len(self.actions) == len(self.rewards) == len(self.certainties) == self.raw_length:
            raise ContractViolationError("per-step records must all have raw_length entries")
        if len(self.states) > self.raw_length + 1:
            raise ContractViolationError("more states than steps plus one")
        if self.outcome not in OUTCOMES:
            raise ContractViolationError(f"unknown outcome {self.outcome!r}")

    @property
    def final_length(self) -> int:
        """Number of states after collapsing consecutive duplicates."""
        return len(self.states)


def generate(env_spec: EnvSpec, policy, initial_state) -> Trajectory:
    """Run one full episode; pure in all arguments.

    The initial state must be valid for the environment (the caller filters
    candidates beforehand); an invalid state is a contract violation.
    """
    env = make_env(env_spec)
    state = env.reset(initial_state)
    positions = [position(state)]
    actions: list = []
    rewards: list[float] = []
    certainties: list[float] = []
    terminated = truncated = False
    while not (terminated or truncated):
        action = policy.act(state)
        certainties.append(float(policy.certainty(state, action)))
        state, reward, terminated, truncated = env.step(action)
        actions.append(action)
        rewards.append(float(reward))
        positions.append(position(state))

    deduped = [positions[0]]
    for point in positions[1:]:
        if point != deduped[-1]:
            deduped.append(point)

    if terminated and isinstance(env_spec, GridSpec):
        target = (float(env_spec.target_cell[0]), float(env_spec.target_cell[1]))
        outcome = OUTCOME_REACHED if deduped[-1] == target else OUTCOME_FAILED
    else:
        outcome = OUTCOME_TRUNCATED
    return Trajectory(
        states=tuple(deduped),
        actions=tuple(actions),
        rewards=tuple(rewards),
        certainties=tuple(certainties),
        raw_length=len(actions),
        episode_return=float(sum(rewards)),
        outcome=outcome,
    )


def trajectory_to_dict(trajectory: Trajectory) -> dict:
    return {
        "states": [list(s) for s in trajectory.states],
        "actions": [list(a) if isinstance(a, tuple) else a for a in trajectory.actions],
        "rewards": list(trajectory.rewards),
        "certainties": list(trajectory.certainties),
        "raw_length": trajectory.raw_length,
        "episode_return": trajectory.episode_return,
        "outcome": trajectory.outcome,
    }


def trajectory_from_dict(data: dict) -> Trajectory:
    return Trajectory(
        states=tuple(tuple(s) for s in data["states"]),
        actions=tuple(tuple(a) if isinstance(a, list) else a for a in data["actions"]),
        rewards=tuple(float(r) for r in data["rewards"]),
        certainties=tuple(float(c) for c in data["certainties"]),
        raw_length=int(data["raw_length"]),
        episode_return=float(data["episode_return"]),
        outcome=str(data["outcome"]),
    )

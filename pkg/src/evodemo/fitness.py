"""Trajectory diversity metrics and the joint fitness score.

All distances operate on the agent positions recorded in trajectories (grid
cell coordinates, reach effector coordinates).  For a trajectory ``t`` and a
demonstration set ``T``:

* local diversity: how much of the state space the trajectory covers on its
  own.  Finite spaces count distinct visited states over the state count;
  continuous spaces use the collapsed length over the raw step count plus one
  (a trajectory that never stalls scores 1).
* one-way distance: symmetric average of minimum point-to-trajectory
  distances between two trajectories; value-equal trajectories score 0.
* global diversity: minimum one-way distance from ``t`` to any *other*
  demonstration, normalized by the diameter of the position space so it stays
  in [0, 1].
* certainty: mean probability the policy assigned to its executed actions.
* joint fitness: global diversity plus the Euclidean distance of the
  (local diversity, certainty) pair to the nearest demonstration's pair.
  Adding a value-equal copy of ``t`` to ``T`` drives the score to 0.

Scoring against an empty demonstration set maxes out both context terms
(1 and sqrt(2)); that sentinel lives in ``empty_set_components`` only.

Members being compared against are excluded by object identity, never by
value equality, so an individual's own stored demonstration does not shadow
an identical twin contributed by someone else.

The demonstration set caches each member's position array and (local
diversity, certainty) pair; scoring a candidate never re-derives members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .environments import EnvSpec, max_state_distance, state_count
from .errors import ContractViolationError
from .rollout import Trajectory

EMPTY_SET_GLOBAL_DIVERSITY = 1.0
EMPTY_SET_LOCAL_DISTANCE = math.sqrt(2.0)


@dataclass(frozen=True)
class FitnessComponents:
    local_diversity: float
    certainty: float
    global_diversity: float
    local_distance: float
    joint: float


def empty_set_components(local_diversity: float, certainty: float) -> FitnessComponents:
    """Score for a trajectory with nothing to collide with: both maxima."""
    return FitnessComponents(
        local_diversity=local_diversity,
        certainty=certainty,
        global_diversity=EMPTY_SET_GLOBAL_DIVERSITY,
        local_distance=EMPTY_SET_LOCAL_DISTANCE,
        joint=EMPTY_SET_GLOBAL_DIVERSITY + EMPTY_SET_LOCAL_DISTANCE,
    )


@dataclass(frozen=True)
class DemoEntry:
    trajectory: Trajectory
    points: np.ndarray
    local_diversity: float
    certainty: float


class DemonstrationSet:
    """Alive demonstrations with cached positions and (D_l, C) profiles."""

    def __init__(self) -> None:
        self._entries: list[DemoEntry] = []

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[DemoEntry]:
        return iter(self._entries)

    @property
    def entries(self) -> tuple[DemoEntry, ...]:
        return tuple(self._entries)

    def trajectories(self) -> tuple[Trajectory, ...]:
        return tuple(e.trajectory for e in self._entries)

    def add(self, trajectory: Trajectory, local_diversity: float, certainty: float) -> None:
        self._entries.append(
            DemoEntry(trajectory, _points(trajectory), float(local_diversity), float(certainty))
        )

    def discard(self, trajectory: Trajectory) -> None:
        # identity-based: value-equal duplicates from other individuals survive
        for index, entry in enumerate(self._entries):
            if entry.trajectory is trajectory:
                del self._entries[index]
                return
        raise ContractViolationError("trajectory is not a member of this demonstration set")

    @classmethod
    def from_trajectories(cls, trajectories: Iterable[Trajectory], env_spec: EnvSpec) -> "DemonstrationSet":
        """Convenience constructor that derives each member's cached profile."""
        demos = cls()
        for trajectory in trajectories:
            demos.add(
                trajectory,
                local_diversity(trajectory, env_spec),
                trajectory_certainty(trajectory),
            )
        return demos


def local_diversity(trajectory: Trajectory, env_spec: EnvSpec) -> float:
    """Fraction of the state space one trajectory covers on its own."""
    count = state_count(env_spec)
    if count is None:
        return len(trajectory.states) / (trajectory.raw_length + 1)
    return len(set(trajectory.states)) / count


def trajectory_certainty(trajectory: Trajectory) -> float:
    """Mean policy commitment over every executed step, collapsed or not."""
    if not trajectory.certainties:
        raise ContractViolationError("trajectory has no executed actions")
    return sum(trajectory.certainties) / len(trajectory.certainties)


def state_to_trajectory_distance(point: tuple[float, ...], trajectory: Trajectory) -> float:
    """Euclidean distance from a position to the nearest trajectory position."""
    diff = _points(trajectory) - np.asarray(point, dtype=float)
    return float(np.sqrt((diff * diff).sum(axis=1)).min())


def one_way_distance(u: Trajectory, v: Trajectory) -> float:
    """Symmetric average minimum point distance between two trajectories."""
    return _one_way(_points(u), _points(v))


def global_diversity(trajectory: Trajectory, demos: DemonstrationSet, env_spec: EnvSpec) -> float:
    """Normalized distance to the nearest other demonstration (1 when alone)."""
    others = [e for e in demos if e.trajectory is not trajectory]
    if not others:
        return EMPTY_SET_GLOBAL_DIVERSITY
    points = _points(trajectory)
    return min(_one_way(points, e.points) for e in others) / max_state_distance(env_spec)


def joint_fitness(trajectory: Trajectory, demos: DemonstrationSet, env_spec: EnvSpec) -> FitnessComponents:
    """Full scoring of one trajectory against the current demonstration set."""
    d_l = local_diversity(trajectory, env_spec)
    certainty = trajectory_certainty(trajectory)
    others = [e for e in demos if e.trajectory is not trajectory]
    if not others:
        return empty_set_components(d_l, certainty)
    points = _points(trajectory)
    d_g = min(_one_way(points, e.points) for e in others) / max_state_distance(env_spec)
    local_distance = min(
        math.hypot(d_l - e.local_diversity, certainty - e.certainty) for e in others
    )
    return FitnessComponents(
        local_diversity=d_l,
        certainty=certainty,
        global_diversity=d_g,
        local_distance=local_distance,
        joint=d_g + local_distance,
    )


def _points(trajectory: Trajectory) -> np.ndarray:
    return np.asarray(trajectory.states, dtype=float)


def _one_way(pu: np.ndarray, pv: np.ndarray) -> float:
    diff = pu[:, None, :] - pv[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    return float((dist.min(axis=1).sum() + dist.min(axis=0).sum()) / (len(pu) + len(pv)))

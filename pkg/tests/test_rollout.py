import numpy as np
import pytest

from evodemo.environments import GridState, ReachState
from evodemo.errors import ContractViolationError
from evodemo.policy import GaussianControllerPolicy, TabularPolicy
from evodemo.rollout import (
    OUTCOME_FAILED,
    OUTCOME_REACHED,
    OUTCOME_TRUNCATED,
    Trajectory,
    generate,
    trajectory_from_dict,
    trajectory_to_dict,
)

UP, RIGHT, DOWN, LEFT = 0, 1, 2, 3


def constant_policy(spec, action):
    q = np.zeros((spec.height, spec.width, 4))
    q[:, :, action] = 1.0
    return TabularPolicy(q)


def test_successful_rollout_records_full_step_data(flat_spec, well_trained_policy):
    trajectory = generate(flat_spec, well_trained_policy, GridState(1, 1))
    assert trajectory.outcome == OUTCOME_REACHED
    assert trajectory.episode_return == 34.0
    assert trajectory.raw_length == 16
    assert len(trajectory.states) == 17  # optimal path never revisits a cell
    assert len(trajectory.actions) == 16
    assert len(trajectory.rewards) == 16
    assert len(trajectory.certainties) == 16
    assert trajectory.states[0] == (1.0, 1.0)
    assert trajectory.states[-1] == (9.0, 9.0)
    assert trajectory.episode_return == sum(trajectory.rewards)
    assert all(0.0 <= c <= 1.0 for c in trajectory.certainties)


def test_wall_bumps_collapse_to_one_state(flat_spec):
    policy = constant_policy(flat_spec, UP)  # pinned against the top wall
    trajectory = generate(flat_spec, policy, GridState(1, 5))
    assert trajectory.outcome == OUTCOME_TRUNCATED
    assert trajectory.raw_length == flat_spec.max_steps
    assert trajectory.states == ((1.0, 5.0),)
    assert trajectory.final_length == 1
    assert trajectory.episode_return == -float(flat_spec.max_steps)
    # per-step channels keep the pre-collapse length
    assert len(trajectory.certainties) == flat_spec.max_steps


def test_only_consecutive_duplicates_are_dropped(flat_spec):
    # right until the wall, then pinned: revisited cells stay, the pinned tail collapses
    policy = constant_policy(flat_spec, RIGHT)
    trajectory = generate(flat_spec, policy, GridState(3, 7))
    assert trajectory.states == ((3.0, 7.0), (3.0, 8.0), (3.0, 9.0))
    assert trajectory.raw_length == flat_spec.max_steps


def test_hole_entry_is_a_failed_outcome(holey_spec):
    policy = constant_policy(holey_spec, DOWN)
    trajectory = generate(holey_spec, policy, GridState(3, 2))
    assert trajectory.outcome == OUTCOME_FAILED
    assert trajectory.episode_return == -52.0  # one floor step, then the hole
    assert trajectory.states[-1] == (5.0, 2.0)


def test_target_entry_is_a_reached_outcome(holey_spec):
    policy = constant_policy(holey_spec, DOWN)
    trajectory = generate(holey_spec, policy, GridState(7, 5))
    assert trajectory.outcome == OUTCOME_REACHED
    assert trajectory.episode_return == 48.0


def test_reach_rollout_dedups_the_settled_tail(reach_spec, reach_controller):
    start = ReachState((-0.15, -0.15, -0.15), (0.15, 0.15, 0.15))
    trajectory = generate(reach_spec, reach_controller, start)
    assert trajectory.outcome == OUTCOME_TRUNCATED
    assert trajectory.raw_length == reach_spec.horizon
    assert trajectory.final_length == 7  # six full-size moves, then a fixed point
    assert trajectory.states[0] == (-0.15, -0.15, -0.15)
    assert trajectory.states[-1] == (0.15, 0.15, 0.15)


def test_reach_rollout_never_terminates_early(reach_spec, reach_controller):
    start = ReachState((0.0, 0.0, 0.0), (0.01, 0.0, 0.0))
    trajectory = generate(reach_spec, reach_controller, start)
    assert trajectory.outcome == OUTCOME_TRUNCATED
    assert trajectory.raw_length == reach_spec.horizon


def test_trajectory_validation_rejects_mismatched_channels():
    with pytest.raises(ContractViolationError):
        Trajectory(
            states=((0.0, 0.0),),
            actions=(1,),
            rewards=(-1.0, -1.0),  # one reward too many
            certainties=(0.5,),
            raw_length=1,
            episode_return=-1.0,
            outcome=OUTCOME_TRUNCATED,
        )
    with pytest.raises(ContractViolationError):
        Trajectory(
            states=((0.0, 0.0),),
            actions=(1,),
            rewards=(-1.0,),
            certainties=(0.5,),
            raw_length=1,
            episode_return=-1.0,
            outcome="exploded",
        )


def test_grid_trajectory_round_trips_through_dict(flat_spec, well_trained_policy):
    trajectory = generate(flat_spec, well_trained_policy, GridState(5, 5))
    data = trajectory_to_dict(trajectory)
    assert trajectory_from_dict(data) == trajectory


def test_reach_trajectory_round_trips_through_dict(reach_spec, reach_controller):
    start = ReachState((0.1, -0.1, 0.0), (-0.1, 0.1, 0.0))
    trajectory = generate(reach_spec, reach_controller, start)
    restored = trajectory_from_dict(trajectory_to_dict(trajectory))
    assert restored == trajectory


def test_rollouts_are_deterministic(flat_spec, well_trained_policy):
    a = generate(flat_spec, well_trained_policy, GridState(7, 2))
    b = generate(flat_spec, well_trained_policy, GridState(7, 2))
    assert a == b

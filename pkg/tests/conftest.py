from __future__ import annotations

import time

import pytest

from evodemo import EvolutionConfig, GaussianControllerPolicy, preset, train_q_learning
from evodemo.evolution import baseline, run
from evodemo.rollout import OUTCOME_REACHED, generate

# Pass/fail lines collected by test_acceptance.py and printed after the run.
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {name}: {detail}")


def earliest_successful_checkpoint(spec, result):
    """Smallest checkpoint whose greedy rollout reaches the target."""
    for step in sorted(result.checkpoints):
        policy = result.checkpoints[step]
        if generate(spec, policy, spec.canonical_start).outcome == OUTCOME_REACHED:
            return step, policy
    raise AssertionError("no checkpoint reaches the target; raise the step budget")


@pytest.fixture(scope="session")
def flat_spec():
    return preset("FlatGrid11")


@pytest.fixture(scope="session")
def holey_spec():
    return preset("HoleyGrid11")


@pytest.fixture(scope="session")
def reach_spec():
    return preset("PointReach")


@pytest.fixture(scope="session")
def well_trained_policy(flat_spec):
    # enough steps that the greedy policy is shortest-path optimal everywhere
    return train_q_learning(flat_spec, 100_000, seed=0).policy


@pytest.fixture(scope="session")
def early_stopped_policy(flat_spec):
    """First checkpoint whose greedy rollout reaches the target.

    Competent from the canonical start but still unreliable elsewhere, which
    is the regime the demonstration search is meant to expose.
    """
    result = train_q_learning(
        flat_spec, 20_000, seed=0, checkpoint_steps=tuple(range(500, 20_500, 500))
    )
    _, policy = earliest_successful_checkpoint(flat_spec, result)
    return policy


@pytest.fixture(scope="session")
def just_converged_holey_policy(holey_spec):
    result = train_q_learning(
        holey_spec, 20_000, seed=0, checkpoint_steps=tuple(range(1000, 21_000, 1000))
    )
    _, policy = earliest_successful_checkpoint(holey_spec, result)
    return policy


@pytest.fixture(scope="session")
def reach_controller(reach_spec):
    return GaussianControllerPolicy(step_size=reach_spec.step_size)


@pytest.fixture(scope="session")
def flat_runs(flat_spec, well_trained_policy):
    """Ten seeded searches with the fully trained policy."""
    return [run(flat_spec, well_trained_policy, EvolutionConfig(seed=s)) for s in range(10)]


@pytest.fixture(scope="session")
def flat_early_runs(flat_spec, early_stopped_policy):
    return [run(flat_spec, early_stopped_policy, EvolutionConfig(seed=s)) for s in range(10)]


@pytest.fixture(scope="session")
def flat_early_baselines(flat_spec, early_stopped_policy):
    return [baseline(flat_spec, early_stopped_policy, EvolutionConfig(seed=s)) for s in range(10)]


@pytest.fixture(scope="session")
def holey_runs(holey_spec, just_converged_holey_policy):
    return [run(holey_spec, just_converged_holey_policy, EvolutionConfig(seed=s)) for s in range(10)]


@pytest.fixture(scope="session")
def reach_pipeline(reach_spec, reach_controller):
    """Ten searches plus ten baselines on the continuous task, with wall time."""
    start = time.perf_counter()
    runs = []
    baselines = []
    for seed in range(10):
        config = EvolutionConfig(
            population_size=30, generations=100, bits_per_dimension=9, seed=seed
        )
        runs.append(run(reach_spec, reach_controller, config))
        baselines.append(baseline(reach_spec, reach_controller, config))
    elapsed = time.perf_counter() - start
    return runs, baselines, elapsed

"""Long-running stability and threshold checks on the shipped networks."""

import numpy as np
import pandas as pd
import pytest

from sqn_control.config import ExperimentConfig
from sqn_control.constants import AC_PPO, BACKPRESSURE, IA_PPO, MAXWEIGHT, OMEGA, RANDOM
from sqn_control.drift.gate import InterventionGate
from sqn_control.drift.threshold import estimate_threshold, mean_drift_beyond, run_pilot
from sqn_control.env.network import make_network
from sqn_control.env.spec import load_shipped
from sqn_control.experiment import Experiment, pilot_only
from sqn_control.metrics.series import moving_average, time_average
from sqn_control.policies.actor import ActorPolicy, build_actor
from sqn_control.policies.baselines import intervention_policy, make_baseline
from sqn_control.train.rollout import rollout
from sqn_control.train.trajectory import Trajectory
from sqn_control.validation.checks import validate_network

pytestmark = pytest.mark.slow

WINDOW = 10_000


def _backlogs(name, policy, steps, seed=0, episode=2048):
    network = load_shipped(name)
    env = make_network(network, seed)
    parts = []
    done = 0
    while done < steps:
        n = min(episode, steps - done)
        parts.append(rollout(env, None, policy, InterventionGate.always(), n).backlogs)
        done += n
    return np.concatenate(parts)


@pytest.mark.parametrize("name", ["sh1", "sh2", "mh1", "mh2"])
def test_structural_invariants(name):
    """Every structural check holds over 10^5 random slots."""
    results = validate_network(load_shipped(name), steps=100_000, seed=0)
    assert results["overall_passed"]


@pytest.mark.parametrize("name", ["sh1", "sh2", "mh1", "mh2"])
def test_stabilizing_policy_bounded(name):
    """The stabilizing policy keeps the moving-average backlog bounded."""
    backlogs = _backlogs(name, intervention_policy(load_shipped(name)), 200_000)
    ma = moving_average(backlogs, WINDOW)
    reference = ma[50_000 - WINDOW]
    assert ma.max() <= 5 * reference


def test_randomized_policy_unstable_on_sh2():
    """Uniform random scheduling lets SH2 grow far beyond MaxWeight."""
    network = load_shipped("sh2")
    maxweight = time_average(_backlogs("sh2", make_baseline(MAXWEIGHT, network), 200_000))[-1]
    randomized = _backlogs("sh2", make_baseline(RANDOM, network), 200_000)
    assert randomized[-1] > 10 * maxweight


def test_sh1_pilot_converges():
    """MaxWeight on SH1 settles well before 2 * 10^5 steps."""
    network = load_shipped("sh1")
    env = make_network(network, 0)
    _, steps = run_pilot(env, intervention_policy(network), 2048, max_steps=200_000)
    assert steps < 200_000


def test_sh2_threshold_estimates(tmp_path):
    """The smoothed SH2 threshold sits below the point estimate, inside [10, 90]."""
    config = ExperimentConfig(env="sh2", seeds=(0,), output_dir=tmp_path)
    result = pilot_only(config, 0)
    joined = Trajectory.concatenate(result.trajectories)

    assert result.weighted < result.point
    assert 10 <= result.weighted <= 90
    assert 10 <= result.point <= 90
    assert mean_drift_beyond(joined, result.weighted) <= OMEGA

    point, weighted, _ = estimate_threshold(joined, OMEGA)
    assert (point, weighted) == (result.point, result.weighted)


@pytest.mark.parametrize("name", ["sh2", "mh2"])
def test_untrained_actor_stays_bounded(tmp_path, name):
    """An untrained actor behind the gate never lets the moving average run away."""
    network = load_shipped(name)
    config = ExperimentConfig(env=name, seeds=(0,), output_dir=tmp_path)
    q_star = pilot_only(config, 0).weighted

    env = make_network(network, 1)
    actor = ActorPolicy(network, build_actor(network, seed=1))
    gate = InterventionGate(q_star=q_star)
    policy = intervention_policy(network)
    parts = [rollout(env, actor, policy, gate, 2048).backlogs for _ in range(500_000 // 2048)]

    ma = moving_average(np.concatenate(parts), WINDOW)
    assert ma.max() <= 5 * (q_star + network.max_slot_arrivals)


def _final_rows(config):
    runs = Experiment(config).run()
    return {run.seed: pd.read_csv(run.metrics_file).iloc[-1] for run in runs}


def test_seed_isolation_across_policies():
    """Policies sharing a seed see the same arrival and link-state streams."""
    network = load_shipped("sh1")
    envs = [make_network(network, 4) for _ in range(3)]
    actor = ActorPolicy(network, build_actor(network, seed=4))
    stabilizing = intervention_policy(network)
    runs = [
        (None, stabilizing, InterventionGate.always()),
        (None, make_baseline(RANDOM, network), InterventionGate.always()),
        (actor, stabilizing, InterventionGate.disabled()),
    ]
    for _ in range(20):
        for env, (learner, policy, gate) in zip(envs, runs):
            rollout(env, learner, policy, gate, 500)
        states = [env.streams.get_state() for env in envs]
        for other in states[1:]:
            assert other["arrivals"] == states[0]["arrivals"]
            assert other["links"] == states[0]["links"]
        for env in envs[1:]:
            np.testing.assert_array_equal(env.state.y, envs[0].state.y)


@pytest.mark.parametrize("name, baseline", [("sh1", MAXWEIGHT), ("mh1", BACKPRESSURE)])
def test_learning_matches_baseline(tmp_path, name, baseline):
    """IA-PPO ends near the stabilizing baseline and below the randomized policy after 3 * 10^5 steps."""
    config = ExperimentConfig(env=name, seeds=(0, 1, 2), steps=300_000, output_dir=tmp_path / "learn")
    learned = _final_rows(config)
    reference = _final_rows(config.with_algorithm(baseline).with_output(tmp_path / "baseline"))
    randomized = _final_rows(config.with_algorithm(RANDOM).with_output(tmp_path / "random"))

    below = 0
    for seed, row in learned.items():
        assert row["time_avg"] <= 1.10 * reference[seed]["time_avg"]
        assert row["time_avg"] < randomized[seed]["time_avg"]
        below += row["moving_avg"] < reference[seed]["time_avg"]
    assert below >= 2


def test_gate_prevents_divergence_on_sh2(tmp_path):
    """Without the gate SH2 backlog runs away; with it IA-PPO stays bounded."""
    config = ExperimentConfig(env="sh2", seeds=(0,), steps=200_000, output_dir=tmp_path / "ia")
    gated = Experiment(config).run()[0]
    ungated = Experiment(config.with_algorithm(AC_PPO).with_output(tmp_path / "ac")).run()[0]

    gated_frame = pd.read_csv(gated.metrics_file)
    ungated_frame = pd.read_csv(ungated.metrics_file)
    network = load_shipped("sh2")
    assert gated_frame["moving_avg"].max() <= 5 * (gated.final_q_star + network.max_slot_arrivals)
    assert ungated_frame["backlog"].iloc[-1] > 10 * gated_frame["backlog"].iloc[-1]

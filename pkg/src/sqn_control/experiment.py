"""
Experiment harness for sqn-control.

Runs one continuous interaction stream per seed: a pilot under the
stabilizing policy, threshold estimation, then rollout and update
episodes until the step budget is spent. The network is never reset.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
import pandas as pd
import torch
from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn
from tqdm import tqdm

from sqn_control.constants import (
    AC_PPO,
    BASELINE_ALGORITHMS,
    CHECKPOINT_EVERY,
    INTERVENTION_ALGORITHMS,
    PHASE_BASELINE,
    PHASE_PILOT,
    PHASE_TRAIN,
    PILOT_MAX_EPISODES,
)
from sqn_control.drift.gate import InterventionGate, update_threshold
from sqn_control.drift.threshold import DriftTable, estimate_threshold, mean_drift_beyond, run_pilot
from sqn_control.env.network import make_network
from sqn_control.env.spec import resolve_config
from sqn_control.export.checkpoint import checkpoint_path, load_checkpoint, save_checkpoint
from sqn_control.export.csv import (
    drift_path,
    episodes_path,
    metrics_frame,
    metrics_path,
    write_drift_table,
    write_episodes,
    write_metrics,
    write_summary,
)
from sqn_control.metrics.summary import summarize
from sqn_control.nn.optim import OptState
from sqn_control.policies.actor import ActorPolicy, build_actor, build_critic
from sqn_control.policies.baselines import intervention_policy, make_baseline
from sqn_control.train.advantages import estimate_eta
from sqn_control.train.critic import CriticState
from sqn_control.train.rollout import rollout
from sqn_control.train.trajectory import Trajectory
from sqn_control.train.update import update_phase

if TYPE_CHECKING:
    from sqn_control.config import ExperimentConfig
    from sqn_control.env.network import QueueNetwork
    from sqn_control.env.spec import NetworkConfig
    from sqn_control.policies.base import Policy
    from sqn_control.train.update import UpdateStats

logger = logging.getLogger(__name__)
console = Console()

CHECKPOINT_VERSION = 1


@dataclass
class MetricsRecorder:
    """Per-step metric columns, appended one episode at a time."""

    backlog: list[np.ndarray] = field(default_factory=list)
    intervened: list[np.ndarray] = field(default_factory=list)
    episode: list[np.ndarray] = field(default_factory=list)
    int_rate: list[np.ndarray] = field(default_factory=list)
    eta_hat: list[np.ndarray] = field(default_factory=list)
    q_star: list[np.ndarray] = field(default_factory=list)
    episodes: list[dict[str, Any]] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return sum(len(b) for b in self.backlog)

    def add_episode(
        self,
        trajectory: Trajectory,
        phase: str,
        eta: float,
        q_star: float,
        stats: UpdateStats | None = None,
    ) -> None:
        n = len(trajectory)
        index = len(self.episodes)
        rate = trajectory.intervention_rate
        threshold = q_star if math.isfinite(q_star) else math.nan
        self.backlog.append(trajectory.backlogs.copy())
        self.intervened.append(trajectory.intervened.astype(np.int64))
        self.episode.append(np.full(n, index, dtype=np.int64))
        self.int_rate.append(np.full(n, rate))
        self.eta_hat.append(np.full(n, eta))
        self.q_star.append(np.full(n, threshold))
        self.episodes.append({
            "episode": index,
            "start_t": trajectory.start_t,
            "steps": n,
            "phase": phase,
            "int_rate": rate,
            "eta_hat": eta,
            "q_star": threshold,
            "policy_loss": stats.policy_loss if stats else math.nan,
            "critic_loss": stats.critic_loss if stats else math.nan,
            "clip_fraction": stats.clip_fraction if stats else math.nan,
            "critic_bias": stats.critic_bias if stats else math.nan,
        })

    def column(self, name: str) -> np.ndarray:
        parts = getattr(self, name)
        return np.concatenate(parts) if parts else np.zeros(0)

    def frame(self, window: int) -> pd.DataFrame:
        return metrics_frame(
            self.column("backlog"),
            self.column("intervened"),
            self.column("episode"),
            self.column("int_rate"),
            self.column("eta_hat"),
            self.column("q_star"),
            window,
        )

    def state_dict(self) -> dict[str, Any]:
        names = ("backlog", "intervened", "episode", "int_rate", "eta_hat", "q_star")
        return {
            "columns": {name: self.column(name) for name in names},
            "episodes": [dict(e) for e in self.episodes],
        }

    @classmethod
    def from_state_dict(cls, state: dict[str, Any]) -> MetricsRecorder:
        recorder = cls(episodes=[dict(e) for e in state["episodes"]])
        for name, values in state["columns"].items():
            if len(values):
                getattr(recorder, name).append(np.asarray(values))
        return recorder


@dataclass
class SeedRun:
    """Outcome of one (algorithm, seed) run."""

    algorithm: str
    seed: int
    steps: int
    episodes: int
    q_star_point: float
    q_star_weighted: float
    final_q_star: float
    final_time_avg: float
    metrics_file: Path


@dataclass
class PilotResult:
    """Threshold estimates from a pilot of the stabilizing policy."""

    seed: int
    steps: int
    episodes: int
    point: float
    weighted: float
    table: DriftTable
    drift_beyond: float
    trajectories: list[Trajectory]


def _init_seeds(seed: int) -> tuple[int, int]:
    actor_seed, critic_seed = np.random.SeedSequence([seed, 1]).generate_state(2)
    return int(actor_seed), int(critic_seed)


def _finite(*modules: torch.nn.Module) -> bool:
    return all(bool(torch.isfinite(p).all()) for m in modules for p in m.parameters())


def pilot_only(config: ExperimentConfig, seed: int) -> PilotResult:
    """Run the pilot phase on a fresh network and estimate the threshold."""
    network = resolve_config(config.env)
    env = make_network(network, seed)
    return _pilot(config, network, env, intervention_policy(network), seed)


def _pilot(
    config: ExperimentConfig,
    network: NetworkConfig,
    env: QueueNetwork,
    policy: Policy,
    seed: int,
) -> PilotResult:
    rollout_length = config.resolved_rollout_length(network.kind.value)
    config.check_budget(rollout_length)
    episode_length = min(rollout_length, config.steps)
    max_steps = min(PILOT_MAX_EPISODES * episode_length, config.steps)
    parts, t0 = run_pilot(
        env,
        policy,
        episode_length,
        max_steps=max_steps,
        tol=config.pilot_tolerance,
        window=config.pilot_window,
        episodes=config.pilot_episodes,
    )
    joined = Trajectory.concatenate(parts)
    point, weighted, table = estimate_threshold(joined, config.omega, config.threshold_rule)
    beyond = mean_drift_beyond(joined, weighted)
    logger.info(
        f"Seed {seed}: threshold point={point:g} weighted={weighted:g} "
        f"(mean drift beyond {beyond:.3f}, pilot {t0} steps)"
    )
    return PilotResult(
        seed=seed,
        steps=t0,
        episodes=len(parts),
        point=point,
        weighted=weighted,
        table=table,
        drift_beyond=beyond,
        trajectories=parts,
    )


class SeedRunner:
    """
    Mutable state of one seed's run, checkpointable at episode boundaries.

    Attributes:
        config: Experiment configuration
        seed: Seed of this run
        network: Network instance
        env: Stateful network, carried across all phases
        gate: Current intervention gate
        recorder: Metrics recorded so far
    """

    def __init__(self, config: ExperimentConfig, seed: int) -> None:
        self.config = config
        self.seed = seed
        self.algorithm = config.algorithm
        self.network = resolve_config(config.env)
        kind = self.network.kind.value
        self.rollout_length = config.resolved_rollout_length(kind)
        self.env = make_network(self.network, seed)
        self.recorder = MetricsRecorder()
        self.phase = PHASE_PILOT
        self.estimates = (math.nan, math.nan)

        if self.algorithm in BASELINE_ALGORITHMS:
            self.policy = make_baseline(self.algorithm, self.network)
            self.gate = InterventionGate.always()
            self.actor = None
            return

        self.policy = intervention_policy(self.network)
        self.train_config = config.train_config(kind)
        actor_seed, critic_seed = _init_seeds(seed)
        self.actor = ActorPolicy(self.network, build_actor(self.network, actor_seed))
        self.actor_opt = OptState(self.actor.mlp, lr=config.learning_rate)
        self.critic = CriticState(
            build_critic(self.network, critic_seed),
            step=self.train_config.critic_bias_step,
            nu=self.train_config.critic_bias_coef,
            lr=config.learning_rate,
        )
        if self.algorithm == AC_PPO:
            self.gate = InterventionGate.disabled(
                omega=config.omega, gamma=config.gamma, r_min=config.r_min
            )
        else:
            self.gate = InterventionGate(
                q_star=-math.inf, omega=config.omega, gamma=config.gamma, r_min=config.r_min
            )

    @property
    def output_dir(self) -> Path:
        return self.config.output_dir

    @property
    def steps_done(self) -> int:
        return self.recorder.steps

    @property
    def learning(self) -> bool:
        return self.actor is not None

    # -------------------------------------------------------------------------
    # Phases
    # -------------------------------------------------------------------------

    def run_pilot(self) -> None:
        """Pilot episodes under the stabilizing policy, then the first threshold."""
        result = _pilot(self.config, self.network, self.env, self.policy, self.seed)
        for part in result.trajectories:
            self.recorder.add_episode(part, PHASE_PILOT, estimate_eta(part), math.nan)
        write_drift_table(drift_path(self.output_dir, self.seed), result.table)
        self.estimates = (result.point, result.weighted)
        self.gate = InterventionGate(
            q_star=result.weighted,
            omega=self.config.omega,
            gamma=self.config.gamma,
            r_min=self.config.r_min,
        )

    def run_episode(self, length: int) -> None:
        """One rollout, plus an update phase and a threshold step when learning."""
        actor = self.actor if self.learning else None
        q_star = self.gate.q_star
        trajectory = rollout(self.env, actor, self.policy, self.gate, length)

        if not self.learning:
            self.recorder.add_episode(trajectory, PHASE_BASELINE, estimate_eta(trajectory), math.nan)
            return

        try:
            stats = update_phase(
                trajectory,
                self.actor,  # type: ignore[arg-type]
                self.actor_opt,
                self.critic,
                self.train_config,
                self.env.streams.policy,
            )
        except FloatingPointError:
            self.emergency_checkpoint()
            raise
        if not _finite(self.actor.mlp, self.critic.mlp):  # type: ignore[union-attr]
            self.emergency_checkpoint()
            raise FloatingPointError(
                f"non-finite network parameters after episode {len(self.recorder.episodes)}"
            )

        self.recorder.add_episode(trajectory, PHASE_TRAIN, stats.eta, q_star, stats)
        if self.gate.enabled:
            self.gate = update_threshold(self.gate, trajectory.intervention_rate)

    def run(self) -> SeedRun:
        """Run (or continue) until the step budget is spent."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        with tqdm(
            total=self.config.steps,
            initial=self.steps_done,
            desc=f"{self.algorithm} seed {self.seed}",
            unit="step",
            disable=not self.config.verbose,
        ) as bar:
            if self.phase == PHASE_PILOT:
                if self.algorithm in INTERVENTION_ALGORITHMS:
                    self.run_pilot()
                    bar.update(self.steps_done)
                self.phase = PHASE_TRAIN if self.learning else PHASE_BASELINE
                if self.algorithm in INTERVENTION_ALGORITHMS:
                    self.checkpoint()

            while self.steps_done < self.config.steps:
                length = min(self.rollout_length, self.config.steps - self.steps_done)
                self.run_episode(length)
                bar.update(length)
                if len(self.recorder.episodes) % CHECKPOINT_EVERY == 0:
                    self.checkpoint()

        self.checkpoint()
        frame = self.recorder.frame(self.config.moving_average_window)
        return SeedRun(
            algorithm=self.algorithm,
            seed=self.seed,
            steps=len(frame),
            episodes=len(self.recorder.episodes),
            q_star_point=self.estimates[0],
            q_star_weighted=self.estimates[1],
            final_q_star=self.gate.q_star,
            final_time_avg=float(frame["time_avg"].iloc[-1]) if len(frame) else math.nan,
            metrics_file=metrics_path(self.output_dir, self.algorithm, self.seed),
        )

    # -------------------------------------------------------------------------
    # Persistence
    # -------------------------------------------------------------------------

    def write_outputs(self) -> None:
        write_metrics(
            metrics_path(self.output_dir, self.algorithm, self.seed),
            self.recorder.frame(self.config.moving_average_window),
        )
        write_episodes(episodes_path(self.output_dir, self.algorithm, self.seed), self.recorder.episodes)

    def state_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "version": CHECKPOINT_VERSION,
            "algorithm": self.algorithm,
            "seed": self.seed,
            "env": self.network.name,
            "phase": self.phase,
            "network": self.env.get_state(),
            "gate": asdict(self.gate),
            "estimates": self.estimates,
            "metrics": self.recorder.state_dict(),
            "emergency": False,
        }
        if self.learning:
            payload["actor"] = self.actor.mlp.state_dict()  # type: ignore[union-attr]
            payload["actor_opt"] = self.actor_opt.state_dict()
            payload["critic"] = self.critic.state_dict()
        return payload

    def load_state_dict(self, payload: dict[str, Any]) -> None:
        if payload.get("emergency"):
            raise ValueError("emergency checkpoints hold a partial update and cannot be resumed")
        if payload["algorithm"] != self.algorithm or payload["seed"] != self.seed:
            raise ValueError(
                f"checkpoint is for {payload['algorithm']} seed {payload['seed']}, "
                f"not {self.algorithm} seed {self.seed}"
            )
        self.env.set_state(payload["network"])
        self.gate = InterventionGate(**payload["gate"])
        self.estimates = tuple(payload["estimates"])  # type: ignore[assignment]
        self.recorder = MetricsRecorder.from_state_dict(payload["metrics"])
        self.phase = payload["phase"]
        if self.learning:
            self.actor.mlp.load_state_dict(payload["actor"])  # type: ignore[union-attr]
            self.actor_opt.load_state_dict(payload["actor_opt"])
            self.critic.load_state_dict(payload["critic"])
        logger.info(f"Resumed {self.algorithm} seed {self.seed} at t={self.steps_done}")

    def checkpoint(self) -> Path:
        self.write_outputs()
        return save_checkpoint(checkpoint_path(self.output_dir, self.algorithm, self.seed), self.state_dict())

    def emergency_checkpoint(self) -> Path:
        payload = self.state_dict()
        payload["emergency"] = True
        path = checkpoint_path(self.output_dir, self.algorithm, self.seed)
        path = path.with_name(f"{path.stem}_emergency{path.suffix}")
        logger.error(f"Non-finite update in {self.algorithm} seed {self.seed}; state saved to {path}")
        return save_checkpoint(path, payload)


def _resume_payload(config: ExperimentConfig, seed: int) -> dict[str, Any] | None:
    """Checkpoint for this seed, from a checkpoint file or a run directory."""
    if config.resume is None:
        return None
    if config.resume.is_dir():
        candidates = [
            checkpoint_path(config.resume, config.algorithm, seed),
            config.resume / checkpoint_path(Path(), config.algorithm, seed).name,
        ]
        path = next((c for c in candidates if c.exists()), None)
        if path is None:
            logger.warning(f"No checkpoint for seed {seed} under {config.resume}; starting fresh")
            return None
        return load_checkpoint(path)
    payload = load_checkpoint(config.resume)
    return payload if payload.get("seed") == seed else None


def run_seed(config: ExperimentConfig, seed: int) -> SeedRun:
    """
    Run one seed end to end (or continue it from a checkpoint).

    Raises:
        FloatingPointError: If an update produces non-finite parameters; an
            emergency checkpoint is written first.
    """
    torch.set_num_threads(1)
    runner = SeedRunner(config, seed)
    if (payload := _resume_payload(config, seed)) is not None:
        runner.load_state_dict(payload)
    return runner.run()


class Experiment:
    """
    Multi-seed experiment orchestrator.

    Example:
        >>> from sqn_control import Experiment, ExperimentConfig
        >>> config = ExperimentConfig(env="sh2", algorithm="ia-ppo", seeds=(0, 1))
        >>> runs = Experiment(config).run()
    """

    def __init__(self, config: ExperimentConfig | None = None) -> None:
        """
        Initialize the experiment.

        Args:
            config: Experiment configuration. If None, uses defaults.
        """
        from sqn_control.config import ExperimentConfig

        self.config = config or ExperimentConfig()
        self.summary: pd.DataFrame | None = None
        self._setup_logging()

    def _setup_logging(self) -> None:
        """Configure logging based on verbosity."""
        level = logging.DEBUG if self.config.verbose else logging.INFO
        logging.basicConfig(
            level=level,
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        )

    def run(self) -> list[SeedRun]:
        """
        Run every seed, then summarize the run directory.

        Returns:
            One SeedRun per seed, in seed order.
        """
        config = self.config
        network = resolve_config(config.env)
        config.check_budget(config.resolved_rollout_length(network.kind.value))
        config.output_dir.mkdir(parents=True, exist_ok=True)
        (config.output_dir / "config.json").write_text(
            json.dumps({**config.to_dict(), "network": network.to_dict()}, indent=2)
        )

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
            disable=config.verbose,
        ) as progress:
            task = progress.add_task(
                f"Running {config.algorithm} on {network.name} ({len(config.seeds)} seeds)...", total=None
            )
            if config.workers > 1 and len(config.seeds) > 1:
                with ProcessPoolExecutor(max_workers=min(config.workers, len(config.seeds))) as pool:
                    runs = list(pool.map(run_seed, [config] * len(config.seeds), config.seeds))
            else:
                runs = [run_seed(config, seed) for seed in config.seeds]
            progress.update(task, completed=True)

            task = progress.add_task("Summarizing...", total=None)
            self.summary = summarize(config.output_dir)
            write_summary(config.output_dir / "summary.csv", self.summary)
            progress.update(task, completed=True)

        for run in runs:
            logger.info(
                f"{run.algorithm} seed {run.seed}: {run.steps} steps, "
                f"final time-average backlog {run.final_time_avg:.2f}"
            )
        return runs

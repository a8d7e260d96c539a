"""
Configuration management for sqn-control.

Provides dataclass-based experiment and training configurations that can
be customized programmatically or loaded from environment variables.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from sqn_control.constants import (
    ALL_ALGORITHMS,
    CLIP_EPSILON,
    CLIP_FORM_STANDARD,
    CLIP_FORMS,
    CRITIC_BIAS_COEF,
    CRITIC_BIAS_STEP,
    DEFAULT_SEEDS,
    DEFAULT_STEPS,
    GAE_LAMBDA,
    IA_PPO,
    LEARNING_RATE,
    MINIBATCHES,
    MOVING_AVERAGE_WINDOW,
    OMEGA,
    PILOT_TOLERANCE,
    PILOT_WINDOW,
    ROLLOUT_LENGTHS,
    THRESHOLD_GAMMA,
    THRESHOLD_R_MIN,
    THRESHOLD_RULE_MAX,
    THRESHOLD_RULES,
    UPDATE_EPOCHS,
)


def _check_fraction(name: str, value: float, low: float = 0.0, high: float = 1.0) -> None:
    if not low <= value <= high:
        raise ValueError(f"{name} must lie in [{low}, {high}], got {value}")


@dataclass(frozen=True)
class TrainConfig:
    """
    Learning hyperparameters for one update phase.

    Attributes:
        algorithm: ia-ppo, ia-pg or ac-ppo
        rollout_length: Episode length T_e
        epochs: Passes over each trajectory
        minibatches: Minibatches per pass
        clip: PPO clipping epsilon
        clip_form: "standard" surrogate or "literal" advantage clipping
        gae_lambda: GAE lambda
        learning_rate: Adam step size for actor and critic
        normalize_advantages: Standardize advantages over free steps
        critic_bias_step: Step size of the critic's mean-value average
        critic_bias_coef: Weight of the average value constraint
    """

    algorithm: str = IA_PPO
    rollout_length: int = ROLLOUT_LENGTHS["single-hop"]
    epochs: int = UPDATE_EPOCHS
    minibatches: int = MINIBATCHES
    clip: float = CLIP_EPSILON
    clip_form: str = CLIP_FORM_STANDARD
    gae_lambda: float = GAE_LAMBDA
    learning_rate: float = LEARNING_RATE
    normalize_advantages: bool = True
    critic_bias_step: float = CRITIC_BIAS_STEP
    critic_bias_coef: float = CRITIC_BIAS_COEF

    def __post_init__(self) -> None:
        if self.rollout_length < 1:
            raise ValueError(f"rollout_length must be positive, got {self.rollout_length}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be nonnegative, got {self.epochs}")
        if self.minibatches < 1:
            raise ValueError(f"minibatches must be at least 1, got {self.minibatches}")
        if not 0.0 < self.clip < 1.0:
            raise ValueError(f"clip must lie in (0, 1), got {self.clip}")
        if self.clip_form not in CLIP_FORMS:
            raise ValueError(f"Invalid clip_form: {self.clip_form!r}. Valid: {sorted(CLIP_FORMS)}")
        _check_fraction("gae_lambda", self.gae_lambda)
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        _check_fraction("critic_bias_step", self.critic_bias_step)
        if self.critic_bias_coef < 0:
            raise ValueError(f"critic_bias_coef must be nonnegative, got {self.critic_bias_coef}")


@dataclass
class ExperimentConfig:
    """
    Experiment configuration with sensible defaults.

    Attributes:
        env: Shipped environment name (sh1, sh2, mh1, mh2) or path to a JSON document
        algorithm: Learning algorithm or baseline policy
        seeds: Distinct seeds, one independent run each
        steps: Total environment steps per seed, pilot included (T_end)
        rollout_length: Episode length T_e (default: 2048 single-hop, 512 multi-hop)
        pilot_episodes: Fixed pilot length E0 (default: until the time average settles)
        threshold_rule: "max" or "min" form of the threshold estimator
        output_dir: Directory for metrics, summaries and checkpoints
        resume: Checkpoint to continue from
        workers: Seeds run in parallel
        verbose: Enable verbose logging and progress bars
    """

    # Environment and algorithm
    env: str = "sh1"
    algorithm: str = IA_PPO
    seeds: tuple[int, ...] = field(default_factory=lambda: tuple(range(DEFAULT_SEEDS)))
    steps: int = DEFAULT_STEPS

    # Episodes
    rollout_length: int | None = None
    pilot_episodes: int | None = None
    pilot_window: int = PILOT_WINDOW
    pilot_tolerance: float = PILOT_TOLERANCE

    # Update phase
    epochs: int = UPDATE_EPOCHS
    minibatches: int = MINIBATCHES
    clip: float = CLIP_EPSILON
    clip_form: str = CLIP_FORM_STANDARD
    gae_lambda: float = GAE_LAMBDA
    learning_rate: float = LEARNING_RATE
    normalize_advantages: bool = True

    # Intervention gate
    omega: float = OMEGA
    gamma: float = THRESHOLD_GAMMA
    r_min: float = THRESHOLD_R_MIN
    threshold_rule: str = THRESHOLD_RULE_MAX

    # Output
    output_dir: Path = field(default_factory=lambda: Path("./runs"))
    moving_average_window: int = MOVING_AVERAGE_WINDOW
    resume: Path | None = None

    # Execution
    workers: int = 1
    verbose: bool = False

    def __post_init__(self) -> None:
        """Validate and normalize configuration."""
        if isinstance(self.seeds, int):
            self.seeds = tuple(range(self.seeds))
        self.seeds = tuple(int(s) for s in self.seeds)
        if isinstance(self.output_dir, str):
            self.output_dir = Path(self.output_dir)
        if isinstance(self.resume, str):
            self.resume = Path(self.resume)

        if self.algorithm not in ALL_ALGORITHMS:
            raise ValueError(f"Invalid algorithm: {self.algorithm!r}. Valid: {sorted(ALL_ALGORITHMS)}")
        if not self.seeds:
            raise ValueError("seeds must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"seeds must be distinct, got {list(self.seeds)}")
        if self.steps < 1:
            raise ValueError(f"steps must be positive, got {self.steps}")
        if self.rollout_length is not None and self.rollout_length < 1:
            raise ValueError(f"rollout_length must be positive, got {self.rollout_length}")
        if self.pilot_episodes is not None:
            if self.pilot_episodes < 1:
                raise ValueError(f"pilot_episodes must be positive, got {self.pilot_episodes}")
            if self.rollout_length is not None:
                self.check_budget(self.rollout_length)
        if self.epochs < 0:
            raise ValueError(f"epochs must be nonnegative, got {self.epochs}")
        if self.minibatches < 1:
            raise ValueError(f"minibatches must be at least 1, got {self.minibatches}")
        if not 0.0 < self.clip < 1.0:
            raise ValueError(f"clip must lie in (0, 1), got {self.clip}")
        if self.clip_form not in CLIP_FORMS:
            raise ValueError(f"Invalid clip_form: {self.clip_form!r}. Valid: {sorted(CLIP_FORMS)}")
        _check_fraction("gae_lambda", self.gae_lambda)
        if not self.omega < 0:
            raise ValueError(f"omega must be negative, got {self.omega}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        _check_fraction("r_min", self.r_min)
        if self.threshold_rule not in THRESHOLD_RULES:
            raise ValueError(f"Invalid threshold_rule: {self.threshold_rule!r}. Valid: {sorted(THRESHOLD_RULES)}")
        if self.moving_average_window < 1:
            raise ValueError(f"moving_average_window must be positive, got {self.moving_average_window}")
        if self.pilot_window < 1:
            raise ValueError(f"pilot_window must be positive, got {self.pilot_window}")
        if self.pilot_tolerance < 0:
            raise ValueError(f"pilot_tolerance must be nonnegative, got {self.pilot_tolerance}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")

    def check_budget(self, rollout_length: int) -> None:
        """Require room for the fixed pilot inside the step budget."""
        if self.pilot_episodes is not None and self.steps < self.pilot_episodes * rollout_length:
            raise ValueError(
                f"steps ({self.steps}) must be at least pilot_episodes * rollout_length "
                f"({self.pilot_episodes} * {rollout_length})"
            )

    def resolved_rollout_length(self, kind: str) -> int:
        """Episode length for a network kind ("single-hop" or "multi-hop")."""
        if self.rollout_length is not None:
            return self.rollout_length
        return ROLLOUT_LENGTHS[getattr(kind, "value", kind)]

    def train_config(self, kind: str) -> TrainConfig:
        """The learning subset of this configuration."""
        return TrainConfig(
            algorithm=self.algorithm,
            rollout_length=self.resolved_rollout_length(kind),
            epochs=self.epochs,
            minibatches=self.minibatches,
            clip=self.clip,
            clip_form=self.clip_form,
            gae_lambda=self.gae_lambda,
            learning_rate=self.learning_rate,
            normalize_advantages=self.normalize_advantages,
        )

    @classmethod
    def from_env(cls) -> ExperimentConfig:
        """
        Load configuration from environment variables.

        Environment variables:
            SQN_ENV: Environment name or JSON path
            SQN_ALGO: Algorithm name
            SQN_OUTPUT_DIR: Output directory
            SQN_SEEDS: Number of seeds, or a comma-separated list of seeds
            SQN_STEPS: Total steps per seed
            SQN_VERBOSE: Enable verbose logging (1/true/yes)
        """
        kwargs: dict[str, Any] = {}

        if env := os.environ.get("SQN_ENV"):
            kwargs["env"] = env

        if algorithm := os.environ.get("SQN_ALGO"):
            kwargs["algorithm"] = algorithm.strip().lower()

        if output_dir := os.environ.get("SQN_OUTPUT_DIR"):
            kwargs["output_dir"] = Path(output_dir)

        if seeds := os.environ.get("SQN_SEEDS"):
            if "," in seeds:
                kwargs["seeds"] = tuple(int(s) for s in seeds.split(",") if s.strip())
            else:
                kwargs["seeds"] = tuple(range(int(seeds)))

        if steps := os.environ.get("SQN_STEPS"):
            kwargs["steps"] = int(float(steps))

        if verbose := os.environ.get("SQN_VERBOSE"):
            kwargs["verbose"] = verbose.lower() in ("1", "true", "yes")

        return cls(**kwargs)

    def with_algorithm(self, algorithm: str) -> ExperimentConfig:
        """Return a new config with a different algorithm."""
        return replace(self, algorithm=algorithm)

    def with_output(self, output_dir: str | Path) -> ExperimentConfig:
        """Return a new config writing to a different directory."""
        return replace(self, output_dir=Path(output_dir))

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready snapshot."""
        data = asdict(self)
        data["seeds"] = list(self.seeds)
        data["output_dir"] = str(self.output_dir)
        data["resume"] = None if self.resume is None else str(self.resume)
        return data

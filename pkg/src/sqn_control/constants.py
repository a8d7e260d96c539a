"""
Constants and defaults for sqn-control.

Contains algorithm names, hyperparameter defaults, metric column layouts
and other constants used throughout the simulator and training stack.
"""

from __future__ import annotations

# =============================================================================
# ALGORITHMS
# =============================================================================

# Learning algorithms (actor-critic with or without interventions)
IA_PPO = "ia-ppo"
IA_PG = "ia-pg"
AC_PPO = "ac-ppo"

# Non-learning policies
MAXWEIGHT = "maxweight"
BACKPRESSURE = "backpressure"
RANDOM = "random"

LEARNING_ALGORITHMS = frozenset({IA_PPO, IA_PG, AC_PPO})
INTERVENTION_ALGORITHMS = frozenset({IA_PPO, IA_PG})
BASELINE_ALGORITHMS = frozenset({MAXWEIGHT, BACKPRESSURE, RANDOM})
ALL_ALGORITHMS = LEARNING_ALGORITHMS | BASELINE_ALGORITHMS

# Policy loss variants for the PPO-style algorithms
CLIP_FORM_STANDARD = "standard"
CLIP_FORM_LITERAL = "literal"
CLIP_FORMS = frozenset({CLIP_FORM_STANDARD, CLIP_FORM_LITERAL})

# Threshold estimator variants
THRESHOLD_RULE_MAX = "max"
THRESHOLD_RULE_MIN = "min"
THRESHOLD_RULES = frozenset({THRESHOLD_RULE_MAX, THRESHOLD_RULE_MIN})

# =============================================================================
# ENVIRONMENTS
# =============================================================================

SHIPPED_ENVIRONMENTS = ("sh1", "sh2", "mh1", "mh2")

# Absolute tolerance for pmf normalization in network documents
PROB_SUM_TOLERANCE = 1e-9

# Node alias for the single-hop base station
BASE_STATION_ALIAS = "BS"

# =============================================================================
# NETWORKS AND OPTIMIZATION
# =============================================================================

HIDDEN_WIDTHS: tuple[int, ...] = (64, 64)

# Final-layer gains: near-uniform initial actor, unit-gain critic
ACTOR_OUTPUT_GAIN = 0.01
CRITIC_OUTPUT_GAIN = 1.0
HIDDEN_GAIN = 2.0 ** 0.5

LEARNING_RATE = 3e-4
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8

# Logit used for invalid actions; finite to keep gradients finite
MASK_VALUE = -1e9

# =============================================================================
# TRAINING
# =============================================================================

# Rollout length T_e by network kind
ROLLOUT_LENGTHS: dict[str, int] = {
    "single-hop": 2048,
    "multi-hop": 512,
}

UPDATE_EPOCHS = 5
MINIBATCHES = 8
CLIP_EPSILON = 0.2
GAE_LAMBDA = 0.95

# Average value constraint for the critic
CRITIC_BIAS_STEP = 0.2
CRITIC_BIAS_COEF = 0.1

# =============================================================================
# INTERVENTION GATE AND THRESHOLD ESTIMATION
# =============================================================================

OMEGA = -0.1
THRESHOLD_GAMMA = 0.1
THRESHOLD_R_MIN = 0.05

DRIFT_TRIM_FRACTION = 0.05
DRIFT_SMOOTHING_WINDOW = 10
FALLBACK_PERCENTILE = 95.0

# Pilot convergence: relative change of the time-averaged backlog
# across two consecutive windows
PILOT_WINDOW = 10_000
PILOT_TOLERANCE = 0.01
PILOT_MAX_EPISODES = 50

# =============================================================================
# EXPERIMENT HARNESS
# =============================================================================

DEFAULT_STEPS = 200_000
FULL_SCALE_STEPS = 1_000_000
DEFAULT_SEEDS = 5
MOVING_AVERAGE_WINDOW = 10_000
CHECKPOINT_EVERY = 50  # episodes

METRICS_COLUMNS: list[str] = [
    "t",
    "backlog",
    "time_avg",
    "moving_avg",
    "intervened",
    "episode",
    "int_rate",
    "eta_hat",
    "q_star",
]

EPISODE_COLUMNS: list[str] = [
    "episode",
    "start_t",
    "steps",
    "phase",
    "int_rate",
    "eta_hat",
    "q_star",
    "policy_loss",
    "critic_loss",
    "clip_fraction",
    "critic_bias",
]

DRIFT_COLUMNS: list[str] = [
    "backlog",
    "count",
    "raw_drift",
    "smoothed_drift",
    "kept",
]

SUMMARY_COLUMNS: list[str] = [
    "algorithm",
    "seeds",
    "final_time_avg",
    "final_time_avg_ci",
    "final_moving_avg",
    "final_moving_avg_ci",
    "crossing_t",
]

# Crossing-time sentinel when the moving average never drops below the baseline
NEVER = float("inf")

# Episode phases recorded in the episode CSV
PHASE_PILOT = "pilot"
PHASE_TRAIN = "train"
PHASE_BASELINE = "baseline"

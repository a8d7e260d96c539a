"""
Control policies: classical baselines and the neural actor.
"""

from sqn_control.policies.actor import ActorPolicy, actor_forward, build_actor, build_critic, encode_state
from sqn_control.policies.base import Policy
from sqn_control.policies.baselines import (
    BackpressurePolicy,
    MaxWeightPolicy,
    RandomizedPolicy,
    backpressure,
    intervention_policy,
    make_baseline,
    max_weight,
    randomized_policy,
)
from sqn_control.policies.heads import (
    LinkMultinomial,
    MaskedCategorical,
    categorical_sample,
    mask_logits,
    multinomial_logprob,
    multinomial_sample,
)

__all__ = [
    "ActorPolicy",
    "BackpressurePolicy",
    "LinkMultinomial",
    "MaskedCategorical",
    "MaxWeightPolicy",
    "Policy",
    "RandomizedPolicy",
    "actor_forward",
    "backpressure",
    "build_actor",
    "build_critic",
    "categorical_sample",
    "encode_state",
    "intervention_policy",
    "make_baseline",
    "mask_logits",
    "max_weight",
    "multinomial_logprob",
    "multinomial_sample",
    "randomized_policy",
]

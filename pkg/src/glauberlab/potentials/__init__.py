"""Pair potential families and their certificates."""

from .checks import (
    CheckReport,
    beta_family_check,
    check_positive_definite,
    check_regularity,
    check_stability_numeric,
    growth_at_origin,
    ht_bound,
    profile_samples,
    quadratic_form_minimum,
)
from .core import PairPotential, Profile, explicit, make_special_class, special, sum_of, zero
from .sampled import SampledFunction

__all__ = [
    "CheckReport", "PairPotential", "Profile", "SampledFunction",
    "beta_family_check", "check_positive_definite", "check_regularity", "check_stability_numeric",
    "explicit", "growth_at_origin", "ht_bound", "make_special_class", "profile_samples",
    "quadratic_form_minimum", "special", "sum_of", "zero",
]

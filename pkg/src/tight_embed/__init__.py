"""Tight embeddings of finite metric spaces with certified compression and expansion moduli."""
from .moduli import ModulusCurve, Tail, check_class, exp_dominate, generalized_inverse, regularize_omega, regularize_rho
from .spaces import FiniteMetricSpace, LpPointSet, validate_metric
from .lp_embed import embed, make_plan, verify_sandwich
from .stable_embed import embed_stable, regularize_for, verify_stable
from .verify import compression_exponent_estimate, measure_moduli, range_check, snowflake_check

__all__ = [
    "ModulusCurve", "Tail", "check_class", "exp_dominate", "generalized_inverse", "regularize_omega",
    "regularize_rho", "FiniteMetricSpace", "LpPointSet", "validate_metric", "embed", "make_plan",
    "verify_sandwich", "embed_stable", "regularize_for", "verify_stable", "compression_exponent_estimate",
    "measure_moduli", "range_check", "snowflake_check",
]

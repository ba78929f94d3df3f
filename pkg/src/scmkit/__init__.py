"""Structural-causal-model toolkit.

Discrete SCMs with exact joint enumeration, interventions (mutilated
models), the back-door criterion and its pseudo-treatment extensions,
linear-Gaussian closed forms, the classical identification formulas
(adjustment, front-door, g-formula, instrumental variables, odds
ratios, mediation), numerically checked do-calculus rules, and
stratification diagnostics.
"""

__version__ = "0.1.0"

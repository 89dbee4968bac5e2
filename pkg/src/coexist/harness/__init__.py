"""Configuration, orchestration, statistics and acceptance checks."""

from .config import DEFAULTS, KINDS, SCHEMA, resolve, validate
from .experiments import RunResult, compare_dilute_vs_pure, run
from .stats import PowerLawFit, fit_power_law
from .acceptance import CRITERIA, Criterion, run_criterion

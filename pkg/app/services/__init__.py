# app/services/__init__.py

"""
Experiment orchestration: online training, offline CQL, bound validation,
few-shot adaptation and the suite runner that writes every output file.
"""

from app.services.bound import bound_experiment, refresh_decay_experiment
from app.services.fewshot import fewshot_experiment, run_fewshot
from app.services.offline import run_offline, summarize_offline, train_offline
from app.services.online import VARIANTS, OnlineRun, run_online, summarize_runs
from app.services.suite import SUITES, SuiteRunner, parse_suites, run_suite

__all__ = [
    "OnlineRun",
    "SUITES",
    "SuiteRunner",
    "VARIANTS",
    "bound_experiment",
    "fewshot_experiment",
    "parse_suites",
    "refresh_decay_experiment",
    "run_fewshot",
    "run_offline",
    "run_online",
    "run_suite",
    "summarize_offline",
    "summarize_runs",
    "train_offline",
]

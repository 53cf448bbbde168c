"""Python access to the mobsim library.

Prompt sets, targets and grids are plain dicts; trajectories travel as the
same CSV text the command-line tool writes.
"""

import json as _json

from . import _mobsim
from ._mobsim import (
    ConfigError,
    FitError,
    ParseError,
    aggregate_R,
    fit_truncated_powerlaw,
    fit_zipf_counts,
    jsd,
    l1_ccdf,
    w1_log,
)

__all__ = [
    "ConfigError",
    "FitError",
    "ParseError",
    "aggregate_R",
    "default_population",
    "evaluate",
    "extend",
    "fit_truncated_powerlaw",
    "fit_zipf_counts",
    "generate",
    "jsd",
    "l1_ccdf",
    "make_target",
    "objective_distances",
    "run",
    "user_measures",
    "w1_log",
]


def _dump(obj):
    if obj is None:
        return ""
    return obj if isinstance(obj, str) else _json.dumps(obj)


def default_population(users=100, num_days=7, seed=42, heterogeneous=True):
    return _json.loads(_mobsim.default_population(users, num_days, seed, heterogeneous))


def generate(promptset, seed=42, grid=None):
    """Returns (trajectories_csv, {user_id: status})."""
    return _mobsim.generate(_dump(promptset), seed, _dump(grid))


def make_target(trajectories_csv, shared_data_type, grid=None):
    return _json.loads(_mobsim.make_target(trajectories_csv, shared_data_type, _dump(grid)))


def objective_distances(target, trajectories_csv, grid=None):
    """Returns ([g_i], R)."""
    g, r = _mobsim.objective_distances(_dump(target), trajectories_csv, _dump(grid))
    return list(g), r


def user_measures(trajectories_csv, grid=None):
    return _mobsim.user_measures(trajectories_csv, _dump(grid))


def evaluate(sim_csv, ref_csv, grid=None):
    """Returns {metric: value or None}."""
    return {m["name"]: m["value"] for m in _mobsim.evaluate(sim_csv, ref_csv, _dump(grid))}


def extend(optimized, profiles_csv):
    """Returns (prompt set dict, {user_id: source prompt id}, m, remainder)."""
    ps, source, m, remainder = _mobsim.extend(_dump(optimized), profiles_csv)
    return _json.loads(ps), dict(source), m, remainder


def run(command, config=None, **kwargs):
    """Runs a command-line subcommand in-process; returns (exit_code, log).

    command is one of generate, make-target, optimize, extend, evaluate and
    kwargs mirror the subcommand flags with dashes as underscores.
    """
    fn = {
        "generate": _mobsim.run_generate,
        "make-target": _mobsim.run_make_target,
        "optimize": _mobsim.run_optimize,
        "extend": _mobsim.run_extend,
        "evaluate": _mobsim.run_evaluate,
    }.get(command)
    if fn is None:
        raise ValueError(f"unknown command {command!r}")
    kwargs = {k: (str(v) if hasattr(v, "__fspath__") else v) for k, v in kwargs.items()}
    return fn(_dump(config or {}), **kwargs)

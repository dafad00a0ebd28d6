"""Command-line surface: compute bound panels, run the verification suite,
and sweep a bound panel along a parameter axis.

Exit codes: 0 success, 1 invariant failure (verify), 2 usage/config error,
3 enumeration budget exceeded. Reports are deterministic: the same config
and seed produce byte-identical output.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys as _sys
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import bounds_standard as bstd
from . import bounds_subset as bsub
from . import verify as vfy
from .measures import T_INF, cond_mutual_information
from .models import (
    StandardSystem,
    SubsetSystem,
    expected_gen,
    expected_gen_subset,
    load_problem,
)
from .prob import BudgetExceededError, InvalidDistributionError

SCHEMA_VERSION = 1

REPORT_COLUMNS = ("schema_version", "bound_id", "flavor", "scope", "epsilon",
                  "feasible", "delta", "t", "alpha", "gamma", "sigma", "C",
                  "n", "abs_expected_gen", "quantile")

DEFAULT_STANDARD_BOUNDS = ("avg", "pacb_moment", "sd_moment", "sd_leakage",
                           "sd_renyi", "sd_tail", "tail_relax_moment",
                           "tail_relax_leakage")
DEFAULT_SUBSET_BOUNDS = ("cmi", "cond_pacb_moment", "cond_sd_moment",
                         "cond_sd_leakage", "cond_sd_renyi", "cond_tail",
                         "cond_tail_relax_moment", "cond_tail_relax_leakage",
                         "cond_alpha_mi", "genhat_to_gen")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def _fmt(value: Any) -> Any:
    """Serialize a cell; infinities become the string 'inf'."""
    if value is None:
        return ""
    if value is T_INF:
        return "inf"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def _param(result, key: str) -> Any:
    value = result.params.get(key)
    if value is T_INF:
        return "inf"
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return value


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}")


def _load_system(config: Mapping[str, Any]):
    if "problem" not in config:
        raise ConfigError("config lacks a 'problem' entry")
    try:
        _, system = load_problem(config["problem"])
        return system
    except (KeyError, ValueError, OSError) as exc:
        if isinstance(exc, BudgetExceededError):
            raise
        raise ConfigError(f"invalid problem definition: {exc}")


def _deltas(config: Mapping[str, Any]) -> list[float]:
    deltas = [float(d) for d in config.get("deltas", [0.1])]
    if not deltas or any(not 0.0 < d < 1.0 for d in deltas):
        raise ConfigError("deltas must be a nonempty subset of (0, 1)")
    return deltas


def _standard_row(sys: StandardSystem, bound_id: str, delta: float,
                  t: Any, alpha: float) -> Any:
    if bound_id == "avg":
        return bstd.avg_mi_bound(sys)
    if bound_id == "pacb_moment":
        return bstd.pacb_moment_bound(sys, delta, t)
    if bound_id == "sd_moment":
        return bstd.sd_moment_bound(sys, delta, t)
    if bound_id == "sd_leakage":
        return bstd.sd_leakage_bound(sys, delta)
    if bound_id == "sd_renyi":
        return bstd.sd_renyi_bound(sys, delta, alpha)
    if bound_id == "sd_tail":
        return bstd.sd_tail_bound(sys, delta)
    if bound_id == "tail_relax_moment":
        return bstd.tail_relaxations(sys, delta, t)[0]
    if bound_id == "tail_relax_leakage":
        return bstd.tail_relaxations(sys, delta, t)[1]
    raise ConfigError(f"unknown standard bound id {bound_id!r}")


def _subset_row(sys: SubsetSystem, bound_id: str, delta: float,
                t: Any, alpha: float) -> Any:
    if bound_id == "cmi":
        return bsub.cmi_avg_bound(sys)
    if bound_id == "cond_pacb_moment":
        return bsub.cond_pacb_moment_bound(sys, delta, t)
    if bound_id == "cond_sd_moment":
        return bsub.cond_sd_moment_bound(sys, delta, t)
    if bound_id == "cond_sd_leakage":
        return bsub.cond_sd_leakage_bound(sys, delta)
    if bound_id == "cond_sd_renyi":
        return bsub.cond_sd_renyi_pair_bound(sys, delta, alpha)
    if bound_id == "cond_tail":
        return bsub.cond_tail_bound(sys, delta)
    if bound_id == "cond_tail_relax_moment":
        return bsub.cond_tail_relaxations(sys, delta, t)[0]
    if bound_id == "cond_tail_relax_leakage":
        return bsub.cond_tail_relaxations(sys, delta, t)[1]
    if bound_id == "cond_alpha_mi":
        return bsub.cond_alpha_mi_bound(sys, delta, alpha)
    if bound_id == "genhat_to_gen":
        return bsub.genhat_to_gen(
            lambda d: bsub.cond_sd_moment_bound(sys, d, t).epsilon,
            sys.loss, sys.n, delta)
    raise ConfigError(f"unknown subset bound id {bound_id!r}")


def _report_rows(system, config: Mapping[str, Any]) -> list[dict]:
    is_standard = isinstance(system, StandardSystem)
    defaults = DEFAULT_STANDARD_BOUNDS if is_standard else DEFAULT_SUBSET_BOUNDS
    bounds = config.get("bounds", list(defaults))
    if not bounds:
        raise ConfigError("empty bound selection")
    t = config.get("t", 2)
    alpha = float(config.get("alpha", 2.0))
    deltas = _deltas(config)
    if is_standard:
        dist = vfy.exact_gen_distribution(system)
        truth = abs(expected_gen(system))
    else:
        dist = vfy.exact_gen_hat_distribution(system)
        truth = abs(expected_gen_subset(system))
    rows = []
    for delta in deltas:
        for bound_id in bounds:
            result = (_standard_row(system, bound_id, delta, t, alpha)
                      if is_standard else
                      _subset_row(system, bound_id, delta, t, alpha))
            rows.append({
                "schema_version": SCHEMA_VERSION,
                "bound_id": bound_id,
                "flavor": result.flavor,
                "scope": result.scope,
                "epsilon": _fmt(result.epsilon),
                "feasible": result.feasible,
                "delta": delta,
                "t": _param(result, "t"),
                "alpha": _param(result, "alpha"),
                "gamma": _param(result, "gamma"),
                "sigma": _param(result, "sigma"),
                "C": _param(result, "C"),
                "n": system.n,
                "abs_expected_gen": truth,
                "quantile": vfy.abs_quantile(dist, 1.0 - delta),
            })
    return rows


def _emit(rows: list[dict], columns: tuple, fmt: str, out: str | None) -> None:
    if fmt == "json":
        text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in columns})
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        _sys.stdout.write(text)


def cmd_report(config: Mapping[str, Any], out: str | None, fmt: str) -> int:
    system = _load_system(config)
    rows = _report_rows(system, config)
    _emit(rows, REPORT_COLUMNS, fmt, out)
    return 0


def cmd_verify(config: Mapping[str, Any], seed: int) -> int:
    result = vfy.run_verification_suite(
        seed=seed,
        n_instances=int(config.get("instances", 50)),
        deltas=tuple(_deltas(config)) if "deltas" in config else (0.3, 0.1, 0.05),
        sigma_scale=float(config.get("sigma_scale", 1.0)),
    )
    for failure in result["failures"]:
        print(f"FAIL {failure}")
    print(f"{result['checks']} checks, {len(result['failures'])} failures "
          f"(seed {result['seed']})")
    return 0 if result["passed"] else 1


SWEEP_AXES = ("delta", "t", "alpha", "beta", "n")


def _sweep_problem_axis(config: Mapping[str, Any], axis: str,
                        values: list) -> list[dict]:
    doc = config["problem"]
    if not isinstance(doc, Mapping):
        doc = _load_config(str(doc))
    rows = []
    for value in values:
        modified = json.loads(json.dumps(doc))
        if axis == "beta":
            if modified.get("learner", {}).get("kind") != "gibbs":
                raise ConfigError("beta sweep requires a gibbs learner")
            modified["learner"]["beta"] = float(value)
        else:
            modified["n"] = int(value)
        sub_config = dict(config, problem=modified)
        system = _load_system(sub_config)
        for row in _report_rows(system, sub_config):
            row["axis"] = axis
            row["axis_value"] = value
            _augment_subset_columns(system, row)
            rows.append(row)
    return rows


def _augment_subset_columns(system, row: dict) -> None:
    """Tightness-comparison columns for subset problems: the mutual
    information between W and the supersample vs the conditional one."""
    if not isinstance(system, SubsetSystem):
        row["mi_w_supersample"] = ""
        row["cmi_w_selector"] = ""
        return
    pw = system.p_ztilde @ system.pw_given
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(system.pw_given > 0,
                         np.log(np.where(system.pw_given > 0,
                                         system.pw_given, 1.0)) - np.log(pw)[None, :],
                         0.0)
    mi_wzt = float(np.sum(system.p_ztilde[:, None]
                          * np.where(system.pw_given > 0,
                                     system.pw_given * ratio, 0.0)))
    row["mi_w_supersample"] = mi_wzt
    row["cmi_w_selector"] = cond_mutual_information(system)


def cmd_sweep(config: Mapping[str, Any], out: str | None, fmt: str) -> int:
    axis = config.get("axis")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    values = config.get("values")
    if not values:
        raise ConfigError("sweep requires a nonempty 'values' list")
    if axis in ("beta", "n"):
        rows = _sweep_problem_axis(config, axis, values)
    else:
        system = _load_system(config)
        rows = []
        for value in values:
            sub = dict(config)
            if axis == "delta":
                sub["deltas"] = [float(value)]
            elif axis == "t":
                sub["t"] = value
            else:
                sub["alpha"] = float(value)
            for row in _report_rows(system, sub):
                row["axis"] = axis
                row["axis_value"] = "inf" if value == "inf" else value
                _augment_subset_columns(system, row)
                rows.append(row)
    columns = REPORT_COLUMNS + ("axis", "axis_value", "mi_w_supersample",
                                "cmi_w_selector")
    _emit(rows, columns, fmt, out)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="genbounds",
        description="Exact information-theoretic generalization bounds on "
                    "finite problems.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("report", "verify", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        config = _load_config(args.config)
        if args.command == "report":
            return cmd_report(config, args.out, args.format)
        if args.command == "verify":
            return cmd_verify(config, args.seed)
        return cmd_sweep(config, args.out, args.format)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 3
    except (ConfigError, InvalidDistributionError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    _sys.exit(main())

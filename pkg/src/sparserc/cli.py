"""Command-line surface: simulate data, estimate, evaluate, replicate.

All commands are driven by JSON config files carrying ``schema_version: 1``;
unknown keys are rejected before any computation.  Exit codes: 0 on success,
1 on usage or config errors, 2 when a run completed with warnings (clamped
probabilities, nonconvergent solves returning their best iterate).
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys

import numpy as np

from .basis import Domain
from .choicemodel import read_dataset_csv, write_dataset_csv
from .distribution import (
    DiscreteDistribution,
    joint_cdf,
    lattice_points,
    marginal_cdf,
    mean,
    true_mixture_cdf,
)
from .estimator import (
    FitResult,
    RefineOptions,
    SolverOptions,
    fit_asg,
    fit_fkrb,
    fit_from_json,
    fit_sg,
    fit_to_json,
)
from .quasirand import read_draws_csv
from .simulate import (
    McConfig,
    MixtureDgp,
    dgp_from_json,
    dgp_to_json,
    four_normal_mixture,
    make_dataset,
    report_to_json,
    run_experiment,
    two_normal_mixture,
    write_table_csv,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_WARNINGS = 2


class UsageError(Exception):
    """Configuration or invocation problem; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise UsageError(f"config {path} must be a JSON object")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise UsageError(
            f"config {path} must declare \"schema_version\": {SCHEMA_VERSION}"
        )
    return obj


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise UsageError(f"unknown keys in {where}: {', '.join(unknown)}")


def _get(obj: dict, key: str, default):
    value = obj.get(key, default)
    return default if value is None else value


def _parse_domain(obj: dict | None, dim: int) -> Domain:
    if obj is None:
        return Domain.cube(dim)
    _check_keys(obj, {"lower", "upper"}, "domain")
    try:
        domain = Domain(np.asarray(obj["lower"], float), np.asarray(obj["upper"], float))
    except (KeyError, ValueError) as exc:
        raise UsageError(f"invalid domain: {exc}") from None
    if domain.dim != dim:
        raise UsageError(f"domain has dimension {domain.dim}, data has {dim}")
    return domain


def _parse_solver(obj: dict | None) -> SolverOptions:
    obj = obj or {}
    _check_keys(obj, {"tol", "max_iter", "ridge"}, "solver")
    return SolverOptions(
        tol=float(_get(obj, "tol", 1e-8)),
        max_iter=int(_get(obj, "max_iter", 10_000)),
        ridge=float(_get(obj, "ridge", 0.0)),
        strict=False,
    )


def _parse_refinement(obj: dict | None, seed: int) -> RefineOptions:
    obj = obj or {}
    _check_keys(
        obj,
        {"steps", "points_per_step", "criterion", "selection", "k_folds", "max_level"},
        "refinement",
    )
    try:
        return RefineOptions(
            steps=int(_get(obj, "steps", 10)),
            points_per_step=int(_get(obj, "points_per_step", 1)),
            criterion=_get(obj, "criterion", "local_error"),
            selection=_get(obj, "selection", "cv_mse"),
            k_folds=int(_get(obj, "k_folds", 5)),
            max_level=int(_get(obj, "max_level", 5)),
            cv_seed=seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


_DGP_PRESET = re.compile(r"^(two|four)-normals-d(\d+)$")


def _dgp_from_preset(name: str) -> MixtureDgp:
    m = _DGP_PRESET.match(name)
    if not m:
        raise UsageError(
            f"unknown preset {name!r}; expected two-normals-d<D> or four-normals-d<D>"
        )
    dim = int(m.group(2))
    if dim < 1:
        raise UsageError("preset dimension must be >= 1")
    return two_normal_mixture(dim) if m.group(1) == "two" else four_normal_mixture(dim)


def _parse_dgp(config: dict) -> MixtureDgp:
    if config.get("preset"):
        return _dgp_from_preset(config["preset"])
    if config.get("dgp"):
        try:
            return dgp_from_json(config["dgp"])
        except (KeyError, ValueError) as exc:
            raise UsageError(f"invalid dgp: {exc}") from None
    raise UsageError("config needs either a preset or an explicit dgp")


def write_weights_csv(fit: FitResult, path) -> None:
    """Support points and their probability weights: beta_1..beta_D, weight."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"beta_{d + 1}" for d in range(fit.domain.dim)] + ["weight"])
        for row, w in zip(fit.support, fit.density_at_draws):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])


def read_weights_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = len(header) - 1
        support, weights = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim + 1:
                raise ValueError(f"{path}: line {lineno}: expected {dim + 1} columns")
            support.append([float(v) for v in row[:dim]])
            weights.append(float(row[dim]))
    return np.asarray(support), np.asarray(weights)


def write_cdf_csv(points: np.ndarray, values: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        dim = points.shape[1]
        writer.writerow([f"beta_{d + 1}" for d in range(dim)] + ["F_hat"])
        for row, v in zip(points, values):
            writer.writerow([repr(float(x)) for x in row] + [repr(float(v))])


def read_cdf_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = len(header) - 1
        points, values = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim + 1:
                raise ValueError(f"{path}: line {lineno}: expected {dim + 1} columns")
            points.append([float(v) for v in row[:dim]])
            values.append(float(row[dim]))
    return np.asarray(points), np.asarray(values)


def write_marginals_csv(fit: FitResult, path, points_per_dim: int = 201) -> None:
    """Per-dimension marginal distribution functions in long format."""
    dist = DiscreteDistribution.from_fit(fit)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dim", "t", "F_hat"])
        for d in range(fit.domain.dim):
            grid = np.linspace(fit.domain.lower[d], fit.domain.upper[d], points_per_dim)
            vals = marginal_cdf(dist, d, grid)
            for t, v in zip(grid, vals):
                writer.writerow([d + 1, repr(float(t)), repr(float(v))])


def read_marginals_csv(path) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    out: dict[int, tuple[list, list]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["dim", "t", "F_hat"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 3 columns")
            d = int(row[0])
            out.setdefault(d, ([], []))[0].append(float(row[1]))
            out[d][1].append(float(row[2]))
    return {d: (np.asarray(ts), np.asarray(vs)) for d, (ts, vs) in out.items()}


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    _check_keys(
        config,
        {"schema_version", "preset", "dgp", "n_units", "n_alts", "seed",
         "out_data", "out_truth"},
        "simulate config",
    )
    dgp = _parse_dgp(config)
    n_units = int(_get(config, "n_units", 1000))
    n_alts = int(_get(config, "n_alts", 5))
    seed = int(_get(config, "seed", 0))
    if n_units < 1 or n_alts < 1:
        raise UsageError("n_units and n_alts must be positive")
    out_data = _get(config, "out_data", "data.csv")
    out_truth = _get(config, "out_truth", "truth.json")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))
    data = make_dataset(dgp, n_units, n_alts, rng)
    try:
        write_dataset_csv(data, out_data)
        with open(out_truth, "w") as fh:
            json.dump(
                {
                    "schema_version": SCHEMA_VERSION,
                    "dgp": dgp_to_json(dgp),
                    "n_units": n_units,
                    "n_alts": n_alts,
                    "seed": seed,
                },
                fh,
                indent=2,
            )
    except OSError as exc:
        raise UsageError(f"cannot write output: {exc}") from None
    print(f"wrote {out_data} ({n_units} units x {n_alts} alternatives) and {out_truth}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    config = _load_config(args.config)
    _check_keys(
        config,
        {"schema_version", "estimator", "level", "q", "domain", "draws",
         "solver", "refinement", "seed"},
        "estimate config",
    )
    try:
        data = read_dataset_csv(args.data)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    estimator = _get(config, "estimator", "sg")
    if estimator not in ("sg", "asg", "fkrb"):
        raise UsageError(f"unknown estimator {estimator!r}")
    domain = _parse_domain(config.get("domain"), data.dim)
    solver = _parse_solver(config.get("solver"))
    seed = int(_get(config, "seed", 0))
    draws_cfg = config.get("draws") or {}
    _check_keys(draws_cfg, {"rule", "r", "burn_in"}, "draws")
    if _get(draws_cfg, "rule", "halton") != "halton":
        raise UsageError("only the halton draw rule is supported")
    r_draws = draws_cfg.get("r")
    r_draws = int(r_draws) if r_draws is not None else None
    burn_in = int(_get(draws_cfg, "burn_in", 20))

    if estimator == "fkrb":
        q = config.get("q")
        if q is None:
            raise UsageError("fkrb estimation requires \"q\"")
        fit = fit_fkrb(data, domain, int(q), solver=solver)
    else:
        level = int(_get(config, "level", 4))
        if estimator == "sg":
            fit = fit_sg(
                data, domain, level, r_draws=r_draws, solver=solver, burn_in=burn_in
            )
        else:
            refinement = _parse_refinement(config.get("refinement"), seed)
            fit = fit_asg(
                data, domain, level, r_draws=r_draws,
                refine_opts=refinement, solver=solver, burn_in=burn_in,
            )
    try:
        with open(args.out, "w") as fh:
            json.dump(fit_to_json(fit), fh, indent=2)
        if args.weights_csv:
            write_weights_csv(fit, args.weights_csv)
    except OSError as exc:
        raise UsageError(f"cannot write output: {exc}") from None

    warnings_ = list(fit.diagnostics.get("warnings", []))
    if fit.trace is not None and fit.trace.n_clamped_loglik:
        warnings_.append(f"{fit.trace.n_clamped_loglik} clamped fold probabilities")
    clamped = int(np.sum(fit.density_at_draws < 0))
    if clamped:
        warnings_.append(f"{clamped} negative density weights clamped")
    print(
        f"estimated {estimator} with {fit.n_parameters} parameters, "
        f"objective {fit.diagnostics['ssr']:.6g}, "
        f"kkt residual {fit.diagnostics['kkt_residual']:.2e}"
    )
    for w in warnings_:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_WARNINGS if warnings_ else EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        with open(args.fit) as fh:
            fit = fit_from_json(json.load(fh))
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load fit: {exc}") from None
    dist = DiscreteDistribution.from_fit(fit)
    if args.points:
        try:
            points = read_draws_csv(args.points)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from None
        if points.shape[1] != fit.domain.dim:
            raise UsageError(
                f"points have dimension {points.shape[1]}, fit has {fit.domain.dim}"
            )
    else:
        axes = [
            np.linspace(fit.domain.lower[d], fit.domain.upper[d], args.points_per_dim)
            for d in range(fit.domain.dim)
        ]
        points = lattice_points(axes)
    values = joint_cdf(dist, points)
    write_cdf_csv(points, values, args.out_cdf)
    write_marginals_csv(fit, args.out_marginals)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "estimator": fit.kind,
        "n_parameters": fit.n_parameters,
        "mean": mean(dist).tolist(),
        "eval_points": int(points.shape[0]),
        "ise": None,
    }
    if args.truth:
        try:
            with open(args.truth) as fh:
                truth_obj = json.load(fh)
            if truth_obj.get("schema_version") != SCHEMA_VERSION:
                raise ValueError("unsupported truth schema version")
            dgp = dgp_from_json(truth_obj["dgp"])
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot load truth: {exc}") from None
        if dgp.dim != fit.domain.dim:
            raise UsageError("truth and fit dimensions differ")
        truth_eval = true_mixture_cdf(
            dgp, points, n_samples=args.truth_samples, seed=0
        )
        diff = values - truth_eval.values
        summary["ise"] = float(diff @ diff) / points.shape[0]
    with open(args.out_summary, "w") as fh:
        json.dump(summary, fh, indent=2)
    print(
        f"evaluated {fit.kind} fit at {points.shape[0]} points"
        + (f", ise {summary['ise']:.6g}" if summary["ise"] is not None else "")
    )
    return EXIT_OK


_REPLICATE_PRESETS = {
    "table2-d2-n1000-scaled": {
        "preset_dgp": "two-normals-d2",
        "n_units": 1000,
        "replicates": 20,
        "seed": 20240,
        "sg_levels": [3],
        "asg_levels": [3],
        "fkrb_q": [7],
    },
    "adaptive-d2-n1000-scaled": {
        "preset_dgp": "four-normals-d2",
        "n_units": 1000,
        "replicates": 20,
        "seed": 20241,
        "sg_levels": [2],
        "asg_levels": [2],
        "fkrb_q": [],
    },
    "smoke": {
        "preset_dgp": "two-normals-d2",
        "n_units": 200,
        "replicates": 1,
        "seed": 7,
        "sg_levels": [2],
        "asg_levels": [],
        "fkrb_q": [],
        "r_draws": 500,
        "truth_samples": 200_000,
    },
}

_REPLICATE_KEYS = {
    "schema_version", "preset", "preset_dgp", "dgp", "n_units", "n_alts",
    "replicates", "seed", "r_draws", "burn_in", "sg_levels", "asg_levels",
    "fkrb_q", "refinement", "solver", "domain", "eval_points_per_dim",
    "eval_subsample", "truth_samples", "workers",
}


def cmd_replicate(args) -> int:
    config = _load_config(args.config)
    _check_keys(config, _REPLICATE_KEYS, "replicate config")
    if config.get("preset"):
        preset = _REPLICATE_PRESETS.get(config["preset"])
        if preset is None:
            raise UsageError(
                f"unknown replicate preset {config['preset']!r}; "
                f"available: {', '.join(sorted(_REPLICATE_PRESETS))}"
            )
        merged = dict(preset)
        merged.update({k: v for k, v in config.items() if k not in ("schema_version", "preset")})
        config = {"schema_version": SCHEMA_VERSION, **merged}
    if config.get("preset_dgp"):
        dgp = _dgp_from_preset(config["preset_dgp"])
    else:
        dgp = _parse_dgp(config)
    seed = int(_get(config, "seed", 0))
    workers = config.get("workers")
    if args.workers is not None:
        workers = args.workers
    domain = None
    if config.get("domain"):
        domain = _parse_domain(config["domain"], dgp.dim)
    try:
        mc = McConfig(
            dgp=dgp,
            n_units=int(_get(config, "n_units", 1000)),
            replicates=int(_get(config, "replicates", 20)),
            seed=seed,
            n_alts=int(_get(config, "n_alts", 5)),
            r_draws=(int(config["r_draws"]) if config.get("r_draws") else None),
            burn_in=int(_get(config, "burn_in", 20)),
            sg_levels=tuple(_get(config, "sg_levels", [])),
            asg_levels=tuple(_get(config, "asg_levels", [])),
            fkrb_q=tuple(_get(config, "fkrb_q", [])),
            refine=_parse_refinement(config.get("refinement"), seed),
            solver=_parse_solver(config.get("solver")),
            domain=domain,
            eval_points_per_dim=int(_get(config, "eval_points_per_dim", 10)),
            eval_subsample=(
                int(config["eval_subsample"]) if config.get("eval_subsample") else None
            ),
            truth_samples=int(_get(config, "truth_samples", 2_000_000)),
            workers=(int(workers) if workers else None),
        )
        mc.run_labels()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_experiment(mc)
    try:
        with open(args.report, "w") as fh:
            json.dump(report_to_json(report), fh, indent=2)
        write_table_csv(report, args.table)
    except OSError as exc:
        raise UsageError(f"cannot write output: {exc}") from None
    failed = sum(r.n_failed for r in report.runs)
    for run in report.runs:
        label = f"{run.kind}-{run.setting}"
        rmise = "n/a" if run.rmise is None else f"{run.rmise:.4f}"
        print(
            f"{label}: rmise {rmise}, mean parameters "
            f"{run.mean_parameters}, failures {run.n_failed}"
        )
    return EXIT_WARNINGS if failed else EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="sparserc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate a choice dataset from a mixture truth")
    p_sim.add_argument("config", help="JSON config")
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="fit an estimator to a dataset CSV")
    p_est.add_argument("config", help="JSON config")
    p_est.add_argument("data", help="dataset CSV")
    p_est.add_argument("--out", default="fit.json", help="output fit JSON")
    p_est.add_argument("--weights-csv", default=None, help="optional weight dump CSV")
    p_est.set_defaults(func=cmd_estimate)

    p_eval = sub.add_parser("evaluate", help="evaluate a fit's distribution function")
    p_eval.add_argument("fit", help="fit JSON")
    p_eval.add_argument("--truth", default=None, help="truth JSON for error metrics")
    p_eval.add_argument("--points", default=None, help="CSV of evaluation points")
    p_eval.add_argument("--points-per-dim", type=int, default=10)
    p_eval.add_argument("--truth-samples", type=int, default=2_000_000)
    p_eval.add_argument("--out-cdf", default="cdf.csv")
    p_eval.add_argument("--out-marginals", default="marginals.csv")
    p_eval.add_argument("--out-summary", default="summary.json")
    p_eval.set_defaults(func=cmd_evaluate)

    p_rep = sub.add_parser("replicate", help="run a Monte Carlo experiment")
    p_rep.add_argument("config", help="JSON config")
    p_rep.add_argument("--report", default="report.json", help="output report JSON")
    p_rep.add_argument("--table", default="table.csv", help="output summary table CSV")
    p_rep.add_argument("--workers", type=int, default=None, help="parallel replicate workers")
    p_rep.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

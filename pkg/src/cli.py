#!/usr/bin/env python3
"""
cli.py

Command-line surface: fit, path, simulate, influence and eval.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from src.core import DataError, Dataset, NumericalError
from src.influence import IfRequest, curve_design, describe, if_norm_curve
from src.irls import (
    FitConfig,
    FitResult,
    fit,
    fit_path,
    hgic,
    initial_beta,
    two_stage_fit,
)
from src.model import FittedModel, evaluate, score
from src.penalty import DEFAULT_SCAD_A, DEFAULT_WEIGHT_CAP, WeightKind, WeightScheme
from src.preprocess import LogTransform, Preprocessing, ingest
from src.sim import Contamination, ContaminationKind, SimScenario, run_experiment
from src.storage import read_json_list, read_json_object, to_jsonable, write_csv, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with EXIT_USAGE."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def configure_logging(verbosity: int = 0) -> None:
    """'[LEVEL] message' lines on stderr; -v for INFO, -vv for DEBUG."""
    level = logging.WARNING - 10 * min(verbosity, 2)
    logging.basicConfig(
        level=level,
        format="[%(levelname)s] %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from exc


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from exc


def _grid_spec(text: str) -> tuple[int, float]:
    parts = text.split(",")
    try:
        n_points, ratio = int(parts[0]), float(parts[1])
    except (IndexError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"expected 'n_points,ratio', got '{text}'") from exc
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'n_points,ratio', got '{text}'")
    return n_points, ratio


def _add_estimator_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=0.1, help="DPD tuning parameter (default: 0.1)")
    parser.add_argument(
        "--scheme",
        choices=[k.value for k in WeightKind],
        default=WeightKind.CONSTANT.value,
        help="penalty weights (default: lasso)",
    )
    parser.add_argument("--scad-a", type=float, default=DEFAULT_SCAD_A, help="SCAD a (default: 3.7)")
    parser.add_argument("--weight-cap", type=float, default=DEFAULT_WEIGHT_CAP, help="weight ceiling (default: 1e6)")
    parser.add_argument("--max-iter", type=int, default=100, help="IRLS iterations (default: 100)")
    parser.add_argument("--tol", type=float, default=1e-7, help="relative objective tolerance (default: 1e-7)")
    parser.add_argument("--freeze-weights", action="store_true", help="keep adaptive weights fixed at stage-2 entry")


def _add_data_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", type=Path, required=True, help="CSV with a 'y' column")
    parser.add_argument("--corr-threshold", type=float, default=None, help="keep columns with |corr(x, y)| above this")
    parser.add_argument(
        "--transform",
        choices=[t.value for t in LogTransform],
        default=LogTransform.NONE.value,
        help="log transform after clamping (default: none)",
    )
    parser.add_argument("--floor", type=float, default=None, help="clamp values below this")
    parser.add_argument("--ceiling", type=float, default=None, help="clamp values above this")
    parser.add_argument("--min-fold", type=float, default=None, help="fold-change filter: max/min threshold")
    parser.add_argument("--min-range", type=float, default=None, help="fold-change filter: max-min threshold")
    parser.add_argument("--out", type=Path, default=None, help="results JSON")
    parser.add_argument("--model", type=Path, default=None, help="model JSON written for later scoring")


def build_parser() -> argparse.ArgumentParser:
    """The full command-line parser."""
    parser = _Parser(prog="awdpd", description="Robust sparse logistic regression (AW-DPD-LASSO).")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v INFO, -vv DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit at one lambda")
    _add_data_args(p_fit)
    _add_estimator_args(p_fit)
    p_fit.add_argument("--lambda", dest="lam", type=float, required=True, help="penalty level")
    p_fit.set_defaults(handler=_cmd_fit)

    p_path = sub.add_parser("path", help="fit a lambda path and select by HGIC")
    _add_data_args(p_path)
    _add_estimator_args(p_path)
    p_path.add_argument(
        "--lambda-grid",
        type=_grid_spec,
        default=(50, 1e-3),
        help="n_points,ratio below lambda_max (default: 50,1e-3)",
    )
    p_path.set_defaults(handler=_cmd_path)

    p_sim = sub.add_parser("simulate", help="Monte-Carlo contamination experiment")
    p_sim.add_argument("--n", type=int, default=100)
    p_sim.add_argument("--k", type=int, default=500)
    p_sim.add_argument("--rho", type=float, default=0.5)
    p_sim.add_argument("--eps", type=float, default=0.0)
    p_sim.add_argument(
        "--contamination",
        choices=[c.value for c in ContaminationKind],
        default=ContaminationKind.NONE.value,
    )
    p_sim.add_argument("--type-a-prob", type=float, default=0.5, help="share of type (a) leverage points")
    p_sim.add_argument("--reps", type=int, default=100)
    p_sim.add_argument("--methods", type=Path, default=None, help="JSON list of method configs")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--workers", type=int, default=1, help="replications run in this many processes")
    p_sim.add_argument("--out", type=Path, default=None, help="table CSV")
    p_sim.set_defaults(handler=_cmd_simulate)

    p_if = sub.add_parser("influence", help="influence-function norm curve")
    p_if.add_argument("--alpha", type=float, default=0.5)
    p_if.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p_if.add_argument("--beta", type=_float_list, default=(3.0, 2.0), help="true slopes (intercept 0)")
    p_if.add_argument("--scheme", choices=[k.value for k in WeightKind], default=WeightKind.HARD_THRESHOLD.value)
    p_if.add_argument("--y-t", type=int, choices=(0, 1), default=1, help="label of the contamination point")
    p_if.add_argument("--n", type=int, default=100)
    p_if.add_argument("--t-min", type=float, default=-100.0)
    p_if.add_argument("--t-max", type=float, default=100.0)
    p_if.add_argument("--t-points", type=int, default=201)
    p_if.add_argument("--seed", type=int, default=0)
    p_if.add_argument("--out", type=Path, default=None, help="curve CSV")
    p_if.set_defaults(handler=_cmd_influence)

    p_eval = sub.add_parser("eval", help="score a saved model on a CSV")
    p_eval.add_argument("--model", type=Path, required=True)
    p_eval.add_argument("--data", type=Path, required=True)
    p_eval.add_argument("--exclude-rows", type=_int_list, default=(), help="1-based rows to leave out")
    p_eval.add_argument("--out", type=Path, default=None, help="report JSON")
    p_eval.set_defaults(handler=_cmd_eval)
    return parser


def _scheme(args: argparse.Namespace) -> WeightScheme:
    return WeightScheme(WeightKind(args.scheme), a=args.scad_a, cap=args.weight_cap)


def _fit_config(args: argparse.Namespace, **overrides: Any) -> FitConfig:
    return FitConfig(
        alpha=args.alpha,
        scheme=_scheme(args),
        max_iter=args.max_iter,
        obj_tol=args.tol,
        freeze_weights=args.freeze_weights,
        **overrides,
    )


def _preprocessing(args: argparse.Namespace) -> Preprocessing:
    return Preprocessing(
        corr_threshold=args.corr_threshold,
        transform=LogTransform(args.transform),
        floor=args.floor,
        ceiling=args.ceiling,
        min_fold=args.min_fold,
        min_range=args.min_range,
    )


def _emit(payload: dict[str, Any], out: Path | None) -> int:
    """Print the payload and, when asked, write it to out."""
    print(json.dumps(to_jsonable(payload), indent=2, sort_keys=True))
    if out is not None and not write_json(out, payload):
        return EXIT_DATA
    return EXIT_OK


def _save_model(
    path: Path | None,
    result: FitResult,
    data: Dataset,
    cfg: FitConfig,
    prep: Preprocessing,
) -> bool:
    if path is None:
        return True
    model = FittedModel.from_fit(result, data, cfg.alpha, cfg.scheme, prep)
    return write_json(path, model.to_dict())


def _fit_summary(data: Dataset, result: FitResult) -> dict[str, Any]:
    summary: dict[str, Any] = {
        "fit": result.to_dict(data.names),
        "training": score(data.predict_proba(result.beta_hat), data.y).to_dict(),
    }
    if data.n > math.e:
        summary["hgic"] = hgic(data, result.beta_hat)
    return summary


def _cmd_fit(args: argparse.Namespace) -> int:
    data, prep = ingest(args.data, _preprocessing(args))
    cfg = _fit_config(args, lam=args.lam)
    beta0 = initial_beta(data)
    if cfg.scheme.is_adaptive:
        stage_one_cfg = replace(
            cfg,
            lam=None,
            scheme=WeightScheme(WeightKind.CONSTANT, cap=cfg.scheme.cap),
            freeze_weights=False,
        )
        beta0 = fit_path(data, stage_one_cfg, beta0).selected.beta_hat
    result = fit(data, cfg, beta0)
    if not _save_model(args.model, result, data, cfg, prep):
        return EXIT_DATA
    payload = {
        "command": "fit",
        "config": cfg.to_dict(),
        "preprocessing": prep.to_dict(),
        **_fit_summary(data, result),
    }
    return _emit(payload, args.out)


def _cmd_path(args: argparse.Namespace) -> int:
    data, prep = ingest(args.data, _preprocessing(args))
    n_points, ratio = args.lambda_grid
    cfg = _fit_config(args, n_lambda=n_points, lambda_ratio=ratio)
    path = two_stage_fit(data, cfg)
    if not _save_model(args.model, path.selected, data, cfg, prep):
        return EXIT_DATA
    payload = {
        "command": "path",
        "config": cfg.to_dict(),
        "preprocessing": prep.to_dict(),
        **path.to_dict(data.names),
        "training": score(data.predict_proba(path.selected.beta_hat), data.y).to_dict(),
    }
    return _emit(payload, args.out)


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = SimScenario(
        n=args.n,
        k=args.k,
        rho=args.rho,
        contamination=Contamination(ContaminationKind(args.contamination), args.eps),
        seed=args.seed,
        leverage_type_a_prob=args.type_a_prob,
    )
    if args.methods is None:
        methods = [
            FitConfig(alpha=0.1),
            FitConfig(alpha=0.1, scheme=WeightScheme(WeightKind.HARD_THRESHOLD)),
        ]
    else:
        raw = read_json_list(args.methods)
        if raw is None:
            return EXIT_DATA
        try:
            methods = [FitConfig.from_dict(item) for item in raw]
        except (KeyError, TypeError) as exc:
            raise DataError(f"Invalid method config in '{args.methods}': {exc}") from exc
    table = run_experiment(scenario, methods, args.reps, workers=args.workers)
    frame = table.to_frame()
    if args.out is None:
        print(frame.to_csv(index=False, float_format="%.17g"), end="")
        return EXIT_OK
    return EXIT_OK if write_csv(args.out, frame) else EXIT_DATA


def _cmd_influence(args: argparse.Namespace) -> int:
    if args.t_points < 1:
        raise ValueError("--t-points must be >= 1.")
    data, beta = curve_design(args.beta, n=args.n, seed=args.seed)
    request = IfRequest(
        data=data,
        beta=beta,
        alpha=args.alpha,
        lam=args.lam,
        scheme=WeightScheme(WeightKind(args.scheme)),
        y_t=float(args.y_t),
    )
    frame = if_norm_curve(request, np.linspace(args.t_min, args.t_max, args.t_points))
    logger.info("Influence curve for %s", describe(request))
    if args.out is None:
        print(frame.to_csv(index=False, float_format="%.17g"), end="")
        return EXIT_OK
    return EXIT_OK if write_csv(args.out, frame) else EXIT_DATA


def _cmd_eval(args: argparse.Namespace) -> int:
    raw = read_json_object(args.model)
    if raw is None:
        return EXIT_DATA
    try:
        model = FittedModel.from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"Invalid model file '{args.model}': {exc}") from exc
    report = evaluate(model, args.data, args.exclude_rows)
    payload = {"command": "eval", "excluded_rows": list(args.exclude_rows), **report.to_dict()}
    return _emit(payload, args.out)


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run one command and map failures to exit codes."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except DataError as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    except NumericalError as exc:
        logger.error("%s", exc)
        if exc.state:
            logger.debug("State at failure: %s", exc.state)
        return EXIT_NUMERICAL
    except ValueError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

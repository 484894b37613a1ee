"""Command-line front-end emitting one JSON report per line."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from . import boxtrans, channel_div, state_div
from .config import ConfigurationError, Settings, load_settings
from .qobjects import ChannelBox, unitary_channel
from .runner import BatchJob, JobStatus, run_batch
from .sdp import json_float
from .specs import ParsedBox, SpecError, load_box, load_channel, load_superchannel
from .state_div import DivergenceError, DivergenceSelector


_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2

BOUND_SUITES = (
    "smooth-min-max",
    "cq-dmax-upper",
    "dmax-lower",
    "pseudo-continuity",
    "parallel-converse",
    "dmin-petz",
    "limits",
)

_DEFAULT_ALPHA = {
    "cq-dmax-upper": 2.0,
    "dmax-lower": 0.75,
    "pseudo-continuity": 0.75,
    "parallel-converse": 0.75,
    "dmin-petz": 0.5,
}

Values = Dict[str, Any]
Computation = Callable[[], Tuple[Values, Values]]


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


def _digest(paths: Sequence[str]) -> Optional[str]:
    digest = hashlib.sha256()
    for path in paths:
        try:
            digest.update(Path(path).read_bytes())
        except OSError:
            return None
    return digest.hexdigest()


INPUT_ERRORS = (SpecError, ConfigurationError, DivergenceError)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, INPUT_ERRORS):
        return EXIT_INPUT
    return EXIT_FAILURE


def _config_echo(settings: Settings, args: argparse.Namespace) -> Dict[str, Any]:
    echo = settings.model_dump(mode="json")
    echo["eps"] = getattr(args, "eps", None)
    return echo


def _report(
    task: str,
    paths: Sequence[str],
    config: Dict[str, Any],
    started: datetime,
    elapsed: float,
    values: Optional[Values] = None,
    certificate: Optional[Values] = None,
    error: Optional[str] = None,
) -> Dict[str, Any]:
    return {
        "task": task,
        "inputs": list(paths),
        "inputs_digest": _digest(paths),
        "values": values or {},
        "certificate": certificate or {},
        "config": config,
        "timestamp": {"started": started.isoformat(), "elapsed_seconds": elapsed},
        "error": error,
    }


def _timed(task: str, paths: Sequence[str], config: Dict[str, Any], compute: Computation) -> Callable[[], Dict[str, Any]]:
    def run() -> Dict[str, Any]:
        started = _utcnow()
        clock = time.perf_counter()
        values, certificate = compute()
        _LOGGER.info("Finished %s on %s", task, ", ".join(paths) or "-")
        return _report(task, paths, config, started, time.perf_counter() - clock, values, certificate)

    return run


# ---------------------------------------------------------------------------
# tasks


def _divergence(parsed: ParsedBox, selector: DivergenceSelector, eps: float, settings: Settings) -> Tuple[Values, Values]:
    rank_tol = settings.linalg.rank_tol
    smooth = eps > 0
    if smooth and selector.kind not in ("dmin", "dmax"):
        raise DivergenceError("Smoothing applies only to the dmin and dmax selectors")

    if parsed.states is not None:
        rho, sigma = parsed.states
        if selector.kind == "dmin" and smooth:
            value = state_div.dmin_eps(rho, sigma, eps, settings.solver)
        elif selector.kind == "dmax" and smooth:
            value = state_div.dmax_eps(rho, sigma, eps, settings.solver)
        else:
            value = state_div.state_divergence(selector, rho, sigma, rank_tol)
        return {"value": json_float(value), "level": "state", "divergence": str(selector)}, {"method": "closed form"}

    if parsed.cq is not None and not smooth:
        value = channel_div.cq_divergence(parsed.cq, selector, rank_tol)
        return {"value": json_float(value), "level": "cq", "divergence": str(selector)}, {"method": "closed form"}

    box = parsed.box
    if selector.kind in ("diamond", "trace"):
        report = channel_div.diamond_distance(box.first, box.second, settings.solver)
    elif selector.kind == "dmax" and not smooth:
        value = channel_div.channel_dmax(box, rank_tol)
        certificate = {"method": "maximally entangled input"}
        if math.isinf(value):
            certificate["infinity_source"] = "support"
        return {"value": json_float(value), "level": "channel", "divergence": str(selector)}, certificate
    elif selector.kind == "dmax":
        report = channel_div.channel_dmax_eps(
            box, eps, settings.solver, rank_tol, settings.boxes.validation_tol
        )
    elif selector.kind == "dmin":
        report = channel_div.channel_dmin_eps(box, eps, settings.solver)
    else:
        report = channel_div.channel_div_heuristic(selector, box, settings=settings.heuristic, rank_tol=rank_tol)
    payload = report.serialise()
    values = {
        "value": payload.pop("value"),
        "status": payload.pop("status"),
        "level": "channel",
        "divergence": str(selector),
    }
    return values, payload


def _diamond(parsed: ParsedBox, settings: Settings) -> Tuple[Values, Values]:
    report = channel_div.diamond_distance(parsed.box.first, parsed.box.second, settings.solver)
    payload = report.serialise()
    return {"value": payload.pop("value"), "status": payload.pop("status")}, payload


def _protocol(result: boxtrans.ProtocolResult) -> Tuple[Values, Values]:
    payload = result.serialise()
    values = {
        "value": payload["log2M"],
        "status": payload["status"],
        "perfectly_distinguishable": payload["perfectly_distinguishable"],
        "epsilon": payload["epsilon"],
    }
    return values, {"superchannel": payload["superchannel"]}


def _transform(source: ChannelBox, target: ChannelBox, settings: Settings) -> Tuple[Values, Values]:
    result = boxtrans.transform_error(source, target, settings)
    payload = result.serialise()
    values = {"value": payload.pop("epsilon_star"), "status": payload.pop("status")}
    return values, payload


def _verify(args: argparse.Namespace, settings: Settings) -> Tuple[Values, Values]:
    tol = settings.linalg.hermiticity_tol
    theta = load_superchannel(args.superchannel, settings.boxes.validation_tol, tol)
    source = load_box(args.source, tol).box
    target = load_box(args.target, tol).box
    if theta.source_dims != (source.in_dim, source.out_dim):
        raise SpecError(f"superchannel expects channels of dims {theta.source_dims}", "--source")
    if theta.target_dims != (target.in_dim, target.out_dim):
        raise SpecError(f"superchannel produces channels of dims {theta.target_dims}", "--target")
    eps_first, second_residual = boxtrans.verify_protocol(theta, source, target, settings)
    values = {"eps_first": json_float(eps_first), "second_residual": json_float(second_residual)}
    return values, {"dims": list(theta.dims)}


def _bounds(args: argparse.Namespace, parsed: ParsedBox, settings: Settings) -> Tuple[Values, Values]:
    suite = args.suite
    alpha = args.alpha if args.alpha is not None else _DEFAULT_ALPHA.get(suite)
    box = parsed.box
    if suite == "smooth-min-max":
        report = boxtrans.bound_smooth_min_max(box, args.eps, args.eps2, settings)
    elif suite == "cq-dmax-upper":
        if parsed.cq is None:
            raise SpecError("cq-dmax-upper needs a cq box document", "kind")
        report = boxtrans.bound_cq_smooth_dmax_upper(parsed.cq, alpha, args.eps, settings)
    elif suite == "dmax-lower":
        report = boxtrans.bound_smooth_dmax_lower(box, alpha, args.eps, args.kind, settings)
    elif suite == "pseudo-continuity":
        other = load_channel(args.other, settings.linalg.hermiticity_tol) if args.other else box.first
        if (other.in_dim, other.out_dim) != (box.in_dim, box.out_dim):
            raise SpecError("channel dims differ from the box", "--other")
        report = boxtrans.bound_pseudo_continuity(args.kind, alpha, box.first, other, box.second, settings)
    elif suite == "parallel-converse":
        if not args.target:
            raise SpecError("parallel-converse needs --target", "--target")
        target = load_box(args.target, settings.linalg.hermiticity_tol).box
        report = boxtrans.bound_parallel_converse(box, target, args.n, args.m, args.eps, alpha, args.kind, settings)
    elif suite == "dmin-petz":
        report = boxtrans.bound_smooth_dmin_petz(box, alpha, args.eps, settings)
    else:
        table = channel_div.smoothing_limit_check(box, args.eps_grid, settings.solver)
        payload = table.serialise()
        return {"passed": payload["passed"], "final_gap": payload["final_gap"]}, payload
    payload = report.serialise()
    values = {"passed": payload["passed"], "lhs": payload["lhs"], "rhs": payload["rhs"], "slack": payload["slack"]}
    return values, {"label": payload["label"], "name": payload["name"], "details": payload["details"]}


def _demo_acin(settings: Settings) -> Tuple[Values, Values]:
    """Exact hull values for (id, diag(1, i)) and its second tensor power, with SDP cross-checks."""

    unitary = np.diag([1.0, 1j])
    box = ChannelBox(unitary_channel(np.eye(2)), unitary_channel(unitary))
    values: Values = {}
    certificate: Values = {}
    for copies in (1, 2):
        power = np.kron(unitary, unitary) if copies == 2 else unitary
        values[str(copies)] = json_float(channel_div.unitary_dmin(power))
        report = channel_div.channel_dmin(boxtrans.tensor_power_box(box, copies, settings.boxes.tensor_dim_cap), settings.solver)
        certificate[str(copies)] = {
            "sdp_value": json_float(report.value),
            "status": report.status,
            "infinity_source": report.infinity_source,
        }
    return values, certificate


# ---------------------------------------------------------------------------
# argument parsing


def _eps_grid(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid eps grid '{text}'") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML settings file (default: $CHANNEL_BOXES_CONFIG or channel_boxes.yaml)")
    common.add_argument("--seed", type=int, help="seed for heuristic restarts (default 0)")
    common.add_argument("--tol", type=float, help="solver feasibility tolerance (default 1e-8)")
    common.add_argument("--gap-tol", type=float, help="primal/dual gap tolerance (default 1e-7)")
    common.add_argument("--restarts", type=int, help="heuristic restarts (default 8)")
    common.add_argument("--eps", type=float, default=0.0, help="smoothing parameter (default 0)")
    common.add_argument("--jobs", type=int, help="parallel workers across input files (default 1)")
    common.add_argument("--output", help="write the report stream to this file instead of stdout")
    common.add_argument("--log-level", help="logging level (default INFO)")

    parser = argparse.ArgumentParser(prog="channel-boxes", description="Quantum channel-box distinguishability")
    commands = parser.add_subparsers(dest="command", required=True)

    divergence = commands.add_parser("divergence", parents=[common], help="state, cq or channel divergence")
    divergence.add_argument("inputs", nargs="+", help="box documents")
    divergence.add_argument(
        "--div",
        default="dmax",
        help="relative | petz:A | sandwiched:A | fidelity | dmin | dmax | trace | diamond",
    )

    diamond = commands.add_parser("diamond", parents=[common], help="diamond distance of each box")
    diamond.add_argument("inputs", nargs="+", help="box documents")

    transform = commands.add_parser("transform", parents=[common], help="box transformation error")
    transform.add_argument("--source", required=True)
    transform.add_argument("--target", required=True)

    for name, text in (("distill", "distillation to the standard box"), ("dilute", "dilution from the standard box")):
        protocol = commands.add_parser(name, parents=[common], help=text)
        protocol.add_argument("--box", dest="inputs", action="append", required=True, help="box document")

    bounds = commands.add_parser("bounds", parents=[common], help="inequality suites")
    bounds.add_argument("suite", choices=BOUND_SUITES)
    bounds.add_argument("--box", dest="inputs", action="append", required=True, help="box document")
    bounds.add_argument("--alpha", type=float)
    bounds.add_argument("--eps2", type=float, default=0.0)
    bounds.add_argument("--kind", choices=("sandwiched", "petz"), default="sandwiched")
    bounds.add_argument("--other", help="channel document for the second channel of pseudo-continuity")
    bounds.add_argument("--target", help="target box for parallel-converse")
    bounds.add_argument("--n", type=int, default=1)
    bounds.add_argument("--m", type=int, default=1)
    bounds.add_argument("--eps-grid", type=_eps_grid, default=[1e-1, 1e-2, 1e-3, 1e-4])

    verify = commands.add_parser("verify", parents=[common], help="replay a serialised superchannel")
    verify.add_argument("--superchannel", required=True)
    verify.add_argument("--source", required=True)
    verify.add_argument("--target", required=True)

    demo = commands.add_parser("demo", parents=[common], help="demonstrations")
    demo.add_argument("name", choices=("acin",))
    return parser


@dataclass(slots=True)
class _Planned:
    job: BatchJob
    task: str
    paths: List[str]


def _plan(task: str, paths: List[str], config: Dict[str, Any], compute: Computation, job_id: str = "0") -> _Planned:
    label = f"{task} {', '.join(paths)}" if paths else task
    return _Planned(BatchJob(job_id, label, _timed(task, paths, config, compute)), task, paths)


def _jobs(args: argparse.Namespace, settings: Settings, config: Dict[str, Any]) -> List[_Planned]:
    command = args.command

    def load(path: str) -> ParsedBox:
        return load_box(path, settings.linalg.hermiticity_tol)

    if command == "transform":
        paths = [args.source, args.target]
        return [_plan(command, paths, config, lambda: _transform(load(args.source).box, load(args.target).box, settings))]
    if command == "verify":
        paths = [args.superchannel, args.source, args.target]
        return [_plan(command, paths, config, lambda: _verify(args, settings))]
    if command == "demo":
        return [_plan("demo acin", [], config, lambda: _demo_acin(settings))]

    selector = DivergenceSelector.parse(args.div) if command == "divergence" else None

    def for_path(path: str) -> Computation:
        if command == "divergence":
            return lambda: _divergence(load(path), selector, args.eps, settings)
        if command == "diamond":
            return lambda: _diamond(load(path), settings)
        if command == "distill":
            return lambda: _protocol(boxtrans.distill_eps(load(path).box, args.eps, settings))
        if command == "dilute":
            return lambda: _protocol(boxtrans.dilute_eps(load(path).box, args.eps, settings))
        return lambda: _bounds(args, load(path), settings)

    task = f"bounds {args.suite}" if command == "bounds" else command
    return [_plan(task, [path], config, for_path(path), str(index)) for index, path in enumerate(args.inputs)]


def _emit(reports: Sequence[Dict[str, Any]], stream: TextIO) -> None:
    for report in reports:
        stream.write(json.dumps(report, sort_keys=True) + "\n")


def _failure_report(task: str, paths: Sequence[str], config: Dict[str, Any], exc: BaseException) -> Dict[str, Any]:
    return _report(task, paths, config, _utcnow(), 0.0, error=f"{type(exc).__name__}: {exc}")


def run(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> int:
    """Parse ``argv``, run every job and write the report stream; returns the exit status."""

    args = build_parser().parse_args(argv)
    stdout = stdout or sys.stdout
    try:
        settings = load_settings(args.config).with_overrides(
            tol=args.tol,
            gap_tol=args.gap_tol,
            restarts=args.restarts,
            seed=args.seed,
            jobs=args.jobs,
            log_level=args.log_level,
        )
    except ConfigurationError as exc:
        _emit([_failure_report(args.command, [], {}, exc)], stdout)
        return EXIT_INPUT

    logging.basicConfig(level=getattr(logging, settings.run.log_level), stream=sys.stderr)
    config = _config_echo(settings, args)
    try:
        planned = _jobs(args, settings, config)
    except ValueError as exc:
        _emit([_failure_report(args.command, getattr(args, "inputs", None) or [], config, exc)], stdout)
        return exit_code_for(exc)

    statuses: List[JobStatus] = run_batch([item.job for item in planned], settings.run.jobs)
    reports: List[Dict[str, Any]] = []
    code = EXIT_OK
    for item, status in zip(planned, statuses):
        if status.result is not None:
            reports.append(status.result)
            continue
        exc = status.exception or RuntimeError(status.error or "job did not finish")
        _LOGGER.error("%s failed: %s", item.job.label, exc)
        reports.append(_failure_report(item.task, item.paths, config, exc))
        code = max(code, exit_code_for(exc))

    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            _emit(reports, handle)
    else:
        _emit(reports, stdout)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

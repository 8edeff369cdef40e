"""Command-line front end.

Exit codes: 0 success, 1 selftest failure, 2 invalid input,
3 inconclusive verdict (``classify`` only), 4 numeric range error or a
state without exponential coordinates.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .husimi_map import NotInteriorSeparable, to_coordinates
from .io import (
    MatrixFormatError,
    load_operator,
    load_state,
    operator_to_json,
    rows_to_csv,
    save_json,
)
from .linalg_core import DimensionError, Dims, hs_norm
from .minimizer import SolverConfig, minimize, minimize_sequence
from .objective import EXPONENTIAL, Form, ObjectiveRangeError, ObjectiveSpec
from .product_measure import sample_haar, werner
from .selftest import format_table, run_checks
from .separability import (
    INCONCLUSIVE,
    ClassifierConfig,
    MeasureSettings,
    classify,
    extract_witness,
    ppt_oracle,
    reconstruct,
    verify_witness,
)

log = logging.getLogger("sepcoord")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_INCONCLUSIVE = 3
EXIT_RANGE = 4

COMMANDS = ("classify", "coordinatize", "reconstruct", "witness", "werner-sweep", "selftest")
DEFAULT_SEED = 0
FRESH_WITNESS_SAMPLES = 10_000


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    dims: tuple[int, ...] | None = None
    measure: MeasureSettings = field(default_factory=MeasureSettings)
    orders: tuple[int, ...] = ClassifierConfig.orders
    grad_tol: float = SolverConfig.grad_tol
    bound_threshold: float = ClassifierConfig.bound_threshold
    output_path: str | None = None
    csv_path: str | None = None
    trace_path: str | None = None
    grid: int = 21
    form_order: int | None = None

    def classifier(self) -> ClassifierConfig:
        return ClassifierConfig(
            orders=self.orders,
            bound_threshold=self.bound_threshold,
            measure=self.measure,
            solver=SolverConfig(grad_tol=self.grad_tol),
        )

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "input": self.input_path,
            "dims": list(self.dims) if self.dims else None,
            "measure": self.measure.to_dict(),
            "orders": list(self.orders),
            "grad_tol": self.grad_tol,
            "bound_threshold": self.bound_threshold,
            "grid": self.grid,
            "form": str(Form(self.form_order)),
        }


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sepcoord", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"sepcoord {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", help="state (or operator, for reconstruct) in matrix JSON format")
    p.add_argument("--dims", type=_int_list, help="factor dims, e.g. 2,2 (checked against the input)")
    p.add_argument("--measure", choices=("mc", "design"), default="mc")
    p.add_argument("--samples", type=int, default=MeasureSettings.samples, help="Monte Carlo draws M")
    p.add_argument("--unbalanced", action="store_true", help="plain Monte Carlo instead of basis-completed draws")
    p.add_argument("--design-strength", type=int, default=MeasureSettings.strength)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--orders", type=_int_list, default=ClassifierConfig.orders)
    p.add_argument("--grad-tol", type=float, default=SolverConfig.grad_tol)
    p.add_argument("--bound-threshold", type=float, default=ClassifierConfig.bound_threshold)
    p.add_argument("--order", type=int, help="binomial order for reconstruct (default: exponential)")
    p.add_argument("--grid", type=int, default=21, help="number of Werner parameters for werner-sweep")
    p.add_argument("--output", help="JSON report path (default: stdout)")
    p.add_argument("--csv", help="CSV path for B_k trajectories or sweep rows")
    p.add_argument("--trace", help="JSON-lines path for solver iteration traces")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        input_path=args.input,
        dims=args.dims,
        measure=MeasureSettings(
            kind=args.measure,
            samples=args.samples,
            seed=args.seed,
            strength=args.design_strength,
            balanced=not args.unbalanced,
        ),
        orders=args.orders,
        grad_tol=args.grad_tol,
        bound_threshold=args.bound_threshold,
        output_path=args.output,
        csv_path=args.csv,
        trace_path=args.trace,
        grid=args.grid,
        form_order=args.order,
    )


class _Run:
    """Accumulates report pieces for one invocation."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.report = {
            "tool": "sepcoord",
            "version": __version__,
            "config": cfg.to_dict(),
            "seeds": {"measure": cfg.measure.seed},
        }
        self.traces: list[str] = []

    def add_traces(self, label: str, reports) -> None:
        for r in reports:
            for row in r.trace:
                self.traces.append(json.dumps({"solve": f"{label}:{r.form}", **row}))

    def finish(self, result: dict, stdout: bool = True) -> None:
        self.report["result"] = result
        text = save_json(self.report, self.cfg.output_path)
        if self.cfg.output_path is None and stdout:
            sys.stdout.write(text)
        if self.cfg.trace_path:
            Path(self.cfg.trace_path).write_text("".join(line + "\n" for line in self.traces))

    def write_csv(self, header, rows, default_stdout=False) -> None:
        text = rows_to_csv(header, rows)
        if self.cfg.csv_path:
            Path(self.cfg.csv_path).write_text(text)
        elif default_stdout:
            sys.stdout.write(text)


def _load_state(cfg: RunConfig):
    if not cfg.input_path:
        raise MatrixFormatError(f"{cfg.command} needs --input")
    rho = load_state(cfg.input_path)
    _check_dims(cfg, rho.dims)
    return rho


def _check_dims(cfg: RunConfig, dims: Dims) -> None:
    if cfg.dims and tuple(cfg.dims) != dims.factor_dims:
        raise DimensionError(f"--dims {list(cfg.dims)} does not match input dims {list(dims.factor_dims)}")


def _measure_report(m) -> dict:
    return {"label": m.label(), "kind": m.kind, "points": len(m), "seed": m.seed, "strength": m.strength}


def cmd_classify(run: _Run) -> int:
    cfg = run.cfg
    rho = _load_state(cfg)
    c = classify(rho, cfg.classifier())
    run.add_traces("classify", c.reports + ([c.exp_solve] if c.exp_solve else []))
    result = c.to_dict()
    result["measure"] = _measure_report(c.measure)
    if rho.dims.n_factors == 2:
        ppt = ppt_oracle(rho)
        result["ppt_oracle"] = {"status": ppt.status, "min_eigenvalue": ppt.min_eigenvalue}
    run.finish(result)
    run.write_csv(
        ["k", "bk_norm", "gk_value"],
        [(k, n, r.value) for (k, n), r in zip(c.bk_norms, c.reports)],
    )
    return EXIT_INCONCLUSIVE if c.verdict == INCONCLUSIVE else EXIT_OK


def cmd_coordinatize(run: _Run) -> int:
    cfg = run.cfg
    rho = _load_state(cfg)
    m = cfg.measure.build(rho.dims)
    try:
        coords = to_coordinates(rho, m, SolverConfig(grad_tol=cfg.grad_tol))
    except NotInteriorSeparable as exc:
        run.add_traces("coordinatize", [exc.report])
        run.finish({"status": "NotInteriorSeparable", "solve": exc.report.to_dict(), "measure": _measure_report(m)})
        return EXIT_RANGE
    run.add_traces("coordinatize", [coords.solve])
    result = coords.to_dict()
    result["status"] = "ok"
    result["measure"] = _measure_report(m)
    result["reconstruction_error"] = hs_norm(reconstruct(coords.solve.minimizer, m) - rho)
    run.finish(result)
    return EXIT_OK


def cmd_reconstruct(run: _Run) -> int:
    cfg = run.cfg
    if not cfg.input_path:
        raise MatrixFormatError("reconstruct needs --input")
    b = load_operator(cfg.input_path)
    _check_dims(cfg, b.dims)
    m = cfg.measure.build(b.dims)
    form = Form(cfg.form_order)
    out = reconstruct(b, m, form)
    run.finish(
        {
            "form": str(form),
            "operator": operator_to_json(out),
            "trace": out.trace(),
            "min_eigenvalue": float(out.eigvalsh()[0]),
            "measure": _measure_report(m),
        }
    )
    return EXIT_OK


def cmd_witness(run: _Run) -> int:
    cfg = run.cfg
    rho = _load_state(cfg)
    m = cfg.measure.build(rho.dims)
    solver = SolverConfig(grad_tol=cfg.grad_tol)
    reports = minimize_sequence(rho, m, cfg.orders, solver)
    exp = minimize(ObjectiveSpec(rho, m, EXPONENTIAL), replace(solver, initial=reports[-1].minimizer))
    run.add_traces("witness", reports + [exp])
    try:
        w = extract_witness(rho, reports + [exp], m)
    except ValueError as exc:
        run.finish({"status": "no_witness", "reason": str(exc), "exp_solve": exp.to_dict()})
        return EXIT_OK
    fresh_seed = cfg.measure.seed + 1
    fresh = sample_haar(rho.dims, FRESH_WITNESS_SAMPLES, fresh_seed)
    result = w.to_dict()
    result.update(
        {
            "status": "certified" if w.certified else "not_certified",
            "fresh_check": {"seed": fresh_seed, "samples": FRESH_WITNESS_SAMPLES, "passed": verify_witness(w, rho, fresh)},
            "exp_solve": exp.to_dict(),
            "measure": _measure_report(m),
        }
    )
    run.report["seeds"]["fresh_check"] = fresh_seed
    run.finish(result)
    return EXIT_OK


def cmd_werner_sweep(run: _Run) -> int:
    cfg = run.cfg
    if cfg.dims and tuple(cfg.dims) != (2, 2):
        raise DimensionError("werner-sweep runs on dims 2,2 only")
    if cfg.grid < 2:
        raise ValueError("--grid needs at least 2 points")
    ccfg = cfg.classifier()
    m = ccfg.measure.build((2, 2))
    rows, entries = [], []
    for p in np.linspace(0.0, 1.0, cfg.grid):
        p = float(round(p, 12))
        rho = werner(p)
        c = classify(rho, ccfg, measure=m)
        ppt = ppt_oracle(rho)
        top = max(n for _, n in c.bk_norms)
        rows.append((p, c.verdict, ppt.status, ppt.min_eigenvalue, top, c.exp_solve.status))
        entries.append({"p": p, "verdict": c.verdict, "ppt": ppt.status, "max_bk_norm": top, "notes": c.notes})
    # CSV is the primary product here: stdout unless --csv is given
    run.write_csv(["p", "verdict", "ppt", "ppt_min_eigenvalue", "max_bk_norm", "exp_status"], rows, default_stdout=True)
    run.finish({"measure": _measure_report(m), "sweep": entries}, stdout=cfg.csv_path is not None)
    return EXIT_OK


def cmd_selftest(run: _Run) -> int:
    checks = run_checks(run.cfg.measure.seed)
    print(format_table(checks), file=sys.stderr)
    ok = all(c.passed for c in checks)
    run.finish({"passed": ok, "checks": [c.to_dict() for c in checks]})
    return EXIT_OK if ok else EXIT_FAIL


HANDLERS = {
    "classify": cmd_classify,
    "coordinatize": cmd_coordinatize,
    "reconstruct": cmd_reconstruct,
    "witness": cmd_witness,
    "werner-sweep": cmd_werner_sweep,
    "selftest": cmd_selftest,
}


def run(cfg: RunConfig) -> int:
    try:
        return HANDLERS[cfg.command](_Run(cfg))
    except ObjectiveRangeError as exc:
        print(f"sepcoord {cfg.command}: numeric range error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except (ValueError, FileNotFoundError) as exc:
        # InvalidStateError, MatrixFormatError, DimensionError, UnsupportedDesignError
        print(f"sepcoord {cfg.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())

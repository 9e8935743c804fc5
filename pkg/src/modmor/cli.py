"""Command-line driver: case-study generation, synthesis, reduction, validation, plot data.

Exit codes: 0 success, 2 input/output or argument error, 3 synthesis
infeasible at some frequency, 4 reduction requirement unattainable,
5 validation failure. ``MODRED_LOG`` selects the log level
(``error``, ``info`` or ``debug``).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import io
from .beams import CASE_BETA1, CASE_BETA2, CASE_GRID, build_three_beam_system, case_study_specs
from .freqresp import make_log_grid, write_csv
from .lti import InterconnectedSystem, ModelError, lft_close
from .reduction import ReductionError, reduce_to_requirement
from .synthesis import (RequirementSpec, SynthesisInfeasible, build_interconnected_requirement,
                        synthesize_requirements)
from .validation import emit_bode_data, validate_pipeline

log = logging.getLogger("modmor")

EXIT_OK, EXIT_IO, EXIT_INFEASIBLE, EXIT_UNATTAINABLE, EXIT_VALIDATION = 0, 2, 3, 4, 5
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(ValueError):
    """Invalid option value or combination."""


@dataclass
class RunConfig:
    """Options shared by all commands. Every field can be set in the JSON
    config file under the same name; command-line flags take precedence."""

    out: str = "."
    system: str | None = None
    requirement: str | None = None
    scalings: str | None = None
    reduced: str | None = None
    grid: tuple[float, float, int] = CASE_GRID
    beta1: float = CASE_BETA1
    beta2: float = CASE_BETA2
    alpha: tuple[float, ...] | None = None
    feas_tol: float = 1e-8
    conv_tol: float = 1e-3
    max_outer: int = 20
    fit_order: int = 4
    method: str = "fwbt"
    workers: int = 1
    elements: tuple[int, int, int] = (50, 20, 30)

    def validate(self) -> None:
        lo, hi, n = self.grid
        if not (0 < lo < hi) or n < 1:
            raise UsageError("grid needs 0 < lo < hi and n >= 1")
        if self.beta1 < 0 or self.beta2 < 0:
            raise UsageError("beta1 and beta2 must be nonnegative")
        if self.alpha is not None and any(a <= 0 for a in self.alpha):
            raise UsageError("alpha weights must be positive")
        if self.feas_tol <= 0 or self.conv_tol <= 0:
            raise UsageError("tolerances must be positive")
        if self.max_outer < 1 or self.fit_order < 0 or self.workers < 1:
            raise UsageError("max_outer and workers must be >= 1, fit_order >= 0")
        if self.method not in ("fwbt", "bt"):
            raise UsageError("method must be fwbt or bt")
        if len(self.elements) != 3 or any(e < 1 for e in self.elements):
            raise UsageError("elements needs three positive counts")

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    @property
    def system_path(self) -> Path:
        return Path(self.system) if self.system else self.out_dir / "interconnection.json"

    @property
    def scalings_dir(self) -> Path:
        return Path(self.scalings) if self.scalings else self.out_dir

    @property
    def reduced_dir(self) -> Path:
        return Path(self.reduced) if self.reduced else self.out_dir


def _floats(text, name: str) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [s for s in str(text).split(",") if s.strip()]
    try:
        return tuple(float(s) for s in items)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{name}: expected comma-separated numbers") from exc


def _parse_grid(value) -> tuple[float, float, int]:
    vals = _floats(value, "grid")
    if len(vals) != 3 or vals[2] != int(vals[2]):
        raise UsageError("grid: expected lo,hi,n")
    return vals[0], vals[1], int(vals[2])


def _parse_elements(value) -> tuple[int, int, int]:
    vals = _floats(value, "elements")
    if len(vals) != 3 or any(v != int(v) for v in vals):
        raise UsageError("elements: expected three integers a,b,c")
    return tuple(int(v) for v in vals)


_CONVERT = {
    "grid": _parse_grid,
    "elements": _parse_elements,
    "alpha": lambda v: _floats(v, "alpha"),
    "beta1": float, "beta2": float, "feas_tol": float, "conv_tol": float,
    "max_outer": int, "fit_order": int, "workers": int,
    "out": str, "system": str, "requirement": str, "scalings": str, "reduced": str,
    "method": str,
}


def build_config(args: argparse.Namespace) -> tuple[RunConfig, set[str]]:
    """Defaults, then the JSON config file, then explicit flags.

    Returns the config and the set of option names that were set explicitly.
    """
    cfg = RunConfig()
    given: set[str] = set()
    names = {f.name for f in fields(RunConfig)}
    if getattr(args, "config", None):
        data = io.load_json(args.config)
        unknown = set(data) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            try:
                setattr(cfg, key, _CONVERT[key](value) if value is not None else None)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
            given.add(key)
    for key in names:
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, _CONVERT[key](value))
            given.add(key)
    cfg.validate()
    return cfg, given


def _grid_of(cfg: RunConfig):
    return make_log_grid(*cfg.grid)


def resolve_requirement(cfg: RunConfig, given: set[str], sys: InterconnectedSystem) -> RequirementSpec:
    """Explicit requirement file, else explicit grid/beta options, else the
    requirement file in the output directory, else the default grid and betas."""
    if cfg.requirement:
        return io.read_requirement_csv(cfg.requirement)
    default = cfg.out_dir / "requirement.csv"
    if not given & {"grid", "beta1", "beta2"} and default.exists():
        return io.read_requirement_csv(default)
    log.info("building requirement on %d-point grid, beta1=%g beta2=%g",
             cfg.grid[2], cfg.beta1, cfg.beta2)
    return build_interconnected_requirement(lft_close(sys), _grid_of(cfg), cfg.beta1, cfg.beta2)


def _ensure_out(cfg: RunConfig) -> None:
    try:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise io.ArtifactIOError(f"{cfg.out_dir}: {exc.strerror or exc}") from exc
    if not os.access(cfg.out_dir, os.W_OK):
        raise io.ArtifactIOError(f"{cfg.out_dir}: directory is not writable")


# --- commands --------------------------------------------------------------------

def cmd_demo_beams(cfg: RunConfig, given: set[str]) -> int:
    _ensure_out(cfg)
    sys_ = build_three_beam_system(case_study_specs(cfg.elements))
    paths = []
    for j, g in enumerate(sys_.subsystems):
        path = cfg.out_dir / f"sub_{j + 1}.json"
        io.save_model(path, g)
        paths.append(path)
    io.save_interconnection(cfg.out_dir / "interconnection.json", sys_, paths)
    grid = _grid_of(cfg)
    write_csv(cfg.out_dir / "grid.csv", ["omega"], ([w] for w in grid.omegas))
    req = build_interconnected_requirement(lft_close(sys_), grid, cfg.beta1, cfg.beta2)
    io.write_requirement_csv(cfg.out_dir / "requirement.csv", req)
    orders = [g.n for g in sys_.subsystems]
    print(f"subsystem orders {tuple(orders)}, total {sum(orders)}")
    return EXIT_OK


def cmd_synth(cfg: RunConfig, given: set[str]) -> int:
    _ensure_out(cfg)
    sys_ = io.load_interconnection(cfg.system_path)
    req = resolve_requirement(cfg, given, sys_)
    if cfg.alpha is not None and len(cfg.alpha) != sys_.k:
        raise UsageError(f"alpha needs {sys_.k} entries")
    sol = synthesize_requirements(sys_, req.omegas, req, cfg.alpha, cfg.conv_tol, cfg.max_outer,
                                  workers=cfg.workers, raise_on_infeasible=False,
                                  feas_tol=cfg.feas_tol)
    io.write_scalings(cfg.out_dir, sol)
    req_path = cfg.out_dir / "requirement.csv"
    if cfg.requirement is None or Path(cfg.requirement).resolve() != req_path.resolve():
        io.write_requirement_csv(req_path, req)
    summary = {"feasible": sol.feasible_count, "total": len(sol.items),
               "infeasible_omegas": sol.infeasible}
    io.dump_json(cfg.out_dir / "synth_summary.json", summary)
    print(f"feasible {sol.feasible_count}/{len(sol.items)}")
    if sol.infeasible:
        shown = ", ".join(f"{w:.6g}" for w in sol.infeasible[:10])
        more = "" if len(sol.infeasible) <= 10 else f" (+{len(sol.infeasible) - 10} more)"
        print(f"infeasible at omega = {shown}{more}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _load_scalings(cfg: RunConfig, given: set[str], sys_: InterconnectedSystem):
    req_file = cfg.requirement or cfg.scalings_dir / "requirement.csv"
    req = io.read_requirement_csv(req_file)
    sol = io.read_scalings(cfg.scalings_dir, sys_, req)
    if sol.infeasible:
        raise io.ArtifactIOError(f"scalings missing at {len(sol.infeasible)} frequencies")
    return req, sol


def cmd_reduce(cfg: RunConfig, given: set[str]) -> int:
    _ensure_out(cfg)
    sys_ = io.load_interconnection(cfg.system_path)
    req, sol = _load_scalings(cfg, given, sys_)
    results = []
    for j, g in enumerate(sys_.subsystems):
        try:
            res = reduce_to_requirement(g, sol.v_samples(j), sol.w_samples(j), sol.omegas,
                                        fit_order=cfg.fit_order, method=cfg.method)
        except ReductionError as exc:
            print(f"subsystem {j + 1}: {exc}", file=sys.stderr)
            return EXIT_UNATTAINABLE
        io.write_reduction(cfg.out_dir, j, res)
        results.append(res)
    n = [r.original_order for r in results]
    r = [r.reduced_order for r in results]
    print(f"orders {tuple(n)} -> {tuple(r)}, total {sum(n)} -> {sum(r)} "
          f"({100.0 * (1.0 - sum(r) / sum(n)):.1f}% reduction)")
    return EXIT_OK


def cmd_validate(cfg: RunConfig, given: set[str]) -> int:
    _ensure_out(cfg)
    sys_ = io.load_interconnection(cfg.system_path)
    req, sol = _load_scalings(cfg, given, sys_)
    reduced = io.load_reduced_models(cfg.reduced_dir, sys_.k)
    try:
        report = validate_pipeline(sys_, reduced, sol)
    except ModelError as exc:
        raise io.ArtifactIOError(str(exc)) from exc
    report.write_json(cfg.out_dir / "report.json")
    t = report.totals
    print(f"subsystem passes {t['subsystem_pass']}, interconnected passes "
          f"{t['interconnected_pass']}/{t['num_omega']}, reduction {t['reduction_percent']:.1f}%")
    if t["implication_violations"]:
        print(f"implication violations: {t['implication_violations']}", file=sys.stderr)
    return EXIT_OK if report.all_pass else EXIT_VALIDATION


def cmd_bode(cfg: RunConfig, given: set[str]) -> int:
    _ensure_out(cfg)
    sys_ = io.load_interconnection(cfg.system_path)
    req = resolve_requirement(cfg, given, sys_)
    reduced = io.load_reduced_models(cfg.reduced_dir, sys_.k)
    emit_bode_data(sys_, reduced, req, cfg.out_dir / "bode.csv")
    print(f"wrote {cfg.out_dir / 'bode.csv'} ({req.omegas.size} rows)")
    return EXIT_OK


COMMANDS = {
    "demo-beams": (cmd_demo_beams, "write the three-beam case study models and requirement"),
    "synth": (cmd_synth, "synthesize subsystem scalings on the grid"),
    "reduce": (cmd_reduce, "reduce each subsystem to meet its scalings"),
    "validate": (cmd_validate, "check subsystem and interconnected requirements"),
    "bode": (cmd_bode, "write Bode magnitude data of full and reduced models"),
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="JSON file with option defaults (flags override)")
    a("--out", help="output directory (default: current directory)")
    a("--system", help="interconnection JSON (default: OUT/interconnection.json)")
    a("--requirement", help="requirement CSV omega,v_c_*,w_c_*")
    a("--scalings", help="directory with scaling_j.csv and d.csv (default: OUT)")
    a("--reduced", help="directory with reduced_j.json (default: OUT)")
    a("--grid", help="log grid lo,hi,n")
    a("--beta1", help="relative requirement factor")
    a("--beta2", help="absolute requirement floor")
    a("--alpha", help="per-subsystem cost weights a1,a2,...")
    a("--feas-tol", dest="feas_tol", help="SDP feasibility tolerance")
    a("--conv-tol", dest="conv_tol", help="relative cost decrease that stops the iteration")
    a("--max-outer", dest="max_outer", help="maximum outer iterations per frequency")
    a("--fit-order", dest="fit_order", help="order of each fitted weight")
    a("--method", choices=("fwbt", "bt"), help="reduction method")
    a("--workers", help="process count for the frequency sweep")
    a("--elements", help="beam element counts a,b,c (demo-beams)")
    parser = argparse.ArgumentParser(prog="modmor", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def _setup_logging() -> None:
    name = os.environ.get("MODRED_LOG", "error").strip().lower()
    level = LOG_LEVELS.get(name)
    logging.basicConfig(level=level or logging.ERROR, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if level is None:
        log.error("MODRED_LOG=%r not recognized, using 'error'", name)


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = make_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        cfg, given = build_config(args)
        with np.errstate(all="ignore"):
            return func(cfg, given)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SynthesisInfeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

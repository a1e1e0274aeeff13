"""Command line front end.

    lsicert certify  --model m.toml [--out cert.json]
    lsicert verify   --model m.toml --scenario cases.json [--out slacks.csv]
    lsicert simulate --model m.toml [--backend gaussian|grid] [--steps T] [--out trace.csv]
    lsicert lattice  --dims 3 3 --J 0.1 --h 1 [--out model.json]

Every subcommand also takes ``--config FILE`` (TOML or JSON) whose keys are
the long option names; flags given on the command line win.  Exit status is
0 on success, 1 when a certificate or inequality check fails and 2 on usage
or I/O errors.  Numbers in reports are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .certify import Certificate, certify
from .dynamics import gibbs_grid, main_lemma_check, run_interpolation
from .dynamics.interpolation import CSV_HEADER, GRID_MAX_POINTS, GRID_MAX_SITES
from .errors import LSICertError, SpecFileError
from .metrics import MAX_GRID_POINTS, UNBOUNDED, Axis, GaussianDist, GridDist, fisher, kl, w2
from .model import build_lattice
from .specfile import dump_spec, file_hash, load_spec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["UsageError", "RunConfig", "parse_config", "run", "main"]

COMMANDS = ("certify", "verify", "simulate", "lattice")
INEQUALITIES = ("lsi", "theorem", "otto_villani")

DEFAULTS = {
    "backend": "gaussian",
    "grid_points": 12,
    "box": 6.0,
    "steps": 12,
    "seed": 0,
    "J": 0.1,
    "h": 1.0,
}
DEFAULT_TOL = {"gaussian": 1e-8, "grid": 1e-4}


class UsageError(Exception):
    """Bad command line or configuration; exit status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    command: str
    model: Optional[str] = None
    backend: str = DEFAULTS["backend"]
    grid_points: int = DEFAULTS["grid_points"]
    box: float = DEFAULTS["box"]
    tol: Optional[float] = None
    steps: int = DEFAULTS["steps"]
    seed: int = DEFAULTS["seed"]
    out: Optional[str] = None
    summary: Optional[str] = None
    scenario: Optional[str] = None
    p0: Optional[str] = None
    dims: List[int] = field(default_factory=list)
    J: float = DEFAULTS["J"]
    h: float = DEFAULTS["h"]
    threads: int = 0

    @property
    def tolerance(self) -> float:
        return self.tol if self.tol is not None else DEFAULT_TOL[self.backend]

    def knobs(self) -> dict:
        d = asdict(self)
        d["tol"] = self.tolerance
        return d


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lsicert", description="Certified LSI constants for weakly dependent Gibbs measures.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    def common(sp, model=True):
        sp.add_argument("--config", help="TOML or JSON file with default option values")
        if model:
            sp.add_argument("--model", help="model spec file (TOML or JSON)")
        sp.add_argument("--out", help="output file (default: standard output)")
        sp.add_argument("--seed", type=int, help=f"seed recorded in reports (default {DEFAULTS['seed']})")

    sp = sub.add_parser("certify", help="compute the contractivity certificate of a model")
    common(sp)

    sp = sub.add_parser("verify", help="check inequalities on a list of distribution pairs")
    common(sp)
    sp.add_argument("--scenario", help="JSON file with a 'cases' list")
    sp.add_argument("--backend", choices=["gaussian", "grid"], help="default backend for cases (default gaussian)")
    sp.add_argument("--grid-points", type=int, help=f"points per axis for grid cases (default {DEFAULTS['grid_points']}, max {MAX_GRID_POINTS})")
    sp.add_argument("--box", type=float, help=f"grid half-width L, axis [-L, L] (default {DEFAULTS['box']})")
    sp.add_argument("--tol", type=float, help="allowed negative slack (default 1e-8 gaussian, 1e-4 grid)")

    sp = sub.add_parser("simulate", help="run the interpolation process and check its entropy bounds")
    common(sp)
    sp.add_argument("--backend", choices=["gaussian", "grid"], help="default gaussian")
    sp.add_argument("--steps", type=int, help=f"number of steps T (default {DEFAULTS['steps']})")
    sp.add_argument("--grid-points", type=int, help=f"points per axis (default {DEFAULTS['grid_points']}, grid process max {GRID_MAX_POINTS})")
    sp.add_argument("--box", type=float, help=f"grid half-width L (default {DEFAULTS['box']})")
    sp.add_argument("--p0", help="JSON file with the initial Gaussian {'mean': [...], 'cov': [[...]]} (default N(1, I))")
    sp.add_argument("--summary", help="summary JSON file (default: standard output)")
    sp.add_argument("--tol", type=float, help="allowed negative slack (default 1e-8 gaussian, 1e-4 grid)")

    sp = sub.add_parser("lattice", help="write the model spec of a nearest-neighbour lattice")
    common(sp, model=False)
    sp.add_argument("--dims", type=int, nargs="+", help="lattice side lengths")
    sp.add_argument("--J", type=float, help=f"coupling on every edge (default {DEFAULTS['J']})")
    sp.add_argument("--h", type=float, help=f"diagonal entry (default {DEFAULTS['h']})")
    return p


def _read_config(path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        if path.suffix.lower() == ".toml":
            d = tomllib.loads(raw.decode())
        else:
            d = json.loads(raw)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"config {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise UsageError(f"config {path}: expected a table of options")
    return {k.replace("-", "_"): v for k, v in d.items()}


def parse_config(argv: Sequence[str], config_file: Optional[str] = None) -> RunConfig:
    """Parse and validate a command line; raises UsageError."""
    parser = _build_parser()
    ns = parser.parse_args(list(argv))
    given = {k: v for k, v in vars(ns).items() if v is not None and k not in ("command", "config")}
    file_opts = {}
    for path in (config_file, ns.config):
        if path:
            file_opts.update(_read_config(path))
    actions = {a.dest: a for a in _subparser(parser, ns.command)._actions if a.dest not in ("help", "config")}
    unknown = set(file_opts) - set(actions)
    if unknown:
        raise UsageError(f"unknown option(s) in config for {ns.command}: {sorted(unknown)}")
    file_opts = {k: _coerce(actions[k], v) for k, v in file_opts.items()}
    opts = {**file_opts, **given}
    threads = os.environ.get("LSI_CERTIFY_THREADS", "0").strip() or "0"
    try:
        opts["threads"] = int(threads)
    except ValueError:
        raise UsageError(f"LSI_CERTIFY_THREADS must be an integer, got {threads!r}") from None
    try:
        cfg = RunConfig(command=ns.command, **opts)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    _validate(cfg)
    return cfg


def _coerce(action, value):
    conv = action.type or str
    try:
        if action.nargs in ("+", "*"):
            if not isinstance(value, list):
                raise TypeError
            value = [conv(v) for v in value]
        else:
            if isinstance(value, (list, dict)):
                raise TypeError
            value = conv(value)
    except (TypeError, ValueError):
        raise UsageError(f"config option {action.dest}: bad value {value!r}") from None
    if action.choices is not None and value not in action.choices:
        raise UsageError(f"config option {action.dest}: {value!r} not in {list(action.choices)}")
    return value


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise AssertionError("no subcommands")


def _need_file(path, flag):
    if path is None:
        raise UsageError(f"{flag} is required")
    if not Path(path).is_file():
        raise UsageError(f"{flag} {path}: no such file")


def _writable(path, flag):
    if path is None:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise UsageError(f"{flag} {path}: directory {parent} does not exist")


def _validate(cfg: RunConfig):
    if cfg.threads < 0:
        raise UsageError("LSI_CERTIFY_THREADS must be >= 0")
    if cfg.backend not in ("gaussian", "grid"):
        raise UsageError(f"unknown backend {cfg.backend!r}")
    if not 2 <= cfg.grid_points <= MAX_GRID_POINTS:
        raise UsageError(f"--grid-points {cfg.grid_points} outside [2, {MAX_GRID_POINTS}] (exceeds capacity {MAX_GRID_POINTS})")
    if cfg.command == "simulate" and cfg.backend == "grid" and cfg.grid_points > GRID_MAX_POINTS:
        raise UsageError(f"--grid-points {cfg.grid_points} exceeds the grid process capacity {GRID_MAX_POINTS}")
    if not cfg.box > 0:
        raise UsageError("--box must be positive")
    if cfg.steps < 1:
        raise UsageError("--steps must be at least 1")
    if cfg.tol is not None and not cfg.tol >= 0:
        raise UsageError("--tol must be nonnegative")
    if cfg.command == "lattice":
        if not cfg.dims or any(d < 1 for d in cfg.dims):
            raise UsageError("--dims needs one or more positive side lengths")
    if cfg.command != "lattice":
        _need_file(cfg.model, "--model")
    if cfg.command == "verify":
        _need_file(cfg.scenario, "--scenario")
    if cfg.command == "simulate" and cfg.p0 is not None:
        _need_file(cfg.p0, "--p0")
    _writable(cfg.out, "--out")
    _writable(cfg.summary, "--summary")


# ------------------------------------------------------------------ output


def _num(x) -> str:
    if x is UNBOUNDED:
        return "+inf"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json(obj, indent: int = 0) -> str:
    """JSON text with floats at 17 significant digits and sorted keys."""
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json(v, indent + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(_json(v, indent + 1) for v in obj) + "]"
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if obj is UNBOUNDED:
        return json.dumps("+inf")
    x = float(obj)
    return _num(x) if math.isfinite(x) else json.dumps(_num(x))


def _emit(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else v if isinstance(v, (str, bool, int)) else _num(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------- commands


def _provenance(cfg: RunConfig, cert: Optional[Certificate]) -> dict:
    d = {"knobs": cfg.knobs()}
    if cfg.model:
        d["model"] = cfg.model
        d["model_sha256"] = file_hash(cfg.model)
    if cert is not None:
        d["certificate"] = cert.to_dict()
    return d


def _cmd_certify(cfg: RunConfig) -> int:
    spec = load_spec(cfg.model)
    cert = certify(spec)
    report = {**cert.to_dict(), "model_sha256": file_hash(cfg.model), "norms_converged": cert.norms_converged}
    if cfg.out is None:
        sys.stdout.write(_json(report) + "\n")
    else:
        Path(cfg.out).write_text(_json(report) + "\n")
        sys.stdout.write(cert.summary() + "\n")
    return 0 if cert.passed else 1


def _gaussian_from(d, where) -> GaussianDist:
    if not isinstance(d, dict) or set(d) - {"mean", "cov"} or "mean" not in d:
        raise SpecFileError(f"{where}: expected {{'mean': [...], 'cov': [[...]]}}")
    mean = np.asarray(d["mean"], dtype=float)
    cov = np.asarray(d.get("cov", np.eye(mean.size)), dtype=float)
    return GaussianDist(mean, cov)


def _case_constant(case, spec, cert, ineq) -> float:
    if ineq == "theorem":
        return cert.rho * cert.delta / 2 if cert.passed else None
    c = case.get("constant", "certified")
    if c == "certified":
        return cert.lsi_lower
    if c == "exact_gaussian":
        if not spec.is_gaussian:
            raise SpecFileError("exact_gaussian constant needs a quadratic or lattice model")
        return float(np.linalg.eigvalsh(spec.precision)[0])
    if isinstance(c, (int, float)) and not isinstance(c, bool) and c > 0:
        return float(c)
    raise SpecFileError(f"case {case.get('id')}: constant must be 'certified', 'exact_gaussian' or a positive number")


def _verify_case(k, case, spec, cert, cfg):
    if not isinstance(case, dict):
        raise SpecFileError(f"case {k}: expected an object")
    extra = set(case) - {"id", "p", "inequality", "constant", "backend"}
    if extra:
        raise SpecFileError(f"case {k}: unknown key(s) {sorted(extra)}")
    cid = str(case.get("id", k))
    ineq = case.get("inequality", "theorem")
    if ineq not in INEQUALITIES:
        raise SpecFileError(f"case {cid}: inequality must be one of {INEQUALITIES}")
    backend = case.get("backend", cfg.backend)
    p = _gaussian_from(case.get("p"), f"case {cid}")
    if p.n != spec.n:
        raise SpecFileError(f"case {cid}: p has dimension {p.n}, model {spec.n}")
    if backend == "gaussian":
        if not spec.is_gaussian:
            raise SpecFileError(f"case {cid}: gaussian backend needs a quadratic or lattice model")
        q = GaussianDist.from_precision(spec.precision)
    elif backend == "grid":
        axes = (Axis(-cfg.box, cfg.box, cfg.grid_points),) * spec.n
        p = GridDist.from_gaussian(p, axes)
        q = gibbs_grid(spec, axes)
    else:
        raise SpecFileError(f"case {cid}: unknown backend {backend!r}")
    c = _case_constant(case, spec, cert, ineq)
    if c is None:
        return [cid, None, None, None, None, None, "not-certified"], False
    D = kl(p, q)
    if ineq == "otto_villani":
        W = w2(p, q)
        bound = 2.0 * float(D) / c
        slack = bound - W**2
        I = None
    else:
        W = w2(p, q) if backend == "gaussian" else None
        I = fisher(p, q)
        bound = float(I) / (2 * c)
        slack = bound - float(D)
    ok = slack >= -cfg.tolerance
    return [cid, D, I, W, bound, slack, "true" if ok else "false"], ok


def _cmd_verify(cfg: RunConfig) -> int:
    spec = load_spec(cfg.model)
    cert = certify(spec)
    try:
        scenario = json.loads(Path(cfg.scenario).read_text())
    except ValueError as exc:
        raise SpecFileError(f"{cfg.scenario}: {exc}") from exc
    cases = scenario.get("cases") if isinstance(scenario, dict) else scenario
    if not isinstance(cases, list):
        raise SpecFileError(f"{cfg.scenario}: expected a list of cases")

    def one(args):
        return _verify_case(*args, spec, cert, cfg)

    jobs = list(enumerate(cases))
    if cfg.threads > 0 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]
    _emit(_csv(["case_id", "D", "I", "W2", "bound", "slack", "pass"], [r for r, _ in results]), cfg.out)
    failed = [r[0] for r, ok in results if not ok]
    if failed:
        sys.stderr.write(f"verify: slack below -{cfg.tolerance:g} in case(s) {', '.join(failed)}\n")
        return 1
    return 0


def _cmd_simulate(cfg: RunConfig) -> int:
    spec = load_spec(cfg.model)
    cert = certify(spec)
    if not cert.passed:
        sys.stderr.write(f"simulate: model is not certified (delta = {cert.delta:.6g})\n")
        _emit(_json({**_provenance(cfg, cert), "status": "not-certified"}) + "\n", cfg.summary)
        return 1
    if cfg.p0 is None:
        g = GaussianDist(np.ones(spec.n), np.eye(spec.n))
    else:
        try:
            g = _gaussian_from(json.loads(Path(cfg.p0).read_text()), cfg.p0)
        except ValueError as exc:
            raise SpecFileError(f"{cfg.p0}: {exc}") from exc
    if g.n != spec.n:
        raise SpecFileError(f"p0 has dimension {g.n}, model {spec.n}")
    if cfg.backend == "grid":
        if spec.n > GRID_MAX_SITES:
            raise UsageError(f"grid process supports at most {GRID_MAX_SITES} sites, model has {spec.n}")
        p0 = GridDist.from_gaussian(g, (Axis(-cfg.box, cfg.box, cfg.grid_points),) * spec.n)
    else:
        p0 = g
    trace = run_interpolation(p0, spec, cert, cfg.steps)
    lemma = main_lemma_check(trace, spec, cert, p0)
    rec = [r.recursion_slack for r in trace.records[2:]]
    checks = {
        "recursion_min_slack": min(rec) if rec else None,
        "main_lemma_slack": lemma.slack,
        "recursion_sum_slack": lemma.sum_slack,
        "d0_fisher_bound_slack": lemma.d0_bound_slack,
        "d1_fisher_bound_slack": lemma.d1_bound_slack,
        "telescoping_slack": trace.aux_slack,
    }
    skip = [r.skip2_bound - r.skip2_cost for r in trace.records[2:]]
    summary = {
        **_provenance(cfg, cert),
        "checks": checks,
        "skip2_min_slack": min(skip) if skip else None,
        "divergence": lemma.divergence,
        "fisher": lemma.fisher,
        "D": [r.D for r in trace.records],
    }
    failed = [k for k, v in checks.items() if v is not None and v < -cfg.tolerance]
    summary["status"] = "fail" if failed else "ok"
    _emit(_csv(CSV_HEADER, trace.csv_rows()), cfg.out)
    text = _json(summary) + "\n"
    if cfg.summary is None and cfg.out is None:
        sys.stderr.write(text)
    else:
        _emit(text, cfg.summary)
    if failed:
        sys.stderr.write(f"simulate: negative slack in {', '.join(failed)}\n")
        return 1
    return 0


def _cmd_lattice(cfg: RunConfig) -> int:
    spec = build_lattice(cfg.dims, cfg.J, cfg.h)
    _emit(dump_spec(spec), cfg.out)
    return 0


_COMMANDS = {"certify": _cmd_certify, "verify": _cmd_verify, "simulate": _cmd_simulate, "lattice": _cmd_lattice}


def run(cfg: RunConfig) -> int:
    """Dispatch a validated config; returns the exit status."""
    try:
        return _COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        sys.stderr.write(f"lsicert {cfg.command}: {exc}\n")
        return 2
    except (OSError, LSICertError) as exc:
        sys.stderr.write(f"lsicert {cfg.command}: {exc}\n")
        return 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``qregpn solve | generate | bench | check``.

A run is described by a :class:`RunSpec`, loaded from a JSON ``--config``
file and then overridden by command-line flags.  Exit codes: 0 when the
solve converged, 2 when it hit a budget (``MaxIterations``/``InnerFailure``)
or a benchmark row failed, 1 on errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .core import (ConfigError, IterationTrace, NotCheckable, ParseError, QregError,
                   SolveReport, SolverConfig, Status, validate_config)
from .diagnostics import (count_nonzeros, error_bound_check_l1, estimate_rate,
                          first_order_check, second_order_check)
from .outer import solve
from .problems import (PAPER_WEIGHTS, gen_logistic_instance, gen_student_t_instance,
                       logistic_oracle, mvsk_oracle, parse_libsvm, read_returns_csv,
                       sample_moments, student_t_oracle, synthetic_prices, log_returns,
                       write_libsvm)
from .problems.operators import PartialDCT
from .problems.student_t import DYNAMIC_RANGES

log = logging.getLogger("qregpn")

FAMILIES = ("logistic", "student_t", "mvsk")
SUITES = ("logistic_small", "student_t_desk", "mvsk_desk", "rate_sweep")
COLON_ENV = "QREG_COLON_CANCER"
DEFAULT_Q = {"logistic_small": (2.7,), "student_t_desk": (2.3,), "mvsk_desk": (2.3,),
             "rate_sweep": (2.1, 2.5, 3.0)}

# Instance used by the rate sweep; fixed so the sweep is reproducible.
RATE_SWEEP = {"m": 200, "n": 50, "seed": 7, "lam": 1e-2, "eps": 1e-9}


def bundled(name: str) -> Path:
    """Path of a data file shipped inside the package."""
    return Path(str(resources.files("qregpn") / "data" / name))


@dataclass
class RunSpec:
    """One solve: problem family, data source, solver settings, outputs.

    Exactly one of ``data`` (a file) and ``generator`` (seeded parameters)
    must be set.
    """

    problem: str
    data: Optional[str] = None
    generator: Optional[dict] = None
    lam: Optional[float] = None
    c_lambda: float = 0.1
    nu: float = 0.25
    omega: tuple = PAPER_WEIGHTS
    prices: bool = True
    solver: SolverConfig = field(default_factory=SolverConfig)
    trace: Optional[str] = None
    report: Optional[str] = None

    def validate(self) -> "RunSpec":
        if self.problem not in FAMILIES:
            raise ConfigError("problem", f"must be one of {', '.join(FAMILIES)}")
        if (self.data is None) == (self.generator is None):
            raise ConfigError("data", "give exactly one of a data path and a generator")
        if self.problem == "logistic" and self.lam is None:
            raise ConfigError("lam", "logistic runs need an l1 weight")
        if self.lam is not None and not self.lam > 0:
            raise ConfigError("lam", "must be > 0")
        if not self.nu > 0:
            raise ConfigError("nu", "must be > 0")
        if len(self.omega) != 4 or min(self.omega) < 0:
            raise ConfigError("omega", "needs four nonnegative weights")
        validate_config(self.solver)
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["omega"] = list(self.omega)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunSpec":
        d = dict(d)
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown RunSpec field")
        solver = d.pop("solver", {}) or {}
        if isinstance(solver, dict):
            try:
                solver = SolverConfig(**solver)
            except TypeError as exc:
                raise ConfigError("solver", str(exc)) from None
        if "omega" in d:
            d["omega"] = tuple(float(w) for w in d["omega"])
        return cls(solver=solver, **d)


# ---------------------------------------------------------------- instances

def _load_student_t(spec: RunSpec):
    if spec.data is not None:
        # instance directory written by ``generate student_t``
        man = _read_manifest(spec.data)
        base = Path(spec.data).parent
        params = man["params"]
        A = PartialDCT(params["n"], np.load(base / "J.npy"), fast=params.get("fast_dct", True))
        b = np.load(base / "b.npy")
        lam = spec.lam if spec.lam is not None else man["lam"]
        return student_t_oracle(A, b, params["nu"], lam), A.rmatvec(b)
    gen = dict(spec.generator)
    gen.setdefault("c_lambda", spec.c_lambda)
    gen.setdefault("nu", spec.nu)
    inst = gen_student_t_instance(**gen)
    lam = spec.lam if spec.lam is not None else inst.lam
    return student_t_oracle(inst.A, inst.b, inst.params.nu, lam), inst.x0


def _load_mvsk(spec: RunSpec):
    if spec.data is not None:
        path = Path(spec.data)
        if path.suffix == ".json":
            base = path.parent
            mom = [np.load(base / f"{k}.npy") for k in ("mu", "Sigma", "S", "Kt")]
        else:
            _, R = read_returns_csv(path, log_returns=spec.prices)
            mom = sample_moments(R)
    else:
        gen = spec.generator
        P = synthetic_prices(int(gen.get("n", 50)), int(gen.get("T", 260)), int(gen.get("seed", 0)))
        mom = sample_moments(log_returns(P))
    p = mvsk_oracle(*mom, omega=spec.omega)
    return p, np.full(p.dim, 1.0 / p.dim)


def _load_logistic(spec: RunSpec):
    if spec.data is not None:
        A, b = parse_libsvm(_existing(spec.data))
    else:
        gen = spec.generator
        A, b, _ = gen_logistic_instance(int(gen.get("m", 200)), int(gen.get("n", 50)),
                                        int(gen.get("seed", 0)))
    p = logistic_oracle(A, b, spec.lam)
    return p, np.zeros(p.dim)


def _existing(path) -> str:
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    return str(path)


def _read_manifest(path) -> dict:
    with open(_existing(path)) as fh:
        return json.load(fh)


def build_problem(spec: RunSpec):
    """Problem and default starting point for ``spec``."""
    if spec.data is not None:
        _existing(spec.data)
    loader = {"logistic": _load_logistic, "student_t": _load_student_t, "mvsk": _load_mvsk}
    return loader[spec.problem](spec)


# ------------------------------------------------------------------ outputs

def write_trace_csv(path, traces) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(IterationTrace.CSV_COLUMNS)
        for t in traces:
            w.writerow(t.csv_row())


def write_report(path, report: SolveReport) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=1, allow_nan=True)


def read_report(path) -> SolveReport:
    with open(_existing(path)) as fh:
        return SolveReport.from_dict(json.load(fh))


def certify(problem, x, eps: float, seed: int = 0) -> list:
    """First-order, second-order and (for l1) error-bound certificates."""
    certs = [first_order_check(problem, x, 10 * eps)]
    for check in (lambda: second_order_check(problem, x, seed=seed),
                  lambda: error_bound_check_l1(problem, x)):
        try:
            certs.append(check())
        except NotCheckable as exc:
            log.info("certificate skipped: %s", exc)
    return certs


def exit_code(status: Status) -> int:
    if status is Status.CONVERGED:
        return 0
    if status in (Status.MAX_ITERATIONS, Status.INNER_FAILURE):
        return 2
    return 1


def run_spec(spec: RunSpec, with_certificates: bool = True) -> SolveReport:
    spec.validate()
    problem, x0 = build_problem(spec)
    report = solve(problem, x0, spec.solver)
    if with_certificates and report.status is Status.CONVERGED:
        report.certificates = certify(problem, report.x_final, spec.solver.eps, spec.solver.seed)
    return report


# ----------------------------------------------------------------- commands

_FLAG_FIELDS = {"q": "q", "sigma": "sigma", "tau": "tau", "eps": "eps", "lmin": "l_min",
                "lmax": "l_max", "max_iter": "max_outer", "inner_max_iter": "max_inner",
                "seed": "seed"}


def _solver_overrides(args) -> dict:
    return {fld: getattr(args, flag) for flag, fld in _FLAG_FIELDS.items()
            if getattr(args, flag, None) is not None}


def _spec_from_args(args) -> RunSpec:
    base: dict = {}
    if args.config:
        base = _read_manifest(args.config)
    for key in ("problem", "data", "lam", "c_lambda", "nu"):
        v = getattr(args, key, None)
        if v is not None:
            base[key] = v
    if getattr(args, "generator", None):
        base["generator"] = json.loads(args.generator)
        base.pop("data", None)
    elif getattr(args, "data", None):
        base.pop("generator", None)
    if "problem" not in base:
        raise ConfigError("problem", "set --problem or give it in --config")
    spec = RunSpec.from_dict(base)
    over = _solver_overrides(args)
    if over:
        spec.solver = spec.solver.replace(**over)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        spec.trace, spec.report = str(out / "trace.csv"), str(out / "report.json")
    return spec


def cmd_solve(args) -> int:
    spec = _spec_from_args(args)
    report = run_spec(spec)
    if spec.trace:
        write_trace_csv(spec.trace, report.traces)
    if spec.report:
        write_report(spec.report, report)
        saved = spec.to_dict()
        if saved.get("data"):
            saved["data"] = str(Path(saved["data"]).resolve())
        _write_json(Path(spec.report).with_name("spec.json"), saved)
    print(f"status={report.status.value} iter={report.iterations} F={report.F_final:.10e} "
          f"resi={report.resid_final:.3e} time={report.wall_s:.3f}s")
    return exit_code(report.status)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def cmd_generate(args) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    seed = 0 if args.seed is None else args.seed
    manifest = {"family": args.family, "seed": seed}
    if args.family == "student_t":
        if args.d not in DYNAMIC_RANGES:
            print(f"warning: d={args.d:g} dB is outside {DYNAMIC_RANGES}; "
                  "treated as a continuous dial", file=sys.stderr)
        inst = gen_student_t_instance(n=args.n or 4096, d=args.d, seed=seed,
                                      c_lambda=args.c_lambda, nu=args.nu)
        np.save(out / "J.npy", inst.A.J)
        np.save(out / "b.npy", inst.b)
        np.save(out / "x_true.npy", inst.x_true)
        manifest.update(params=dataclasses.asdict(inst.params), lam=inst.lam,
                        files=["J.npy", "b.npy", "x_true.npy"])
    elif args.family == "mvsk":
        if args.returns:
            _, R = read_returns_csv(_existing(args.returns), log_returns=not args.raw_returns)
            manifest["source"] = str(args.returns)
        else:
            R = log_returns(synthetic_prices(args.n or 50, args.T, seed))
            manifest["source"] = {"synthetic": {"n": args.n or 50, "T": args.T, "seed": seed}}
        for name, arr in zip(("mu", "Sigma", "S", "Kt"), sample_moments(R)):
            np.save(out / f"{name}.npy", arr)
        manifest.update(n=int(R.shape[0]), T=int(R.shape[1]),
                        files=["mu.npy", "Sigma.npy", "S.npy", "Kt.npy"])
    else:
        A, b, x_true = gen_logistic_instance(args.m, args.n or 50, seed)
        write_libsvm(out / "data.libsvm", A, b)
        np.save(out / "x_true.npy", x_true)
        manifest.update(m=args.m, n=args.n or 50, files=["data.libsvm", "x_true.npy"])
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {', '.join(manifest['files'])} and manifest.json to {out}")
    return 0


def _parse_q_list(text: Optional[str], default) -> list:
    if text is None:
        return list(default)
    return [float(t) for t in text.split(",") if t.strip()]


def _suite_rows(suite: str, q_list: list, args) -> list:
    """(label, RunSpec) pairs for a benchmark suite."""
    base = SolverConfig()
    over = _solver_overrides(args)
    rows = []
    if suite == "logistic_small":
        path = args.data or os.environ.get(COLON_ENV, "colon-cancer.bz2")
        for lam in (1e-4, 1e-6):
            for q in q_list:
                cfg = base.replace(q=q, eps=1e-6, **over)
                rows.append((f"colon lam={lam:g} q={q:g}",
                             RunSpec(problem="logistic", data=path, lam=lam, solver=cfg)))
    elif suite == "student_t_desk":
        for d in (20, 40):
            for seed in (0, 1, 2):
                for q in q_list:
                    cfg = base.replace(q=q, eps=1e-5, **over)
                    rows.append((f"n=4096 d={d} seed={seed} q={q:g}",
                                 RunSpec(problem="student_t", solver=cfg,
                                         generator={"n": 4096, "d": d, "seed": seed})))
    elif suite == "mvsk_desk":
        for q in q_list:
            cfg = base.replace(q=q, eps=4e-6, **over)
            rows.append((f"n=50 q={q:g}", RunSpec(problem="mvsk", data=str(bundled("prices_n50.csv")),
                                                 solver=cfg)))
    else:
        rs = RATE_SWEEP
        for q in q_list:
            cfg = base.replace(q=q, eps=rs["eps"], **over)
            rows.append((f"m={rs['m']} n={rs['n']} q={q:g}",
                         RunSpec(problem="logistic", lam=rs["lam"], solver=cfg,
                                 generator={"m": rs["m"], "n": rs["n"], "seed": rs["seed"]})))
    return rows


def _bench_row(item):
    idx, label, spec, out_dir = item
    row = {"row": idx, "label": label, "q": spec.solver.q}
    try:
        problem, x0 = build_problem(spec.validate())
        rep = solve(problem, x0, spec.solver)
    except (QregError, OSError, ValueError) as exc:
        row.update(status="Error", error=str(exc), failed=True)
        return row
    trace_path = Path(out_dir) / f"trace_{idx:03d}.csv"
    write_trace_csv(trace_path, rep.traces)
    h_min = math.nan
    if rep.status is Status.CONVERGED:
        try:
            h_min = second_order_check(problem, rep.x_final).evidence["H_min"]
        except NotCheckable:
            pass
    rate = estimate_rate([t.outer_resid for t in rep.traces] + [rep.resid_final])
    row.update(status=rep.status.value, iter=rep.iterations, Fval=rep.F_final,
               resi=rep.resid_final, time=rep.wall_s, xnz=count_nonzeros(rep.x_final),
               H_min=h_min, rate=rate.summary, trace=trace_path.name,
               failed=rep.status is not Status.CONVERGED)
    return row


BENCH_COLUMNS = ("row", "label", "q", "status", "iter", "Fval", "resi", "time", "xnz",
                 "H_min", "rate", "trace", "error")


def cmd_bench(args) -> int:
    q_list = _parse_q_list(args.q_list, DEFAULT_Q[args.suite])
    if not q_list:
        raise ConfigError("q_list", "needs at least one value")
    for q in q_list:
        validate_config(SolverConfig(q=q))
    out = Path(args.out or f"bench_{args.suite}")
    out.mkdir(parents=True, exist_ok=True)
    items = [(i, label, spec, str(out)) for i, (label, spec) in
             enumerate(_suite_rows(args.suite, q_list, args))]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_row, items))
    else:
        rows = [_bench_row(it) for it in items]
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    for r in rows:
        if "iter" in r:
            print(f"{r['label']:<32} {r['status']:<14} iter={r['iter']:<4} "
                  f"F={r['Fval']:.6e} resi={r['resi']:.2e} xnz={r['xnz']} rate={r['rate']}")
        else:
            print(f"{r['label']:<32} {r['status']:<14} {r['error']}")
    return 2 if any(r["failed"] for r in rows) else 0


def cmd_check(args) -> int:
    saved = Path(args.report).with_name("spec.json")
    if not args.config and not args.problem and saved.is_file():
        args.config = str(saved)
    spec = _spec_from_args(args)
    report = read_report(args.report)
    problem, _ = build_problem(spec.validate())
    certs = certify(problem, report.x_final, spec.solver.eps, spec.solver.seed)
    print(json.dumps([c.to_dict() for c in certs], indent=1))
    return 0 if all(c.passed for c in certs) else 2


# -------------------------------------------------------------------- parser

def _add_solver_flags(p):
    p.add_argument("--q", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--lmin", type=float)
    p.add_argument("--lmax", type=float)
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--inner-max-iter", type=int, dest="inner_max_iter")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON RunSpec; flags override its fields")
    p.add_argument("--out", help="output directory")


def _add_problem_flags(p):
    p.add_argument("--problem", choices=FAMILIES)
    p.add_argument("--data", help="LIBSVM file, returns/prices CSV or instance manifest")
    p.add_argument("--generator", help="generator parameters as a JSON object")
    p.add_argument("--lam", type=float)
    p.add_argument("--c-lambda", type=float, dest="c_lambda")
    p.add_argument("--nu", type=float)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qregpn", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    _add_problem_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="write a seeded instance and its manifest")
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--d", type=float, default=20.0)
    p.add_argument("--T", type=int, default=260)
    p.add_argument("--c-lambda", type=float, default=0.1, dest="c_lambda")
    p.add_argument("--nu", type=float, default=0.25)
    p.add_argument("--returns", help="returns/prices CSV for mvsk")
    p.add_argument("--raw-returns", action="store_true",
                   help="the CSV already holds returns, not prices")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--q-list", dest="q_list", help="comma-separated q values")
    p.add_argument("--data", help=f"colon-cancer file (default ${COLON_ENV})")
    p.add_argument("--jobs", type=int, default=1)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check", help="re-run certificates on a saved report")
    p.add_argument("report")
    _add_problem_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_check)
    return ap


def _setup_logging():
    level = os.environ.get("QREG_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: parse failure: {exc}", file=sys.stderr)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (QregError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point.

Every subcommand writes one JSON document holding the library version, the
effective configuration and the result. Output is deterministic: keys are
sorted and nothing time dependent is recorded. Exit status is 0 on success,
2 when a verification fails and 1 on usage or domain errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import __version__
from . import generators as gen
from .elliptical_mc import Theorem2Config, verify_theorem2
from .hgf import SeriesSpec, elliptical_binomial_coeffs, p_series_1, verify_theorem1
from .jack import get_table, jack_c
from .partitions import as_partition, partitions_of
from .special_fns import gen_pochhammer, ln_mv_gamma, mv_gamma

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2
THREADS_ENV = "ELLBINOM_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    subcommand: str
    flags: dict
    seed: int | None = None
    fmt: str = "json"
    out: str | None = None


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _generator(text: str) -> gen.Generator:
    try:
        return gen.parse_generator(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _generator_list(text: str) -> list[gen.Generator]:
    try:
        return gen.parse_generator_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ellbinom", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    s = sub.add_parser("partitions", help="list partitions of k with at most max-parts parts")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--max-parts", type=int, required=True)

    s = sub.add_parser("eval", help="evaluate a special function or generator moment")
    s.add_argument("--fn", required=True,
                   choices=["ln_mv_gamma", "mv_gamma", "gen_pochhammer", "deriv_moment", "coeffs"])
    s.add_argument("--beta", type=int, default=1)
    s.add_argument("--m", type=int, default=1)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--kappa", type=_ints, default=[])
    s.add_argument("--generator", type=_generator, default=None)
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--K", type=int, default=10)
    s.add_argument("--method", default="closed", choices=["closed", "quad", "checked"])

    s = sub.add_parser("jack", help="C-normalized Jack polynomial at a spectrum")
    s.add_argument("--beta", type=int, required=True)
    s.add_argument("--kappa", type=_ints, required=True)
    s.add_argument("--x", type=_floats, required=True)

    s = sub.add_parser("hgf", help="classical pFq of matrix argument")
    s.add_argument("--beta", type=int, default=1)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--a", type=_floats, default=[])
    s.add_argument("--b", type=_floats, default=[])
    s.add_argument("--x", type=_floats, required=True)
    s.add_argument("--K", type=int, default=40)
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--accelerate", action="store_true")

    s = sub.add_parser("verify-theorem1", help="determinant versus elliptical binomial series")
    s.add_argument("--beta", type=int, required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--x", type=_floats, required=True)
    s.add_argument("--generator", type=_generator, default=gen.Gaussian())
    s.add_argument("--K", type=int, default=40)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--coeff-method", default="closed", choices=["closed", "quad", "checked"])

    s = sub.add_parser("mc-beta", help="Monte Carlo check of the generator-free beta law")
    s.add_argument("--beta", type=int, default=1)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--n1", type=int, default=6)
    s.add_argument("--n2", type=int, default=8)
    s.add_argument("--generators", type=_generator_list,
                   default=[gen.Gaussian(s=2.0), gen.PearsonVII(p=40.0, nu=2.0)])
    s.add_argument("--N", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--chunk", type=int, default=10_000)
    s.add_argument("--no-sigma-check", action="store_true")
    s.add_argument("--threads", type=int, default=int(os.environ.get(THREADS_ENV, "1")))
    s.add_argument("--csv", default=None, help="also write raw per-draw statistics to this CSV file")

    for name, sp in sub.choices.items():
        sp.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    return p


def _jsonable(obj):
    if isinstance(obj, gen.Generator):
        return obj.to_dict()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _dumps(doc: dict) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def _cmd_partitions(a):
    parts = partitions_of(a.k, a.max_parts)
    return {"count": len(parts), "partitions": [list(p) for p in parts]}, True


def _cmd_eval(a):
    if a.fn == "ln_mv_gamma":
        return {"value": ln_mv_gamma(a.beta, a.m, a.a)}, True
    if a.fn == "mv_gamma":
        return {"value": mv_gamma(a.beta, a.m, a.a)}, True
    if a.fn == "gen_pochhammer":
        return {"value": gen_pochhammer(a.beta, a.a, as_partition(a.kappa))}, True
    if a.generator is None:
        raise UsageError(f"--fn {a.fn} needs --generator")
    if a.fn == "deriv_moment":
        return {"value": gen.deriv_moment(a.generator, a.k, a.a, method=a.method)}, True
    coeffs = elliptical_binomial_coeffs(a.generator, a.beta, a.m, a.a, a.K, method=a.method)
    return {"coeffs": [float(c) for c in coeffs]}, True


def _cmd_jack(a):
    return {"value": jack_c(a.beta, as_partition(a.kappa), a.x)}, True


def _cmd_hgf(a):
    if len(a.a) != a.p or len(a.b) != a.q:
        raise UsageError(f"--p {a.p} --q {a.q} needs {a.p} values in --a and {a.q} in --b")
    spec = SeriesSpec(a.beta, tuple(a.a), tuple(a.b), None, a.K, a.tol, a.accelerate)
    res = p_series_1(spec, a.x)
    return {"result": res.to_dict()}, res.converged


def _cmd_verify1(a):
    table = get_table(a.beta, a.K, len(a.x))
    rec = verify_theorem1(a.generator, a.beta, a.a, a.x, a.K, a.tol, table, coeff_method=a.coeff_method)
    return {"record": rec.to_dict()}, rec.passed


def _cmd_mc(a):
    cfg = Theorem2Config(beta=a.beta, m=a.m, n1=a.n1, n2=a.n2, N=a.N, seed=a.seed, chunk=a.chunk,
                         threads=max(1, a.threads), sigma_check=not a.no_sigma_check)
    raw = {} if a.csv else None
    reports = verify_theorem2(cfg, a.generators, raw=raw)
    if a.csv:
        _write_csv(a.csv, raw)
    ok = all(r.passed for r in reports)
    body = {
        "mc_config": asdict(cfg),
        "reports": [r.to_dict() for r in reports],
        "n_failed": sum(not r.passed for r in reports),
        "passed": ok,
    }
    return body, ok


def _write_csv(path: str, raw: dict) -> None:
    keys = ["det", "trace", "lmax", "u11", "rot_u11"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample", "draw", *keys])
    for label, st in raw.items():
        for i in range(st["det"].size):
            w.writerow([label, i, *(repr(float(st[k][i])) for k in keys)])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


_COMMANDS = {
    "partitions": _cmd_partitions,
    "eval": _cmd_eval,
    "jack": _cmd_jack,
    "hgf": _cmd_hgf,
    "verify-theorem1": _cmd_verify1,
    "mc-beta": _cmd_mc,
}


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    """Run the CLI; returns the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        flags = _jsonable({k: v for k, v in vars(args).items() if k not in ("subcommand", "out")})
        cfg = RunConfig(args.subcommand, flags, getattr(args, "seed", None), "json", args.out)
        body, ok = _COMMANDS[args.subcommand](args)
    except UsageError as exc:
        print(str(exc), file=stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError) as exc:
        # DomainError and friends subclass ValueError and name the bad parameter
        print(f"ellbinom: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_USAGE
    doc = {"version": __version__, "config": asdict(cfg), "ok": ok, **body}
    text = _dumps(doc)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK if ok else EXIT_FAILED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

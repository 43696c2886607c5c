"""Command-line interface.

Examples::

    condorcet limit --culture impartial:m=3
    condorcet exact --culture impartial:m=3 --n 3
    condorcet sweep --culture mallows:m=3,rho=ln2,ref=last \\
        --methods asymptotic,exact,mc --n 2..100 --mc-samples 10000 --seed 42 -o fig1.csv
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import asymptotics, exact, montecarlo
from .culture import CultureSpec, build_culture, char_poly
from .errors import CondorcetError, InvalidInputError
from .saddle import EPS_C, Thresholds

HEADER = ["n", "method", "value", "log_value", "stderr", "dominant_term", "parity"]
METHODS = ("asymptotic", "expansion", "exact", "mc")

EXIT_OK, EXIT_INVALID, EXIT_COMPUTE = 0, 2, 3


def parse_rho(v) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("ln2", "log2"):
            return math.log(2)
        try:
            return float(s)
        except ValueError:
            raise InvalidInputError(f"cannot parse rho {v!r}") from None
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    raise InvalidInputError(f"cannot parse rho {v!r}")


def _spec_from_dict(d: dict) -> CultureSpec:
    if not isinstance(d, dict):
        raise InvalidInputError("culture JSON must be an object")
    kind = d.get("kind")
    if kind in ("ic", "impartial"):
        return CultureSpec("impartial", int(d["m"]))
    if kind == "mallows":
        return CultureSpec("mallows", int(d["m"]), rho=parse_rho(d.get("rho", 0.0)), reference=d.get("reference", "m-last"))
    if kind == "explicit":
        probs = d.get("probs")
        if not isinstance(probs, dict):
            raise InvalidInputError("explicit culture needs a 'probs' object")
        return CultureSpec("explicit", int(d["m"]), probs=probs)
    raise InvalidInputError(f"unknown culture kind {kind!r}")


def parse_culture(text: str):
    """Inline preset ``kind:key=value,...`` or a path to a JSON file."""
    path = Path(text)
    if path.suffix == ".json" or path.is_file():
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise InvalidInputError(f"cannot read {text}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"malformed culture JSON in {text}: {exc}") from None
        try:
            return build_culture(_spec_from_dict(data))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"bad culture JSON: {exc}") from None
    kind, _, rest = text.partition(":")
    opts = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise InvalidInputError(f"expected key=value in culture preset, got {item!r}")
        opts[key.strip()] = val.strip()
    aliases = {"ref": "reference"}
    opts = {aliases.get(k, k): v for k, v in opts.items()}
    if "m" not in opts:
        raise InvalidInputError("culture preset needs m=<count>")
    try:
        opts["m"] = int(opts["m"])
    except ValueError:
        raise InvalidInputError(f"m must be an integer, got {opts['m']!r}") from None
    return build_culture(_spec_from_dict({"kind": kind.strip(), **opts}))


def parse_n(text: str) -> list:
    """``50``, ``2..100`` or ``2..100:2``."""
    try:
        if ".." in text:
            lo, _, hi = text.partition("..")
            hi, _, step = hi.partition(":")
            ns = list(range(int(lo), int(hi) + 1, int(step) if step else 1))
        else:
            ns = [int(text)]
    except ValueError:
        raise InvalidInputError(f"cannot parse n {text!r}") from None
    if not ns or min(ns) < 1:
        raise InvalidInputError("n values must be positive")
    return ns


def parse_alpha(text: str | None, d: int, weak: bool) -> Thresholds:
    if text is None:
        return Thresholds.condorcet(d, weak)
    try:
        vals = [float(eval_token(v)) for v in text.split(",")]
    except ValueError:
        raise InvalidInputError(f"cannot parse alpha {text!r}") from None
    if len(vals) == 1:
        vals = vals * d
    if len(vals) != d:
        raise InvalidInputError(f"alpha needs 1 or {d} values, got {len(vals)}")
    return Thresholds(np.array(vals), weak)


def eval_token(v: str) -> float:
    v = v.strip()
    if "/" in v:
        a, b = v.split("/")
        return float(a) / float(b)
    return float(v)


def _fmt(x) -> str:
    if x is None:
        return ""
    return "%.17g" % x


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


class Runner:
    def __init__(self, args):
        self.culture = parse_culture(args.culture)
        m = self.culture.m
        self.candidate = m if args.candidate is None else args.candidate
        if not 1 <= self.candidate <= m:
            raise InvalidInputError(f"candidate must be in 1..{m}")
        self.th = parse_alpha(args.alpha, m - 1, args.weak)
        self.eps_c = args.eps_c
        self.dominant_only = getattr(args, "dominant_only", False)
        self.quantity = "complement" if getattr(args, "complement", False) else "probability"
        self.mc_samples = getattr(args, "mc_samples", 10000)
        self.seed = getattr(args, "seed", 0)
        self._terms = None

    @property
    def poly(self):
        return char_poly(self.culture, self.candidate)

    @property
    def terms(self):
        if self._terms is None:
            self._terms = asymptotics.reduce_terms(self.poly, self.th, self.eps_c)
        return self._terms

    def _pick(self, p: float, lp: float | None = None):
        if self.quantity == "complement":
            c = 1.0 - p
            return c, _log(c)
        return p, _log(p) if lp is None else lp

    def row_asymptotic(self, n):
        est = asymptotics.combine_terms(self.terms, self.th, n, self.dominant_only)
        if self.quantity == "complement":
            v, lv = est.complement, est.log_complement
        else:
            v, lv = est.probability, est.log_probability
        if math.isinf(v) or (lv > -700 and v == 0.0):
            v = math.exp(lv) if lv < 700 else math.inf
        return [n, "asymptotic", v, lv, None, ";".join(est.dominant_terms), n % 2]

    def row_expansion(self, n):
        ex = asymptotics.expansion_estimate(self.poly, None, self.th, n, self.eps_c)
        v, lv = self._pick(ex.value)
        return [n, "expansion", v, lv, math.exp(ex.log_scale) * ex.a1_error / math.sqrt(n), "", n % 2]

    def row_exact(self, n):
        v, lv = self._pick(exact.exact_probability(self.poly, None, self.th, n))
        return [n, "exact", v, lv, None, "", n % 2]

    def row_mc(self, n):
        r = montecarlo.mc_estimate(self.culture, self.candidate, self.th, n, self.mc_samples, self.seed)
        v, lv = self._pick(r.estimate)
        return [n, "mc", v, lv, r.stderr, "", n % 2]

    def rows(self, methods, ns):
        out = []
        for method in methods:
            fn = getattr(self, f"row_{method}")
            if method == "exact":
                with ThreadPoolExecutor(montecarlo.thread_count()) as ex:
                    out.extend(ex.map(fn, ns))
            else:
                out.extend(fn(n) for n in ns)
        order = {m: i for i, m in enumerate(methods)}
        out.sort(key=lambda r: (r[0], order[r[1]]))
        return out


def write_csv(rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(HEADER)
    for n, method, v, lv, se, dom, par in rows:
        w.writerow([n, method, _fmt(v), _fmt(lv), _fmt(se), dom, "odd" if par else "even"])


def _common(p: argparse.ArgumentParser, with_n=True):
    p.add_argument("--culture", required=True, help="preset such as mallows:m=3,rho=ln2,ref=last, or a JSON file")
    p.add_argument("--candidate", type=int, default=None, help="designated candidate (default m)")
    p.add_argument("--alpha", default=None, help="victory threshold(s), one value or one per adversary")
    p.add_argument("--weak", action="store_true", help="weak alpha-winner convention")
    p.add_argument("--eps-c", type=float, default=EPS_C, help="criticality tolerance")
    if with_n:
        p.add_argument("--n", required=True, help="voters: 50, 2..100 or 2..100:2")
        p.add_argument("--complement", action="store_true", help="report 1 - P instead of P")
        p.add_argument("-o", "--output", default=None, help="CSV output path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="condorcet", description="Condorcet and alpha-winner probabilities.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", help="evaluate several methods over a range of n and write CSV")
    _common(sp)
    sp.add_argument("--methods", default="asymptotic,exact", help="comma list of asymptotic,expansion,exact,mc or all")
    sp.add_argument("--mc-samples", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dominant-only", action="store_true", help="keep only the dominant asymptotic terms")

    lp = sub.add_parser("limit", help="limit of the winning probability as n grows")
    _common(lp, with_n=False)

    for name in ("exact", "asymptotic", "expansion", "mc"):
        p = sub.add_parser(name, help=f"{name} winning probability")
        _common(p)
        if name == "mc":
            p.add_argument("--mc-samples", type=int, default=10000)
            p.add_argument("--seed", type=int, default=0)
        if name == "asymptotic":
            p.add_argument("--dominant-only", action="store_true")
    return ap


def run_command(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        runner = Runner(args)
        if args.command == "limit":
            print("%.15g" % asymptotics.limit_probability(runner.poly, None, runner.th, runner.eps_c))
            return EXIT_OK
        ns = parse_n(args.n)
        if args.command == "sweep":
            methods = METHODS if args.methods.strip() == "all" else tuple(m.strip() for m in args.methods.split(","))
            bad = [m for m in methods if m not in METHODS]
            if bad:
                raise InvalidInputError(f"unknown method(s) {bad}")
        else:
            methods = (args.command,)
        if "mc" in methods and runner.mc_samples < 1:
            raise InvalidInputError("--mc-samples must be positive")
    except (InvalidInputError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        rows = runner.rows(methods, ns)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (CondorcetError, ArithmeticError, MemoryError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE

    if args.output:
        with open(args.output, "w", newline="") as fh:
            write_csv(rows, fh)
        what = "1 - P" if runner.quantity == "complement" else "P"
        print(f"wrote {len(rows)} rows ({what}, n={ns[0]}..{ns[-1]}, methods={','.join(methods)}) to {args.output}",
              file=sys.stderr)
    elif args.command != "sweep" and len(ns) == 1:
        print("%.15g" % rows[0][2])
    else:
        write_csv(rows, sys.stdout)
    return EXIT_OK


def main(argv=None):
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()

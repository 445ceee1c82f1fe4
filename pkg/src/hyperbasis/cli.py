"""Batch front end: read a JSON problem file, run tasks, print results with certificates.

Exit codes: 0 every task succeeded and every certificate passed; 1 a
certificate failed; 2 the input could not be parsed; 3 a precondition was
violated; 4 precision ran out after three doublings; 5 a search came up empty.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from typing import Callable

from . import __version__
from . import linalg as la
from .align import (ChainAlignment, HyperbolicBasis, adapt_to_isotropic, common_basis,
                    isometry_between, max_isotropic)
from .chains import (LatticeChain, random_isometry, standard_chain, transform_chain,
                     validate_chain)
from .errors import HyperbasisError, InvalidChain, PrecisionExhausted, SearchExhausted
from .lattice import (Lattice, apte_decompose, dual,
                      maximal_lattice, maximalize, modified_dual, predicates)
from .padic import PAdicContext, from_json, hilbert_symbol, square_class_representatives
from .space import ALTERNATING, QUADRATIC, BilinearSpace
from .verify import (Certificate, brute_hilbert, chain_certificate, check_adapted,
                     check_alignment, check_isometry)

EXIT_OK, EXIT_CERT, EXIT_PARSE, EXIT_PRECONDITION, EXIT_PRECISION, EXIT_SEARCH = 0, 1, 2, 3, 4, 5
MAX_DOUBLINGS = 3
DEFAULT_PRECISION = 48


class ProblemError(ValueError):
    """Malformed problem file."""


# -- serialization ----------------------------------------------------------------------

def vector_json(v):
    return [x.to_json() for x in v]


def matrix_json(M):
    return [vector_json(r) for r in M]


def lattice_json(L: Lattice):
    return {"basis": matrix_json(L.basis), "scale": L.scale, "rank": L.rank}


def _read_vector(row, ctx):
    return tuple(from_json(x, ctx) for x in row)


def _read_matrix(rows, ctx):
    return tuple(_read_vector(r, ctx) for r in rows)


def alignment_json(A: ChainAlignment):
    return {"e": matrix_json(A.basis.e), "f": matrix_json(A.basis.f),
            "kernel": matrix_json(A.basis.kernel_basis), "r": A.r, "s": A.s}


def read_alignment(obj, ctx) -> ChainAlignment:
    basis = HyperbolicBasis(_read_matrix(obj["e"], ctx), _read_matrix(obj["f"], ctx),
                            _read_matrix(obj.get("kernel", []), ctx))
    return ChainAlignment(basis, obj["r"], obj["s"])


# -- problem environment ------------------------------------------------------------------

@dataclass
class Problem:
    raw: dict
    p: int
    kind: str
    gram: list
    precision: int


class Environment:
    """All named objects of a problem, built at one working precision."""

    def __init__(self, problem: Problem, precision: int, seed: int):
        self.problem = problem
        self.seed = seed
        self.ctx = PAdicContext(problem.p, precision)
        self.space = BilinearSpace.from_rationals(problem.kind, problem.gram, self.ctx)
        self._lattices: dict = {}
        self._chains: dict = {}

    def lattice(self, name: str) -> Lattice:
        if name not in self._lattices:
            spec = self.problem.raw.get("lattices", {}).get(name)
            if spec is None:
                raise ProblemError(f"unknown lattice {name!r}")
            if isinstance(spec, dict):
                rows, scale = spec["basis"], int(spec.get("scale", 0))
            else:
                rows, scale = spec, 0
            self._lattices[name] = Lattice(self.space, _read_matrix(rows, self.ctx), scale)
        return self._lattices[name]

    def chain(self, name: str) -> LatticeChain:
        if name not in self._chains:
            spec = self.problem.raw.get("chains", {}).get(name)
            if spec is None:
                raise ProblemError(f"unknown chain {name!r}")
            if isinstance(spec, dict):
                C = standard_chain(self.space.witt, self.space)
                if spec.get("transform") or "transform_seed" in spec:
                    seed = int(spec.get("transform_seed", self.seed))
                    g = random_isometry(self.space, seed, int(spec.get("steps", 4)))
                    C = transform_chain(C, g)
            else:
                C = LatticeChain(tuple(self.lattice(m) for m in spec))
            self._chains[name] = C
        return self._chains[name]


def load_problem(text: str, precision_override=None) -> Problem:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ProblemError("problem file must be a JSON object")
    for key in ("p", "kind", "gram"):
        if key not in raw:
            raise ProblemError(f"missing field {key!r}")
    kind = raw["kind"]
    if kind not in (QUADRATIC, ALTERNATING):
        raise ProblemError(f"kind must be {QUADRATIC!r} or {ALTERNATING!r}")
    gram = raw["gram"]
    if not gram or any(len(r) != len(gram) for r in gram):
        raise ProblemError("gram must be a square matrix")
    precision = precision_override or raw.get("precision") or DEFAULT_PRECISION
    try:
        PAdicContext(2, int(precision))
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"bad precision {precision!r}: {exc}") from exc
    names = set(raw.get("lattices", {}))
    for cname, members in raw.get("chains", {}).items():
        if isinstance(members, list):
            missing = [m for m in members if m not in names]
            if missing:
                raise ProblemError(f"chain {cname!r} references undefined lattices {missing}")
    return Problem(raw, int(raw["p"]), kind, gram, int(precision))


# -- tasks -----------------------------------------------------------------------------------

def _lattice_arg(env: Environment, task: dict, key: str = "lattice") -> Lattice:
    if key not in task:
        raise ProblemError(f"task {task.get('op')!r} needs field {key!r}")
    return env.lattice(task[key])


def task_analyze(env, task):
    L = _lattice_arg(env, task)
    out = {"predicates": predicates(L, int(task.get("r", 0))).to_json()}
    try:
        dec = apte_decompose(L)
        u, m, a = dec.counts
        out["apte"] = {"unimodular_pairs": u, "p_modular_pairs": m, "anisotropic_rank": a}
    except PrecisionExhausted:
        raise
    except HyperbasisError as exc:
        out["apte"] = {"error": type(exc).__name__, "detail": str(exc)}
    return out, None


def task_dual(env, task):
    return {"dual": lattice_json(dual(_lattice_arg(env, task)))}, None


def task_modified_dual(env, task):
    return {"modified_dual": lattice_json(modified_dual(_lattice_arg(env, task)))}, None


def task_maximalize(env, task):
    r = int(task.get("r", 0))
    M = maximalize(env.lattice(task["lattice"]), r) if "lattice" in task else maximal_lattice(env.space, r)
    return {"maximal": lattice_json(M), "r": r}, None


def task_witt(env, task):
    W = env.space.witt
    return {"witt_index": W.witt_index,
            "pairs": [{"e": vector_json(e), "f": vector_json(f)} for e, f in W.pairs],
            "kernel": matrix_json(W.kernel_basis)}, None


def task_adapt(env, task):
    L = _lattice_arg(env, task)
    X = env.lattice(task["isotropic"]) if "isotropic" in task else max_isotropic(L)
    A = adapt_to_isotropic(L, X)
    res = {"e": matrix_json(A.e), "f": matrix_json(A.f), "pairing": list(A.pairing),
           "kernel": matrix_json(A.kernel_basis)}
    return res, check_adapted(L, X, A)


def task_orbit_isometry(env, task):
    L = _lattice_arg(env, task)
    X1, X2 = _lattice_arg(env, task, "x1"), _lattice_arg(env, task, "x2")
    g = isometry_between(L, X1, X2)
    return {"isometry": matrix_json(g)}, check_isometry(g, L, X1, X2)


def task_chain_validate(env, task):
    C = env.chain(task["chain"]) if "chain" in task else standard_chain(env.space.witt, env.space)
    rep = validate_chain(C)
    if not rep.ok:
        raise InvalidChain(rep.failures)
    return rep.to_json(), chain_certificate(rep, env.ctx.precision)


def task_chain_standard(env, task):
    C = standard_chain(env.space.witt, env.space)
    if "transform_seed" in task:
        C = transform_chain(C, random_isometry(env.space, int(task["transform_seed"]), int(task.get("steps", 4))))
    rep = validate_chain(C)
    return {"members": [lattice_json(L) for L in C.members]}, chain_certificate(rep, env.ctx.precision)


def task_common_basis(env, task):
    C1, C2 = env.chain(task["chain1"]), env.chain(task["chain2"])
    A = common_basis(C1, C2, check=False)
    res = alignment_json(A)
    res["trace"] = A.trace
    return res, check_alignment(A, C1, C2)


def task_verify(env, task):
    C1, C2 = env.chain(task["chain1"]), env.chain(task["chain2"])
    try:
        A = read_alignment(task["alignment"], env.ctx)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemError(f"malformed alignment: {exc}") from exc
    cert = check_alignment(A, C1, C2)
    return {"failed_checks": cert.failed_names()}, cert


def task_selftest(env, task):
    """Small fixed checks: Hilbert symbols against the brute-force oracle and the swap chain."""
    cert = Certificate("selftest", precision_used=env.ctx.precision)
    for p in (2, 3, 5):
        ctx = PAdicContext(p, env.ctx.precision)
        reps = square_class_representatives(p)
        cert.add(f"hilbert symbol agrees with search at p={p}",
                 lambda ctx=ctx, reps=reps, p=p: all(
                     hilbert_symbol(ctx(a), ctx(b)) == brute_hilbert(a, b, p) for a in reps for b in reps))
    ctx = PAdicContext(2, env.ctx.precision)
    S = BilinearSpace.from_rationals(ALTERNATING, [[0, 1], [-1, 0]], ctx)
    C1 = standard_chain(S.witt, S)
    C2 = transform_chain(C1, la.to_matrix([[0, 1], [-1, 0]], ctx))
    A = common_basis(C1, C2, check=False)
    cert.add("swap chain exponents", lambda: A.r == [[[0], [0]], [[0], [1]]] and A.s == [[[0], [1]], [[0], [0]]])
    cert.checks += check_alignment(A, C1, C2).checks
    return {"checks": len(cert.checks)}, cert


TASKS: dict[str, Callable] = {
    "analyze": task_analyze,
    "dual": task_dual,
    "modified-dual": task_modified_dual,
    "maximalize": task_maximalize,
    "witt": task_witt,
    "adapt": task_adapt,
    "orbit-isometry": task_orbit_isometry,
    "chain-validate": task_chain_validate,
    "chain-standard": task_chain_standard,
    "common-basis": task_common_basis,
    "verify": task_verify,
    "selftest": task_selftest,
}


def _error_code(exc: Exception) -> int:
    if isinstance(exc, ProblemError):
        return EXIT_PARSE
    if isinstance(exc, PrecisionExhausted):
        return EXIT_PRECISION
    if isinstance(exc, SearchExhausted):
        return EXIT_SEARCH
    return EXIT_PRECONDITION


def run_task(problem: Problem, task: dict, seed: int) -> dict:
    """Run one task, doubling the precision on PrecisionExhausted (at most three times)."""
    op = task.get("op")
    fn = TASKS.get(op)
    if fn is None:
        return {"op": op, "status": "error", "exit_code": EXIT_PARSE,
                "error": {"type": "ProblemError", "detail": f"unknown task {op!r}"}}
    precision = problem.precision
    escalations = []
    for attempt in range(MAX_DOUBLINGS + 1):
        try:
            env = Environment(problem, precision, seed)
            result, cert = fn(env, task)
            if cert is not None and cert.undecided:
                raise PrecisionExhausted("certificate checks undecided: " + ", ".join(cert.undecided))
        except PrecisionExhausted as exc:
            if attempt == MAX_DOUBLINGS:
                return _failure(op, exc, escalations)
            escalations.append({"from": precision, "to": 2 * precision, "reason": str(exc)})
            precision *= 2
            continue
        except (HyperbasisError, ProblemError, KeyError, ValueError, TypeError) as exc:
            if isinstance(exc, (KeyError, TypeError)):
                exc = ProblemError(f"malformed task: {exc}")
            return _failure(op, exc, escalations)
        out = {"op": op, "status": "ok", "precision_used": precision, "escalations": escalations,
               "result": result}
        if cert is not None:
            out["certificate"] = cert.to_json()
        out["exit_code"] = EXIT_OK if cert is None or cert.passed else EXIT_CERT
        return out


def _failure(op, exc, escalations):
    err = {"type": type(exc).__name__, "detail": str(exc)}
    if isinstance(exc, InvalidChain):
        err["failures"] = list(exc.failures)
    return {"op": op, "status": "error", "escalations": escalations, "error": err,
            "exit_code": _error_code(exc)}


def run(text: str, seed: int = 0, precision=None, only=None) -> dict:
    """Process a problem document; returns the output document (``exit_code`` included)."""
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    doc = {"version": __version__, "input_sha256": digest, "seed": seed}
    try:
        problem = load_problem(text, precision)
        tasks = problem.raw.get("tasks", [])
        if not isinstance(tasks, list) or not all(isinstance(t, dict) for t in tasks):
            raise ProblemError("tasks must be a list of objects")
    except ProblemError as exc:
        doc.update(results=[], exit_code=EXIT_PARSE, error={"type": "ProblemError", "detail": str(exc)})
        return doc
    if only:
        tasks = [t for t in tasks if t.get("op") in only] or [{"op": op} for op in only]
    doc["p"] = problem.p
    doc["precision"] = problem.precision
    results = [run_task(problem, t, seed) for t in tasks]
    doc["results"] = results
    doc["exit_code"] = next((r["exit_code"] for r in results if r["exit_code"]), EXIT_OK)
    return doc


def format_text(doc: dict) -> str:
    lines = [f"input sha256 {doc['input_sha256']}"]
    if "error" in doc:
        lines.append(f"error: {doc['error']['detail']}")
    for i, r in enumerate(doc.get("results", [])):
        head = f"[{i}] {r['op']}: {r['status']}"
        if r["status"] == "error":
            head += f" ({r['error']['type']}: {r['error']['detail']})"
        elif "certificate" in r:
            cert = r["certificate"]
            failed = [c["name"] for c in cert["checks"] if not c["pass"]]
            head += f", certificate {'pass' if cert['pass'] else 'FAIL'}"
            if failed:
                head += " [" + "; ".join(failed) + "]"
        if r.get("escalations"):
            head += f", precision raised to {r.get('precision_used', '?')}"
        lines.append(head)
        res = r.get("result", {})
        if "r" in res and "s" in res:
            lines.append(f"    r = {res['r']}")
            lines.append(f"    s = {res['s']}")
    lines.append(f"exit code {doc['exit_code']}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hyperbasis", description=__doc__.splitlines()[0])
    parser.add_argument("--input", required=True, help="problem file (JSON), '-' for stdin")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--precision", type=int, default=None,
                        help="working precision in p-adic digits (default: $HYPERBASIS_PRECISION, then the file, then 48)")
    parser.add_argument("--task", action="append", default=None, help="run only tasks with this op (repeatable)")
    parser.add_argument("--format", choices=("json", "text"), default="json")
    args = parser.parse_args(argv)
    precision = args.precision
    if precision is None and os.environ.get("HYPERBASIS_PRECISION"):
        precision = int(os.environ["HYPERBASIS_PRECISION"])
    try:
        if args.input == "-":
            text = sys.stdin.read()
        else:
            with open(args.input, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        print(f"hyperbasis: cannot read input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    doc = run(text, seed=args.seed, precision=precision, only=args.task)
    if args.format == "json":
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(format_text(doc))
    return doc["exit_code"]


if __name__ == "__main__":
    sys.exit(main())

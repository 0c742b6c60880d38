"""Command line driver: ``algca <group> <action> [options]``.

Exit codes: 0 success; 1 an analysis came out negative under ``--strict``
or a library error occurred; 2 usage or schema errors. Every failure
prints one line ``CODE: message`` on stderr.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import algebra, ca, cesaro, factor, measure, tmc
from .errors import AlgcaError, SchemaError
from .fixtures import FIXTURES
from .serialize import (
    code_from_dict,
    dumps,
    load_ca,
    load_measure,
    load_shift,
    load_table,
    parse_word,
    read_json,
    shift_from_dict,
)

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2

COMMANDS = {
    "algebra": ("classify", "psi", "toyoda", "structure", "closure"),
    "shift": ("report", "words"),
    "ca": ("check-sc", "classify", "nscaling", "power"),
    "factor": ("decompose", "verify", "search"),
    "measure": ("parry", "gamma", "invariance"),
    "cesaro": ("run", "compare"),
}

# which inputs each command needs before anything runs
NEEDS_OP = {"algebra", "ca:check-sc", "ca:classify", "ca:nscaling", "ca:power", "factor:decompose"}
NEEDS_SHIFT = {"shift", "ca:check-sc", "measure:parry", "measure:gamma"}


class UsageError(Exception):
    code = "UsageError"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunSpec:
    command: str
    action: str
    args: argparse.Namespace
    table: algebra.CayleyTable | None = None
    shift: tmc.MarkovShift | None = None
    automaton: ca.CellularAutomaton | None = None
    extra: dict = field(default_factory=dict)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="algca", description="Algebraic cellular automata on Markov shifts.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for group, actions in COMMANDS.items():
        g = sub.add_parser(group)
        gs = g.add_subparsers(dest="action", required=True, parser_class=_Parser)
        for action in actions:
            a = gs.add_parser(action)
            _common(a)
    return p


def _common(a):
    a.add_argument("--fixture", choices=FIXTURES, help="named Cayley table")
    a.add_argument("--op", help="Cayley table JSON")
    a.add_argument("--shift", help="shift JSON, or 'full' for the full shift over the operation")
    a.add_argument("--ca", help="automaton JSON (table form or explicit rule)")
    a.add_argument("--ca-b", help="second automaton JSON (factor verify/search)")
    a.add_argument("--code", help="code JSON for factor verify")
    a.add_argument("--measure", help="measure JSON")
    a.add_argument("--seed-edges", help="shift JSON whose edges seed algebra closure")
    a.add_argument("--mode", default=None,
                   help="psi|nscaling (structure/decompose) or exact|mc (cesaro)")
    a.add_argument("--depth", type=int, default=None)
    a.add_argument("--k", type=int, default=None)
    a.add_argument("--N", type=int, default=None)
    a.add_argument("--n", type=int, default=None)
    a.add_argument("--m-max", type=int, default=4)
    a.add_argument("--max-window", type=int, default=1)
    a.add_argument("--word", action="append", default=None)
    a.add_argument("--samples", type=int, default=10**5)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--tol", type=float, default=None)
    a.add_argument("--full", action="store_true", help="nscaling on the full-shift extension")
    a.add_argument("--strict", action="store_true", help="exit 1 on negative analyses")
    a.add_argument("--lax", action="store_true", help="build automata without requiring SC")
    a.add_argument("--strict-exact", action="store_true", help="never fall back to Monte Carlo")
    a.add_argument("--out", help="write the JSON report here instead of stdout")
    a.add_argument("--csv", help="write the Cesaro series as CSV here")


def _mode(text, default):
    if text is None:
        return default
    aliases = {"psi": algebra.PSI_ASSOCIATIVE, "psi_associative": algebra.PSI_ASSOCIATIVE,
               "nscaling": algebra.N_SCALING, "n_scaling": algebra.N_SCALING}
    if text not in aliases:
        raise UsageError(f"--mode must be psi or nscaling, got {text!r}")
    return aliases[text]


def load_spec(argv) -> RunSpec:
    """Parse ``argv`` and load every referenced input; nothing is computed yet."""
    args = _parser().parse_args(argv)
    key = f"{args.command}:{args.action}"
    spec = RunSpec(args.command, args.action, args)
    if args.fixture and args.op:
        raise UsageError("give either --fixture or --op, not both")
    if args.fixture or args.op:
        spec.table = load_table(args.fixture or args.op)
    if (args.command in NEEDS_OP or key in NEEDS_OP) and spec.table is None and not args.ca:
        raise UsageError(f"{args.command} {args.action} needs --op or --fixture")
    if (args.command in NEEDS_SHIFT or key in NEEDS_SHIFT) and not args.shift and not args.ca:
        raise UsageError(f"{args.command} {args.action} needs --shift")
    if args.shift:
        spec.shift = load_shift(args.shift, spec.table)
    elif spec.table is not None and args.command in ("ca", "factor", "cesaro", "measure"):
        spec.shift = load_shift("full", spec.table)
    if args.ca:
        spec.automaton = load_ca(args.ca, strict=not args.lax)
        if spec.shift is None:
            spec.shift = spec.automaton.shift
    if spec.table is not None and spec.shift is not None:
        for s in spec.shift.symbols:
            if s not in spec.table.alphabet:
                raise SchemaError(f"shift symbol {s!r} is not in the operation's alphabet")
    if args.command == "cesaro" or key in ("measure:invariance", "measure:gamma"):
        if not args.measure:
            raise UsageError(f"{args.command} {args.action} needs --measure")
        if spec.shift is None:
            raise UsageError(f"{args.command} {args.action} needs --shift, --ca or an operation")
        spec.extra["measure"] = load_measure(args.measure, spec.shift)
    if args.command == "cesaro" and args.N is None:
        raise UsageError("cesaro needs --N")
    if args.command == "cesaro" and not args.word and args.k is None:
        raise UsageError("cesaro needs --word or --k")
    return spec


def _automaton(spec: RunSpec, strict=None) -> ca.CellularAutomaton:
    if spec.automaton is not None:
        return spec.automaton
    if spec.table is None or spec.shift is None:
        raise UsageError("an automaton needs --ca, or --op/--fixture with --shift")
    lax = spec.args.lax if strict is None else not strict
    spec.automaton = ca.build_ca(spec.shift, spec.table, strict=not lax)
    return spec.automaton


def _words(spec: RunSpec, shift: tmc.MarkovShift) -> list:
    if spec.args.word:
        return [parse_word(w, shift.symbols) for w in spec.args.word]
    return cesaro.all_words(shift, spec.args.k)


# --- command bodies ----------------------------------------------------------


def _algebra(spec):
    t, a = spec.table, spec.action
    if a == "classify":
        rep = algebra.classify_table(t)
        out = rep.to_dict()
        psi = algebra.find_psi(t)
        out["psi_associative"] = psi is not None
        out["psi"] = psi
        out["psi_cycles"] = None if psi is None else [
            list(c) for c in factor.permutation_cycles(psi) if len(c) > 1]
        return out, True
    if a == "psi":
        psi = algebra.find_psi(t)
        return {"psi_associative": psi is not None, "psi": psi}, psi is not None
    if a == "toyoda":
        dec = algebra.toyoda_decompose(t)
        if dec is None:
            return {"found": False, "obstruction": algebra.toyoda_obstruction(t)}, False
        rebuilt = dec.reconstruct()
        out = {"found": True, **dec.to_dict(),
               "entries_checked": t.size**2, "reconstructs": rebuilt == t}
        return out, True
    if a == "structure":
        rs = algebra.right_structure(t, _mode(spec.args.mode, algebra.PSI_ASSOCIATIVE))
        return rs.to_dict(), True
    if a == "closure":
        if not spec.args.seed_edges:
            raise UsageError("algebra closure needs --seed-edges")
        seed = shift_from_dict(read_json(spec.args.seed_edges)).edges
        edges = algebra.sc_closure(t, seed)
        syms = [s for s in t.symbols if any(s in e for e in edges)]
        return {"symbols": syms, "edges": [list(e) for e in sorted(edges, key=lambda e: (
            t.alphabet.index(e[0]), t.alphabet.index(e[1])))]}, True
    raise UsageError(a)


def _shift(spec):
    s = spec.shift
    if spec.action == "report":
        return tmc.shift_report(s, spec.args.depth or 6).to_dict(), True
    k = spec.args.k or spec.args.depth
    if k is None:
        raise UsageError("shift words needs --k")
    return {"k": k, "count": tmc.count_words(s, k),
            "words": [list(w) for w in tmc.allowed_words(s, k)]}, True


def _ca(spec):
    a = spec.action
    if a == "check-sc":
        res = ca.check_sc(spec.shift, spec.table)
        w = res.witness
        return {"structurally_compatible": res.ok,
                "witness": None if w is None else {"x_edge": list(w[0]), "y_edge": list(w[1]),
                                                   "image": list(w[2])}}, res.ok
    auto = _automaton(spec)
    if a == "classify":
        return auto.flags(), True
    if a == "nscaling":
        N = spec.args.N
        if N is None:
            raise UsageError("ca nscaling needs --N")
        res = ca.check_n_scaling(auto, N, full=spec.args.full)
        return {"N": N, "n_scaling": res.ok,
                "witness": None if res.witness is None else list(res.witness)}, res.ok
    if a == "power":
        n = spec.args.n or 1
        code = ca.power_rule(auto, n)
        return {"n": n, **code.to_dict()}, True
    raise UsageError(a)


def _factor(spec):
    a = spec.action
    if a == "decompose":
        auto = _automaton(spec)
        cert = factor.decompose(auto, _mode(spec.args.mode, algebra.PSI_ASSOCIATIVE),
                                depth=spec.args.depth or factor.DEFAULT_DEPTH, N=spec.args.N)
        ok = cert.product_verified and bool(cert.conjugacy)
        return cert.to_dict(), ok
    if not spec.args.ca_b:
        raise UsageError(f"factor {a} needs --ca-b")
    auto = _automaton(spec)
    other = load_ca(spec.args.ca_b, strict=not spec.args.lax)
    if a == "verify":
        if spec.args.code:
            code = code_from_dict(read_json(spec.args.code), auto.shift, other.shift)
        else:
            code = ca.symbol_code(auto.shift, other.shift, {s: s for s in auto.shift.symbols})
        res = factor.verify_conjugacy(auto, other, code, spec.args.depth or factor.DEFAULT_DEPTH)
        return res.to_dict(), res.verified
    code = factor.search_conjugacy(auto, other, spec.args.max_window)
    if code is None:
        return {"found": False}, False
    return {"found": True, **code.to_dict()}, True


def _measure(spec):
    a = spec.action
    if a == "parry":
        p = measure.parry_measure(spec.shift)
        out = p.to_dict()
        out["entropy"] = measure.entropy_rate(p)
        out["shift_entropy"] = tmc.entropy(spec.shift)
        return out, True
    mu = spec.extra["measure"]
    if a == "gamma":
        g = measure.gamma_sequence(mu, spec.args.m_max)
        return {"depth": mu.depth, "gamma": list(g.values), "total": g.total}, True
    auto = _automaton(spec)
    tol = 1e-12 if spec.args.tol is None else spec.args.tol
    res = measure.check_invariance(mu, auto, spec.args.depth or 6, tol)
    return {**res.to_dict(), "tol": tol}, res.invariant


def _cesaro(spec):
    auto = _automaton(spec)
    mu = spec.extra["measure"]
    words = _words(spec, auto.shift)
    mode = spec.args.mode or "exact"
    if mode in ("mc", "monte_carlo"):
        rep = cesaro.cesaro_monte_carlo(mu, auto, words, spec.args.N, spec.args.samples, spec.args.seed)
    elif mode == "exact":
        rep = cesaro.cesaro_exact(mu, auto, words, spec.args.N, strict_exact=spec.args.strict_exact,
                                  samples=spec.args.samples, seed=spec.args.seed)
    else:
        raise UsageError(f"--mode must be exact or mc, got {mode!r}")
    if spec.args.csv:
        Path(spec.args.csv).write_text(rep.to_csv())
    out = rep.to_dict()
    ok = not rep.truncated
    if spec.action == "compare":
        tol = 0.02 if spec.args.tol is None else spec.args.tol
        verdict = cesaro.compare_to_parry(rep, auto.shift, tol)
        out["comparison"] = verdict.to_dict()
        ok = verdict.verdict == cesaro.CONVERGED
    return out, ok


HANDLERS = {"algebra": _algebra, "shift": _shift, "ca": _ca, "factor": _factor,
            "measure": _measure, "cesaro": _cesaro}


def execute(spec: RunSpec) -> int:
    report, ok = HANDLERS[spec.command](spec)
    text = dumps(report)
    if spec.args.out:
        Path(spec.args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_NEGATIVE if spec.args.strict and not ok else EXIT_OK


def main(argv=None) -> int:
    try:
        return execute(load_spec(sys.argv[1:] if argv is None else argv))
    except UsageError as exc:
        print(f"UsageError: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AlgcaError as exc:
        print(f"{exc.code}: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())

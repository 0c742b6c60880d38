"""JSON readers and writers for shifts, tables, measures, automata and codes.

Words and pasts appear as JSON object keys. A key is split on spaces when
it contains one; otherwise, if every symbol of the alphabet is a single
character, it is read character by character; otherwise it is one symbol.
"""
from __future__ import annotations

import json
from pathlib import Path

from .algebra import CayleyTable
from .ca import BlockCode, CellularAutomaton, block_code, build_ca, ca_from_code
from .errors import SchemaError
from .fixtures import FIXTURES, load_fixture
from .measure import FiniteMemoryMeasure, bernoulli, finite_memory_measure, parry_measure
from .tmc import MarkovShift, build_shift, full_shift


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _require(d: dict, key: str, kind, where: str):
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: expected a JSON object")
    if key not in d:
        raise SchemaError(f"{where}: missing field '{key}'")
    if not isinstance(d[key], kind):
        raise SchemaError(f"{where}: field '{key}' has the wrong type")
    return d[key]


def parse_word(text, symbols) -> tuple:
    """Split a word given as text (see module docstring) against an alphabet."""
    if isinstance(text, (list, tuple)):
        return tuple(text)
    text = str(text)
    if text == "":
        return ()
    if " " in text or "," in text:
        return tuple(t for t in text.replace(",", " ").split() if t)
    if text in symbols:
        return (text,)
    if all(len(str(s)) == 1 for s in symbols):
        return tuple(text)
    return (text,)


def shift_from_dict(d: dict, where: str = "shift") -> MarkovShift:
    symbols = _require(d, "symbols", list, where)
    edges = _require(d, "edges", list, where)
    for e in edges:
        if not isinstance(e, list) or len(e) != 2:
            raise SchemaError(f"{where}: field 'edges' must hold pairs")
    return build_shift(symbols, [tuple(e) for e in edges])


def cayley_from_dict(d: dict, where: str = "op") -> CayleyTable:
    symbols = _require(d, "symbols", list, where)
    table = _require(d, "table", list, where)
    return CayleyTable.from_rows(symbols, table)


def load_shift(ref, table: CayleyTable | None = None) -> MarkovShift:
    """A shift from a path, an inline object, or ``"full"`` (full shift over ``table``)."""
    if ref == "full":
        if table is None:
            raise SchemaError("shift 'full' needs an operation to take the alphabet from")
        return full_shift(table.symbols)
    if isinstance(ref, dict):
        return shift_from_dict(ref)
    return shift_from_dict(read_json(ref), where=str(ref))


def load_table(ref, base: Path | None = None) -> CayleyTable:
    """A table from a fixture name, a path, or an inline object."""
    if isinstance(ref, dict):
        return cayley_from_dict(ref)
    if ref in FIXTURES:
        return load_fixture(ref)
    path = Path(ref)
    if base is not None and not path.is_absolute():
        path = base / path
    return cayley_from_dict(read_json(path), where=str(ref))


def measure_from_dict(d: dict, shift: MarkovShift, where: str = "measure") -> FiniteMemoryMeasure:
    kind = _require(d, "type", str, where)
    if kind == "parry":
        return parry_measure(shift)
    if kind == "bernoulli":
        probs = _require(d, "probs", dict, where)
        return bernoulli(shift, {_symbol(k, shift): float(v) for k, v in probs.items()})
    if kind != "finite_memory":
        raise SchemaError(f"{where}: unknown measure type {kind!r}")
    depth = _require(d, "depth", int, where)
    kernel = _require(d, "kernel", dict, where)
    parsed = {}
    for past, row in kernel.items():
        if not isinstance(row, dict):
            raise SchemaError(f"{where}: kernel row {past!r} must be an object")
        key = _past(past, depth, shift, where)
        parsed[key] = {_symbol(a, shift): float(p) for a, p in row.items()}
    initial = d.get("initial")
    if initial is not None:
        if not isinstance(initial, dict):
            raise SchemaError(f"{where}: field 'initial' must be an object")
        initial = {_past(k, depth, shift, where): float(v) for k, v in initial.items()}
    return finite_memory_measure(shift, depth, parsed, initial,
                                 require_complete=not d.get("allow_incomplete", False))


def _symbol(text, shift):
    if text in shift.alphabet:
        return text
    raise SchemaError(f"unknown symbol {text!r}")


def _past(text, depth, shift, where):
    w = parse_word(text, shift.symbols)
    if len(w) != depth:
        raise SchemaError(f"{where}: past {text!r} is not a {depth}-word")
    for s in w:
        _symbol(s, shift)
    return w


def load_measure(ref, shift: MarkovShift) -> FiniteMemoryMeasure:
    if isinstance(ref, dict):
        return measure_from_dict(ref, shift)
    return measure_from_dict(read_json(ref), shift, where=str(ref))


def code_from_dict(d: dict, source: MarkovShift, target: MarkovShift, where: str = "code",
                   validate: bool = True) -> BlockCode:
    """``{"map": {a: b}}`` for a 1-block code, or ``{"memory", "anticipation", "rule"}``."""
    if "map" in d:
        mapping = _require(d, "map", dict, where)
        rule = {(_symbol(a, source),): b for a, b in mapping.items()}
        return block_code(source, target, 0, 0, rule, validate)
    memory = _require(d, "memory", int, where)
    anticipation = _require(d, "anticipation", int, where)
    raw = _require(d, "rule", dict, where)
    rule = {}
    for k, v in raw.items():
        w = parse_word(k, source.symbols)
        if len(w) != memory + anticipation + 1:
            raise SchemaError(f"{where}: rule window {k!r} has the wrong length")
        rule[w] = v
    return block_code(source, target, memory, anticipation, rule, validate)


def ca_from_dict(d: dict, base: Path | None = None, strict: bool = True,
                 where: str = "ca") -> CellularAutomaton:
    """``{"shift": ..., "op": ...}`` or the explicit-rule form with ``memory``/``anticipation``/``rule``."""
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: expected a JSON object")
    if "op" in d:
        table = load_table(d["op"], base)
        shift_ref = d.get("shift", "full")
        if isinstance(shift_ref, str) and shift_ref != "full" and base is not None:
            shift_ref = str(base / shift_ref)
        return build_ca(load_shift(shift_ref, table), table, strict=strict)
    raw = _require(d, "rule", dict, where)
    if "shift" in d:
        ref = d["shift"]
        if isinstance(ref, str) and ref != "full" and base is not None:
            ref = str(base / ref)
        if ref == "full":
            symbols = sorted({s for k in raw for s in str(k)} | set(raw.values()))
            shift = full_shift(symbols)
        else:
            shift = load_shift(ref)
    else:
        symbols = sorted({s for k in raw for s in str(k)} | set(raw.values()))
        shift = full_shift(symbols)
    return ca_from_code(code_from_dict(d, shift, shift, where))


def load_ca(ref, strict: bool = True) -> CellularAutomaton:
    if isinstance(ref, dict):
        return ca_from_dict(ref, strict=strict)
    return ca_from_dict(read_json(ref), Path(ref).parent, strict=strict, where=str(ref))

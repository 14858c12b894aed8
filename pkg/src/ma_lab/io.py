"""JSON machine documents.

Scalars are always strings in the exact text grammar (``3/4``,
``1/3*sqrt(2)``), never floats.  Matrices are stored sparsely as
``[row, column, value]`` triples ordered by column then row.  This makes
serialization canonical and round trips bit-exact.
"""

from __future__ import annotations

import json
from typing import Any, Mapping, Union

from .automata import MachineError, Pfa, PostLabels, Qfa, validate_pfa, validate_qfa
from .exactnum import format_scalar, parse_scalar
from .harness import MaMachine

FORMAT = "ma-lab-machine"
VERSION = 1


class DocumentError(MachineError):
    """Schema or validation failure, with the offending location in the message."""


def _triples(cols) -> list:
    return [[r, c, format_scalar(v)] for c, col in enumerate(cols) for r, v in col]


def serialize_machine(m: MaMachine, reference: str = "") -> dict:
    mach = m.machine
    if isinstance(mach, Pfa):
        kind = "dfa" if mach.is_deterministic else "pfa"
        body = {"matrices": {s: _triples(mach.columns[s]) for s in mach.alphabet}}
    else:
        kind = "qfa"
        body = {"elements": {s: [_triples(e) for e in mach.elements[s]] for s in mach.alphabet}}
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "kind": kind,
        "postselecting": m.labels is not None,
        "name": m.name,
        "reference": reference,
        "states": mach.state_count,
        "alphabet": list(mach.alphabet),
        "input_alphabet": list(m.input_alphabet),
        "cert_alphabet": list(m.cert_alphabet),
        "initial": mach.initial,
        "accepting": sorted(mach.accepting),
        "labels": None if m.labels is None else {"accept": sorted(m.labels.accepting),
                                                 "reject": sorted(m.labels.rejecting)},
        "amplification": m.amplification,
        "sublinear": m.sublinear,
    }
    doc.update(body)
    return doc


def dumps(m: MaMachine, reference: str = "") -> str:
    return json.dumps(serialize_machine(m, reference), indent=1, ensure_ascii=False)


def _need(doc: Mapping, key: str, typ) -> Any:
    if key not in doc:
        raise DocumentError(f"missing field {key!r}")
    v = doc[key]
    if not isinstance(v, typ) or (typ is int and isinstance(v, bool)):
        raise DocumentError(f"field {key!r} has the wrong type")
    return v


def _columns(triples, n: int, where: str) -> list:
    if not isinstance(triples, list):
        raise DocumentError(f"{where}: expected a list of [row, column, value] triples")
    cols: list = [[] for _ in range(n)]
    for i, t in enumerate(triples):
        loc = f"{where}[{i}]"
        if not (isinstance(t, list) and len(t) == 3 and isinstance(t[0], int) and isinstance(t[1], int)
                and isinstance(t[2], str)):
            raise DocumentError(f"{loc}: expected [row, column, \"value\"]")
        r, c, text = t
        if not (0 <= r < n and 0 <= c < n):
            raise DocumentError(f"{loc}: index out of range")
        try:
            v = parse_scalar(text)
        except (ValueError, ArithmeticError) as e:
            raise DocumentError(f"{loc}: {e}") from None
        cols[c].append((r, v))
    return tuple(tuple(sorted(col)) for col in cols)


def parse_machine(doc: Union[str, Mapping]) -> MaMachine:
    """Build and validate a machine; errors name the offending location."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise DocumentError(f"not JSON: {e}") from None
    if not isinstance(doc, Mapping):
        raise DocumentError("document must be a JSON object")
    if doc.get("format") != FORMAT or doc.get("version") != VERSION:
        raise DocumentError(f"expected format {FORMAT!r} version {VERSION}")
    kind = _need(doc, "kind", str)
    n = _need(doc, "states", int)
    alphabet = tuple(_need(doc, "alphabet", list))
    initial = _need(doc, "initial", int)
    accepting = frozenset(_need(doc, "accepting", list))
    try:
        if kind in ("pfa", "dfa"):
            mats = _need(doc, "matrices", dict)
            if set(mats) != set(alphabet):
                raise DocumentError("matrices must be given for exactly the alphabet symbols")
            mach = Pfa(n, alphabet, {s: _columns(mats[s], n, f"matrices.{s}") for s in alphabet}, initial, accepting)
            report = validate_pfa(mach)
            if not report.ok:
                s, c, total = report.violations[0]
                raise DocumentError(f"symbol {s!r}, column {c}: column sum {total} (must be 1 with nonnegative entries)")
            if kind == "dfa" and not mach.is_deterministic:
                raise DocumentError("kind is dfa but the matrices are not deterministic")
        elif kind == "qfa":
            els = _need(doc, "elements", dict)
            if set(els) != set(alphabet):
                raise DocumentError("elements must be given for exactly the alphabet symbols")
            mach = Qfa(n, alphabet, {s: tuple(_columns(e, n, f"elements.{s}[{j}]") for j, e in enumerate(els[s]))
                                     for s in alphabet}, initial, accepting)
            report = validate_qfa(mach)
            if not report.ok:
                s, i, j, resid = report.violations[0]
                raise DocumentError(f"symbol {s!r}, entry ({i}, {j}) of the sum of E^T E is off by {resid}")
        else:
            raise DocumentError(f"unknown kind {kind!r}")
        labels = doc.get("labels")
        post = None
        if doc.get("postselecting"):
            if not isinstance(labels, Mapping):
                raise DocumentError("postselecting machines need labels")
            post = PostLabels(frozenset(labels.get("accept", ())), frozenset(labels.get("reject", ())))
        return MaMachine(mach, tuple(_need(doc, "input_alphabet", list)), tuple(_need(doc, "cert_alphabet", list)),
                         post, doc.get("name", ""), doc.get("amplification", 1), doc.get("sublinear", False))
    except DocumentError:
        raise
    except (MachineError, ValueError, TypeError) as e:
        raise DocumentError(str(e)) from None


def loads(text: str) -> MaMachine:
    return parse_machine(text)

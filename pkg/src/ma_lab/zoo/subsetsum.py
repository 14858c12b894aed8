"""Subset-sum verification with a certificate of linear length.

The input is ``S#b1#...#bn`` in binary, each numeral starting with ``1``.
The certificate repeats the input and writes ``##`` in front of the chosen
items.  Two registers carry bijective base-4 transcripts (0, 1, # as the
digits 1, 2, 3) of the certificate and of the input.  A third register
holds ``S`` minus the chosen items.  The verifier rejects with amplitudes
``t * d1`` and ``t * d2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence

from ..automata import CENT, DOLLAR, LBRACKET, RBRACKET
from ..exactnum import DomainError
from ..harness import MaMachine, as_word
from .common import Construction, amplitude_claim
from .qprogram import QProgram, compile_program, program_acceptance

DIGIT4 = {"0": 1, "1": 2, "#": 3}


def encode_base4(s) -> int:
    """Horner evaluation with digits 0->1, 1->2, #->3."""
    v = 0
    for ch in as_word(s):
        if ch not in DIGIT4:
            raise DomainError(f"invalid symbol {ch!r}")
        v = 4 * v + DIGIT4[ch]
    return v


def encode_base2(numeral) -> int:
    v = 0
    for ch in as_word(numeral):
        if ch not in ("0", "1"):
            raise DomainError(f"invalid binary digit {ch!r}")
        v = 2 * v + int(ch)
    return v


@dataclass(frozen=True)
class SubsetSumInstance:
    target: int
    items: tuple

    def __post_init__(self):
        if self.target < 1 or any(b < 1 for b in self.items):
            raise DomainError("target and items must be positive")

    def render(self) -> str:
        return "#".join(bin(v)[2:] for v in (self.target,) + tuple(self.items))

    @classmethod
    def parse(cls, s) -> "SubsetSumInstance":
        text = "".join(as_word(s))
        parts = text.split("#")
        if any(not p or p[0] != "1" or set(p) - {"0", "1"} for p in parts):
            raise DomainError(f"malformed instance {text!r}")
        vals = [int(p, 2) for p in parts]
        return cls(vals[0], tuple(vals[1:]))

    def solve(self) -> Optional[tuple]:
        """Selection mask of a solution, scanning masks in increasing order."""
        for mask in product((False, True), repeat=len(self.items)):
            if sum(b for b, m in zip(self.items, mask) if m) == self.target:
                return mask
        return None


def selection_certificate(inst: SubsetSumInstance, mask: Sequence[bool]) -> tuple:
    out = list(bin(inst.target)[2:])
    for b, chosen in zip(inst.items, mask):
        out.append("#")
        if chosen:
            out.append("#")
        out.extend(bin(b)[2:])
    return tuple(out)


REGS = ("one", "X", "Y", "D", "B")


@lru_cache(maxsize=None)
def subsetsum_program(t: int = 1) -> QProgram:
    """Registers: transcripts ``X`` (certificate) and ``Y`` (input), running difference ``D``, current item ``B``."""
    keep = {r: {r: 1} for r in REGS}

    def upd(**changes):
        u = dict(keep)
        u.update(changes)
        return u

    def xdigit(ch):
        return {"X": {"X": 4, "one": DIGIT4[ch]}}

    def settle(selected):
        # fold the finished item into D when it was selected, then clear B
        d = {"D": 1, "B": -1} if selected else {"D": 1}
        return {"D": d, "B": {}}

    # certificate controls: (field, selected, state) with field "S" or "item";
    # state "start" (no digit yet), "digit", "hash1" (one # read), "hash2" (## read)
    def step(ctrl, sym):
        if ctrl == "init":
            return (("cert", "S", False, "start"), None) if sym == LBRACKET else None
        kind = ctrl[0]
        if kind == "cert":
            _, field, sel, st = ctrl
            if sym in ("0", "1"):
                if st in ("start", "hash1", "hash2"):
                    if sym != "1":
                        return None  # numerals start with 1
                    nsel = st == "hash2" if st != "start" else False
                    nfield = field if st == "start" else "item"
                else:
                    nsel, nfield = sel, field
                b = int(sym)
                u = upd(**xdigit(sym))
                if nfield == "S":
                    u["D"] = {"D": 2, "one": b}
                else:
                    u["B"] = {"B": 2, "one": b}
                return ("cert", nfield, nsel, "digit"), u
            if sym == "#":
                if st == "digit":
                    u = upd(**xdigit("#"), **(settle(sel) if field == "item" else {}))
                    return ("cert", field, False, "hash1"), u
                if st == "hash1":
                    return ("cert", field, False, "hash2"), None
                return None
            if sym == RBRACKET:
                if st != "digit":
                    return None
                return ("mid", False), upd(**(settle(sel) if field == "item" else {}))
            return None
        if kind == "mid":
            return (("input", "start"), None) if sym == CENT else None
        if kind == "input":
            st = ctrl[1]
            if sym in ("0", "1"):
                if st == "start" and sym != "1":
                    return None
                return ("input", "digit"), upd(Y={"Y": 4, "one": DIGIT4[sym]})
            if sym == "#" and st == "digit":
                return ("input", "start"), upd(Y={"Y": 4, "one": DIGIT4["#"]})
            return None
        return None

    def final(ctrl):
        if ctrl != ("input", "digit"):
            return None
        return {"one": 1}, [{"X": t, "Y": -t}, {"D": t}]

    return QProgram(REGS, step, final, initial="init")


ALPHABET = ("0", "1", "#", LBRACKET, RBRACKET, CENT, DOLLAR)


def subsetsum_member(x) -> bool:
    try:
        inst = SubsetSumInstance.parse(x)
    except DomainError:
        return False
    return bool(inst.items) and inst.solve() is not None


def build_subsetsum_verifier(t: int = 1) -> Construction:
    """Postselecting QFA for SUBSETSUM; members reach acceptance 1 and non-members rejection ``t^2/(t^2+1)``."""
    if t < 1:
        raise DomainError("t must be positive")
    q, labels = compile_program(subsetsum_program(t), ALPHABET)
    m = MaMachine(q, ("0", "1", "#"), ("0", "1", "#"), labels, "subsetsum")

    def prover(x):
        if not subsetsum_member(x):
            return None
        inst = SubsetSumInstance.parse(x)
        return selection_certificate(inst, inst.solve())

    return Construction(m, prover, subsetsum_member, amplitude_claim(t),
                        "subset sum with a marked copy of the input as certificate")


def subsetsum_acceptance(cert, x, t: int = 1) -> Fraction:
    """Register-level acceptance; equals the compiled machine's postselected acceptance."""
    word = (LBRACKET,) + as_word(cert) + (RBRACKET, CENT) + as_word(x) + (DOLLAR,)
    return program_acceptance(subsetsum_program(t), word)

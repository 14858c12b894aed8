"""One-way deterministic two-counter automata and their history verifiers.

A configuration records the state, the head position ``h`` on ``¢ a^n $``
(``0`` is ``¢``, ``n + 1`` is ``$``) and both counters.  A history is
written block by block as ``[ q a^h / a^(n+1-h) | a^j ^ a^k ]``.

The verifier checks the block shapes and the transition labels with its
finite control.  Equality checks then compare every field with the same
field in the next block after the prescribed offset, and the halting
block's head split against the real input length.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from .automata import CENT, DOLLAR, LBRACKET, MARKERS, RBRACKET, MachineError
from .exactnum import DomainError
from .harness import MaMachine, VerificationClaim, as_word
from .zoo.common import Construction, unary_length
from .zoo.postpfa import DEFAULT_C, CheckProgram, PostPfaVerifier, Trans, amplification_for, compile_checks

F = Fraction
HEAD_SYMBOLS = (CENT, "a", DOLLAR)
MOVES = {"stay": 0, "right": 1}
OPEN, STATE_SEP, FIELD_SEP, COUNTER_SEP, CLOSE = "[", "/", "|", "^", "]"
PUNCT = (OPEN, STATE_SEP, FIELD_SEP, COUNTER_SEP, CLOSE)


@dataclass(frozen=True)
class Rule:
    state: str
    symbol: Optional[str]  # None matches any head symbol
    zero1: Optional[bool]  # None matches either
    zero2: Optional[bool]
    next: str
    move: str
    d1: int
    d2: int

    def matches(self, q, sym, z1, z2) -> bool:
        return (self.state == q and self.symbol in (None, sym) and self.zero1 in (None, z1)
                and self.zero2 in (None, z2))


@dataclass(frozen=True)
class TwoCounterMachine:
    """First matching rule wins; halting states have no rules."""

    states: tuple
    rules: tuple
    initial: str
    accept: frozenset
    reject: frozenset
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "accept", frozenset(self.accept))
        object.__setattr__(self, "reject", frozenset(self.reject))
        known = set(self.states)
        if self.initial not in known or not (self.accept | self.reject) <= known:
            raise MachineError("initial and halting states must be declared")
        if self.accept & self.reject:
            raise MachineError("a state cannot both accept and reject")
        for r in self.rules:
            where = f"rule {r.state!r} on {r.symbol!r}"
            if r.state not in known or r.next not in known:
                raise MachineError(f"{where}: unknown state")
            if r.state in self.halting:
                raise MachineError(f"{where}: halting states have no moves")
            if r.symbol not in (None,) + HEAD_SYMBOLS or r.move not in MOVES:
                raise MachineError(f"{where}: bad symbol or move")
            if r.d1 not in (-1, 0, 1) or r.d2 not in (-1, 0, 1):
                raise MachineError(f"{where}: counter updates must be -1, 0 or +1")
            if (r.d1 == -1 and r.zero1 is not False) or (r.d2 == -1 and r.zero2 is not False):
                raise MachineError(f"{where}: decrement allowed only when the counter is known to be nonzero")
            if r.move == "right" and r.symbol in (None, DOLLAR):
                raise MachineError(f"{where}: the head cannot move past $")
        bad = [s for s in self.states if s in PUNCT or s in MARKERS or s == "a"]
        if bad:
            raise MachineError(f"state names clash with history symbols: {bad}")

    @property
    def halting(self) -> frozenset:
        return self.accept | self.reject

    def delta(self, q, sym, z1, z2) -> Rule:
        for r in self.rules:
            if r.matches(q, sym, z1, z2):
                return r
        raise MachineError(f"no move for state {q!r}, symbol {sym!r}, zero flags ({z1}, {z2})")

    # JSON machine definition

    def to_json(self) -> dict:
        return {"name": self.name, "states": list(self.states), "initial": self.initial,
                "accept": sorted(self.accept), "reject": sorted(self.reject),
                "rules": [[r.state, r.symbol, r.zero1, r.zero2, r.next, r.move, r.d1, r.d2] for r in self.rules]}

    @classmethod
    def from_json(cls, doc: Union[str, Mapping]) -> "TwoCounterMachine":
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            rules = tuple(Rule(*row) for row in doc["rules"])
            return cls(tuple(doc["states"]), rules, doc["initial"], frozenset(doc["accept"]),
                       frozenset(doc["reject"]), doc.get("name", ""))
        except (KeyError, TypeError) as e:
            raise MachineError(f"malformed machine definition: {e}") from None


@dataclass(frozen=True)
class Configuration:
    """``head`` in ``0..n+1``; ``rest = n + 1 - head`` symbols remain to the right of the head."""

    state: str
    head: int
    rest: int
    c1: int = 0
    c2: int = 0

    def __post_init__(self):
        if min(self.head, self.rest, self.c1, self.c2) < 0 or self.head + self.rest < 1:
            raise DomainError(f"invalid configuration {self}")

    @property
    def n(self) -> int:
        return self.head + self.rest - 1

    @property
    def symbol(self) -> str:
        if self.head == 0:
            return CENT
        return DOLLAR if self.rest == 0 else "a"

    def serialize(self) -> tuple:
        return ((OPEN, self.state) + ("a",) * self.head + (STATE_SEP,) + ("a",) * self.rest + (FIELD_SEP,)
                + ("a",) * self.c1 + (COUNTER_SEP,) + ("a",) * self.c2 + (CLOSE,))


def initial_configuration(m: TwoCounterMachine, n: int) -> Configuration:
    return Configuration(m.initial, 0, n + 1)


def tcm_step(m: TwoCounterMachine, c: Configuration) -> Union[Configuration, str]:
    """Next configuration, or ``"accept"`` / ``"reject"`` for a halting one."""
    if c.state in m.accept:
        return "accept"
    if c.state in m.reject:
        return "reject"
    r = m.delta(c.state, c.symbol, c.c1 == 0, c.c2 == 0)
    mv = MOVES[r.move]
    if mv and c.rest == 0:
        raise MachineError("the head cannot move past $")
    if c.c1 + r.d1 < 0 or c.c2 + r.d2 < 0:
        raise MachineError("counter decremented below zero")
    return Configuration(r.next, c.head + mv, c.rest - mv, c.c1 + r.d1, c.c2 + r.d2)


def default_budget(m: TwoCounterMachine, n: int) -> int:
    return 4**n * len(m.states)


def tcm_history(m: TwoCounterMachine, x, budget: Optional[int] = None) -> list:
    """Configurations ``C_0 .. C_T`` with ``C_T`` halting."""
    n = _unary(x)
    budget = default_budget(m, n) if budget is None else budget
    hist = [initial_configuration(m, n)]
    while hist[-1].state not in m.halting:
        if len(hist) > budget:
            raise MachineError(f"no halt within {budget} steps")
        hist.append(tcm_step(m, hist[-1]))
    return hist


def tcm_accepts(m: TwoCounterMachine, x, budget: Optional[int] = None) -> bool:
    return tcm_history(m, x, budget)[-1].state in m.accept


def serialize_history(hist: Sequence[Configuration]) -> tuple:
    return tuple(s for c in hist for s in c.serialize())


def parse_history(m: TwoCounterMachine, cert) -> list:
    """Inverse of :func:`serialize_history`; raises ``DomainError`` on malformed text."""
    cert = as_word(cert)
    out, i = [], 0
    while i < len(cert):
        if cert[i] != OPEN or i + 1 >= len(cert) or cert[i + 1] not in m.states:
            raise DomainError(f"bad block start at position {i}")
        q, i = cert[i + 1], i + 2
        fields = []
        for sep in (STATE_SEP, FIELD_SEP, COUNTER_SEP, CLOSE):
            j = i
            while j < len(cert) and cert[j] == "a":
                j += 1
            if j >= len(cert) or cert[j] != sep:
                raise DomainError(f"expected {sep!r} at position {j}")
            fields.append(j - i)
            i = j + 1
        out.append(Configuration(q, *fields))
    return out


def _unary(x) -> int:
    n = unary_length(as_word(x))
    if n is None:
        raise DomainError("inputs are unary words over {a}")
    return n


# demo machines

def even_machine() -> TwoCounterMachine:
    """Accepts ``a^n`` for even ``n`` by tracking parity in the state."""
    rules = (
        Rule("even", CENT, None, None, "even", "right", 0, 0),
        Rule("even", "a", None, None, "odd", "right", 0, 0),
        Rule("odd", "a", None, None, "even", "right", 0, 0),
        Rule("even", DOLLAR, None, None, "acc", "stay", 0, 0),
        Rule("odd", DOLLAR, None, None, "rej", "stay", 0, 0),
    )
    return TwoCounterMachine(("even", "odd", "acc", "rej"), rules, "even", {"acc"}, {"rej"}, "even")


def pow2_machine() -> TwoCounterMachine:
    """Accepts ``a^(2^i)``: count ``n`` into counter 1, then halve it through counter 2 until it reaches 1."""
    rules = (
        Rule("start", CENT, None, None, "read", "right", 0, 0),
        Rule("read", "a", None, None, "read", "right", 1, 0),
        Rule("read", DOLLAR, None, None, "chk", "stay", 0, 0),
        # is counter 1 equal to 1?
        Rule("chk", None, True, None, "rej", "stay", 0, 0),
        Rule("chk", None, False, None, "one", "stay", -1, 0),
        Rule("one", None, True, None, "acc", "stay", 0, 0),
        Rule("one", None, False, None, "half", "stay", 1, 0),
        # counter 2 <- counter 1 / 2, rejecting odd values
        Rule("half", None, True, None, "back", "stay", 0, 0),
        Rule("half", None, False, None, "half2", "stay", -1, 0),
        Rule("half2", None, True, None, "rej", "stay", 0, 0),
        Rule("half2", None, False, None, "half", "stay", -1, 1),
        # counter 1 <- counter 2
        Rule("back", None, None, True, "chk", "stay", 0, 0),
        Rule("back", None, None, False, "back", "stay", 1, -1),
    )
    states = ("start", "read", "chk", "one", "half", "half2", "back", "acc", "rej")
    return TwoCounterMachine(states, rules, "start", {"acc"}, {"rej"}, "pow2")


DEMO_MACHINES = {"even": even_machine, "pow2": pow2_machine}


# history verifier

FIELDS = ("h", "r", "c1", "c2")
_FIELD_END = {STATE_SEP: 0, FIELD_SEP: 1, COUNTER_SEP: 2, CLOSE: 3}


@dataclass(frozen=True)
class _Hist:
    """Tracker state for the history reader."""

    phase: str  # "pre", "open", "state", "field", "between", "mid", "input", "end"
    q: Optional[str] = None  # state of the current block
    expect: Optional[str] = None  # required state of the next block
    fld: int = 0  # field being read (0..3)
    nonzero: tuple = ()  # per completed field: did it contain an a?
    seen_a: bool = False
    par: int = 0  # parity of the current block
    first: bool = True
    offsets: tuple = ()  # offsets the current block owes the next one, per field
    last_ok: bool = False


def history_program(m: TwoCounterMachine) -> CheckProgram:
    """Tracker for the history certificate of ``m``."""

    def chk(f, par):
        return ("F", FIELDS[f], par)

    def step(st: _Hist, sym):
        ph = st.phase
        if ph == "pre":
            return [Trans(F(1), _Hist("between"))] if sym == LBRACKET else None
        if ph == "between":
            if sym == OPEN:
                return [Trans(F(1), _Hist("open", expect=st.expect, par=st.par, first=st.first))]
            if sym == RBRACKET and st.q is not None and st.q in m.halting:
                return [Trans(F(1), _Hist("mid", last_ok=st.q in m.accept))]
            return None
        if ph == "open":
            if sym not in m.states:
                return None
            if st.first and sym != m.initial:
                return None
            if not st.first and sym != st.expect:
                return None
            opens = (("N",),) if sym in m.halting else ()
            return [Trans(F(1), _Hist("field", q=sym, par=st.par, first=st.first), opens=opens)]
        if ph == "field":
            f = st.fld
            halting = st.q in m.halting
            if sym == "a":
                if st.first and f != 1:
                    return None  # the initial block has head 0 and empty counters
                opens, contribs = (), []
                if not st.seen_a and not halting:
                    opens = (chk(f, st.par),)
                if not st.first:
                    contribs.append((chk(f, 1 - st.par), "v", 1))
                if not halting:
                    contribs.append((chk(f, st.par), "u", 1))
                if halting and f in (0, 1):
                    contribs.append((("N",), "u", 1))
                nxt = _Hist("field", st.q, None, f, st.nonzero, True, st.par, st.first)
                return [Trans(F(1), nxt, opens=opens, contribs=tuple(contribs))]
            if _FIELD_END.get(sym) == f:
                opens = (chk(f, st.par),) if not st.seen_a and not halting else ()
                closes = (chk(f, 1 - st.par),) if not st.first else ()
                nz = st.nonzero + (st.seen_a,)
                if f < 3:
                    return [Trans(F(1), _Hist("field", st.q, None, f + 1, nz, False, st.par, st.first),
                                  opens=opens, closes=closes)]
                # block complete
                if halting:
                    return [Trans(F(1), _Hist("between", q=st.q), opens=opens, closes=closes)]
                h_nz, r_nz, c1_nz, c2_nz = nz
                if not h_nz and not r_nz:
                    return None
                head = CENT if not h_nz else (DOLLAR if not r_nz else "a")
                try:
                    rule = m.delta(st.q, head, not c1_nz, not c2_nz)
                except MachineError:
                    return None
                mv = MOVES[rule.move]
                if mv and head == DOLLAR:
                    return None
                offs = (mv, -mv, rule.d1, rule.d2)
                contribs = tuple((chk(g, st.par), "u" if d > 0 else "v", 1) for g, d in enumerate(offs) if d)
                return [Trans(F(1), _Hist("between", q=st.q, expect=rule.next, par=1 - st.par, first=False),
                              opens=opens, contribs=contribs, closes=closes)]
            return None
        if ph == "mid":
            return [Trans(F(1), _Hist("input", last_ok=st.last_ok), contribs=((("N",), "v", 1),))] if sym == CENT else None
        if ph == "input":
            if sym == "a":
                return [Trans(F(1), st, contribs=((("N",), "v", 1),))]
            if sym == DOLLAR:
                return [Trans(F(1), _Hist("end", last_ok=st.last_ok), closes=(("N",),))]
            return None
        return None

    return CheckProgram(_Hist("pre"), step, lambda st: st.phase == "end" and st.last_ok)


def build_history_verifier(m: TwoCounterMachine, eps=F(1, 3), c=DEFAULT_C):
    """MA-PostPFA verifying ``L(m)`` from configuration histories; returns ``(construction, verifier)``."""
    prog = history_program(m)
    cert_alphabet = ("a",) + PUNCT + tuple(m.states)
    alphabet = (LBRACKET, RBRACKET, CENT, DOLLAR) + cert_alphabet
    pfa, labels, order = compile_checks(prog, alphabet, c)
    k = amplification_for(eps, c)
    mm = MaMachine(pfa, ("a",), cert_alphabet, labels, f"history-{m.name}", amplification=k)

    def member(x):
        return unary_length(as_word(x)) is not None and tcm_accepts(m, x)

    def prover(x):
        return serialize_history(tcm_history(m, x)) if member(x) else None

    cons = Construction(mm, prover, member, VerificationClaim("bounded", F(eps)),
                        f"configuration histories of the {m.name} counter machine")
    return cons, PostPfaVerifier(prog, F(c), tuple(order))

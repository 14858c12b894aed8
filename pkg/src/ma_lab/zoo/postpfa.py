"""Postselecting PFAs built from parallel unary equality checks.

A *check program* is a finite tracker that reads the whole word.  It
rejects malformed words deterministically, may guess a bit (for instance
"this is the last block"), and declares which unary quantities each symbol
feeds into.  Every check compares two sides ``u`` and ``v``.

The compiled machine splits once into two branches of weight 1/2:

* accept branch: every counted symbol survives with probability 1/2, so a
  check costs ``2^-(u+v)``;
* reject branch: every check picks a side at random when it opens, and
  symbols of that side survive with probability 1/4, so a check costs
  ``(4^-u + 4^-v) / 2``.

At ``$`` the accept branch goes to the accepting sink and the reject branch
reaches the rejecting sink with probability ``1/c``.  Everything else falls
into a non-postselecting sink.  With all checks equal the postselected
acceptance is ``c / (c + 1)``; a single check off by ``d`` multiplies the
reject weight by ``cosh(d ln 2) >= 5/4``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from typing import Callable, Optional, Sequence

from ..automata import CENT, DOLLAR, LBRACKET, RBRACKET, Pfa, PostLabels, RunOutcome
from ..exactnum import DomainError, as_fraction
from ..harness import MaMachine, VerificationClaim, smallest_majority_k
from .common import Construction, exact_log2, exact_root, unary_length

F = Fraction
HALF = F(1, 2)
DEFAULT_C = F(9, 8)


@dataclass(frozen=True)
class Trans:
    """One tracker move: probability, next tracker state, opened checks, contributions, closed checks."""

    p: Fraction
    nxt: object
    opens: tuple = ()
    contribs: tuple = ()  # (check, side, count)
    closes: tuple = ()


@dataclass
class CheckProgram:
    """``step(state, sym) -> list[Trans] | None``; ``None`` is a deterministic rejection and ``[]`` a dead guess.

    ``accepting_end(state)`` is consulted after ``$``.
    """

    start: object
    step: Callable
    accepting_end: Callable


def _check_c(c) -> Fraction:
    c = as_fraction(c)
    if not 1 < c <= 2:
        raise DomainError(f"calibration c must lie in (1, 2], got {c}")
    return c


ACC, REJ, DEAD, INIT = ("ACC",), ("REJ",), ("DEAD",), ("INIT",)


def _successors(prog: CheckProgram, state, sym: str, c: Fraction) -> dict:
    """Distribution over next compiled states."""
    if state in (ACC, REJ, DEAD):
        return {state: F(1)}
    if state == INIT:
        out: dict = {}
        for branch in (("A", prog.start), ("R", prog.start, ())):
            for s, p in _successors(prog, branch, sym, c).items():
                out[s] = out.get(s, F(0)) + p * HALF
        return out
    trans = prog.step(state[1], sym)
    if trans is None:
        return {REJ: F(1)}
    out = {}

    def add(s, p):
        if p:
            out[s] = out.get(s, F(0)) + p

    lost = F(1)
    for t in trans:
        if state[0] == "A":
            cnt = sum(k for _, _, k in t.contribs)
            p = t.p * HALF**cnt
            targets = [(("A", t.nxt), p)]
        else:
            mem = dict(state[2])
            targets = []
            for sides in iproduct("uv", repeat=len(t.opens)):
                m2 = dict(mem)
                m2.update(zip(t.opens, sides))
                p = t.p * HALF ** len(t.opens)
                for chk, side, k in t.contribs:
                    if m2[chk] == side:
                        p *= F(1, 4) ** k
                for chk in t.closes:
                    m2.pop(chk, None)
                targets.append((("R", t.nxt, tuple(sorted(m2.items()))), p))
        for s, p in targets:
            if sym == DOLLAR:
                if prog.accepting_end(s[1]):
                    if s[0] == "A":
                        add(ACC, p)
                    else:
                        add(REJ, p / c)
                        add(DEAD, p * (1 - 1 / c))
                else:
                    add(REJ, p)
            else:
                add(s, p)
            lost -= p
    add(DEAD, lost)
    return out


def compile_checks(prog: CheckProgram, alphabet: Sequence[str], c=DEFAULT_C, max_states: int = 200_000):
    """Explicit PFA (and labels) for a check program, by breadth-first state exploration."""
    c = _check_c(c)
    alphabet = tuple(alphabet)
    index = {INIT: 0, ACC: 1, REJ: 2, DEAD: 3}
    order = [INIT, ACC, REJ, DEAD]
    cols: dict = {s: [] for s in alphabet}
    queue = deque(order)
    while queue:
        st = queue.popleft()
        for sym in alphabet:
            succ = _successors(prog, st, sym, c)
            col = []
            for s, p in succ.items():
                if s not in index:
                    index[s] = len(order)
                    order.append(s)
                    queue.append(s)
                    if len(order) > max_states:
                        raise DomainError("check program state space exceeds the configured limit")
                col.append((index[s], p))
            col.sort()
            cols[sym].append((index[st], tuple(col)))
    m = len(order)
    mats = {}
    for sym in alphabet:
        arr = [()] * m
        for i, col in cols[sym]:
            arr[i] = col
        mats[sym] = tuple(arr)
    pfa = Pfa(m, alphabet, mats, 0, frozenset({1}))
    return pfa, PostLabels({1}, {2}), order


def evaluate_checks(prog: CheckProgram, word: Sequence[str], c=DEFAULT_C) -> RunOutcome:
    """Exact outcome of the compiled machine computed per tracker path in closed form."""
    c = _check_c(c)
    a_tot = r_tot = F(0)
    # path: (prob, tracker state, {check: [u, v]})
    paths = [(F(1), prog.start, {})]
    word = list(word)
    for pos, sym in enumerate(word):
        nxt = []
        for p, st, counts in paths:
            trans = prog.step(st, sym)
            if trans is None:
                a_w, r_w = _weights(counts)
                r_tot += HALF * p * (a_w + r_w)
                continue
            for t in trans:
                cc = {k: list(v) for k, v in counts.items()}
                for chk in t.opens:
                    cc[chk] = [0, 0]
                for chk, side, k in t.contribs:
                    cc[chk][0 if side == "u" else 1] += k
                for chk in t.closes:
                    u, v = cc.pop(chk)
                    cc[("closed", len(cc), chk, pos)] = [u, v]
                nxt.append((p * t.p, t.nxt, cc))
        paths = nxt
        if sym == DOLLAR:
            for p, st, counts in paths:
                a_w, r_w = _weights(counts)
                if prog.accepting_end(st):
                    a_tot += HALF * p * a_w
                    r_tot += HALF * p * r_w / c
                else:
                    r_tot += HALF * p * (a_w + r_w)
            paths = []
            if pos != len(word) - 1:
                raise ValueError("$ must be the last symbol")
    return RunOutcome(a_tot, r_tot, 1 - a_tot - r_tot)


def _weights(counts) -> tuple[Fraction, Fraction]:
    a = r = F(1)
    for u, v in counts.values():
        a *= HALF ** (u + v)
        r *= (F(1, 4) ** u + F(1, 4) ** v) / 2
    return a, r


# trackers

def equality_program() -> CheckProgram:
    """Reads ``¢ a^m b a^n $`` and compares ``m`` with ``n``."""

    def step(st, sym):
        if st == "pre":
            return [Trans(F(1), "left", opens=("E",))] if sym == CENT else None
        if st == "left":
            if sym == "a":
                return [Trans(F(1), "left", contribs=(("E", "u", 1),))]
            if sym == "b":
                return [Trans(F(1), "right")]
            return None
        if st == "right":
            if sym == "a":
                return [Trans(F(1), "right", contribs=(("E", "v", 1),))]
            if sym == DOLLAR:
                return [Trans(F(1), "end", closes=("E",))]
            return None
        return None

    return CheckProgram("pre", step, lambda st: st == "end")


def equality_gadget(c=DEFAULT_C):
    """Standalone equality gadget over ``{a, b}``: input ``a^m b a^n``.

    Returns ``(pfa, labels)``; postselected acceptance is ``c/(c+1)`` when
    ``m == n`` and at most ``c/(c + 5/4)`` otherwise.
    """
    pfa, labels, _ = compile_checks(equality_program(), (CENT, "a", "b", DOLLAR), c)
    return pfa, labels


def equality_masses(m: int, n: int, c=DEFAULT_C) -> tuple[Fraction, Fraction]:
    """Closed-form conditional masses ``(2c 2^-(m+n), 4^-m + 4^-n)`` up to a common factor."""
    c = _check_c(c)
    return 2 * c * HALF ** (m + n), F(1, 4) ** m + F(1, 4) ** n


@dataclass(frozen=True)
class _Chain:
    """Per-level chain bookkeeping for consecutive-unit equality checks."""

    par: int = 0
    in_open: bool = False  # the current unit has an incoming check
    out_open: bool = False  # the current unit opened an outgoing check
    last_done: bool = False  # a unit guessed to be the last has ended
    active: bool = False  # inside a unit


def _start_unit(ch: _Chain, level: int):
    """Start a unit; returns [(prob, chain, opens)] over the lastness guess."""
    if ch.last_done:
        return []
    in_open = ch.out_open  # previous unit's outgoing check is this unit's incoming one
    out = []
    out.append((HALF, _Chain(ch.par, in_open, False, False, True), ()))
    slot = ("L", level, ch.par)
    out.append((HALF, _Chain(ch.par, in_open, True, False, True), (slot,)))
    return out


def _unit_contribs(ch: _Chain, level: int, k: int = 1, w_in: int = 1, w_out: int = 1):
    res = []
    if ch.in_open:
        res.append((("L", level, 1 - ch.par), "v", k * w_in))
    if ch.out_open:
        res.append((("L", level, ch.par), "u", k * w_out))
    return tuple(res)


def _end_unit(ch: _Chain, level: int):
    closes = (("L", level, 1 - ch.par),) if ch.in_open else ()
    nch = _Chain(1 - ch.par, False, ch.out_open, not ch.out_open, False)
    return nch, closes


SEPARATORS = ("b", "c", "d", "e", "f", "g", "h")


def nested_blocks_program(k: int) -> CheckProgram:
    """Tracker for certificates ``((a^i s1)^i s2 ...)^i`` verifying ``n = i^k``.

    Checks: equal consecutive units at every level, first block length equal
    to the unit count at every level, and total ``a`` count equal to ``n``.
    """
    if k < 2 or k - 1 > len(SEPARATORS):
        raise DomainError("k out of supported range")
    seps = SEPARATORS[: k - 1]
    levels = k - 1

    # state: (phase, last, chains, first_block, first_units)
    start = ("pre", None, None, True, ())

    def step(st, sym):
        phase, last, chains, first_block, first_units = st
        if phase == "pre":
            if sym != LBRACKET:
                return None
            opens = tuple(("H", l) for l in range(1, levels + 1)) + (("S",),)
            chains = tuple(_Chain() for _ in range(levels))
            return [Trans(F(1), ("cert", "start", chains, True, tuple([True] * levels)), opens=opens)]
        if phase == "cert":
            if sym == "a":
                if last == "a":
                    contribs = _unit_contribs(chains[0], 1)
                    contribs += tuple((("H", l), "u", 1) for l in range(1, levels + 1)) if first_block else ()
                    return [Trans(F(1), st, contribs=contribs + ((("S",), "u", 1),))]
                # a new level-1 unit begins; so do all levels above the last separator
                top = 0 if last not in ("start",) and last[0] == "sep" and last[1] < levels else levels
                if last == "start":
                    top = levels
                elif last[0] == "sep":
                    top = last[1]
                combos = [(F(1), list(chains), ())]
                for lvl in range(1, top + 1):
                    new = []
                    for p, chs, opens in combos:
                        for q, nch, op in _start_unit(chs[lvl - 1], lvl):
                            chs2 = list(chs)
                            chs2[lvl - 1] = nch
                            new.append((p * q, chs2, opens + op))
                    combos = new
                out = []
                for p, chs, opens in combos:
                    contribs = _unit_contribs(chs[0], 1)
                    contribs += tuple((("H", l), "u", 1) for l in range(1, levels + 1)) if first_block else ()
                    contribs += ((("S",), "u", 1),)
                    out.append(Trans(p, ("cert", "a", tuple(chs), first_block, first_units), opens, contribs))
                return out
            if sym in seps:
                lvl = seps.index(sym) + 1
                expected = 1 if last == "a" else (last[1] + 1 if isinstance(last, tuple) else None)
                if expected != lvl:
                    return None
                chs = list(chains)
                nch, closes = _end_unit(chs[lvl - 1], lvl)
                chs[lvl - 1] = nch
                contribs = ()
                if lvl < levels:
                    contribs += _unit_contribs(chs[lvl], lvl + 1)
                # this separator counts towards H_lvl if it lies in the first unit one level up
                if lvl == levels or first_units[lvl]:
                    contribs += ((("H", lvl), "v", 1),)
                fu = list(first_units)
                if lvl < levels:
                    fu[lvl] = fu[lvl] and True
                if lvl >= 2:
                    fu[lvl - 1] = False
                fb = False
                return [Trans(F(1), ("cert", ("sep", lvl), tuple(chs), fb, tuple(fu)), contribs=contribs, closes=closes)]
            if sym == RBRACKET:
                if last == "start":
                    return [Trans(F(1), ("mid", None, None, False, ()), closes=tuple(("H", l) for l in range(1, levels + 1)))]
                if last != ("sep", levels):
                    return None
                if any(ch.out_open for ch in chains):
                    return []  # a unit guessed "not last" has no successor
                return [Trans(F(1), ("mid", None, None, False, ()), closes=tuple(("H", l) for l in range(1, levels + 1)))]
            return None
        if phase == "mid":
            return [Trans(F(1), ("input", None, None, False, ()))] if sym == CENT else None
        if phase == "input":
            if sym == "a":
                return [Trans(F(1), st, contribs=((("S",), "v", 1),))]
            if sym == DOLLAR:
                return [Trans(F(1), ("end", None, None, False, ()), closes=(("S",),))]
            return None
        return None

    return CheckProgram(start, step, lambda st: st[0] == "end")


def upower_program() -> CheckProgram:
    """Tracker for ``a b a^2 b ... a^(2^(i-1))`` with ``1 + sum t_j = n``.

    ``t_1 = 1`` and evenness of later blocks are deterministic; doubling
    between consecutive blocks and the final sum are equality checks.
    """
    # state: (phase, in_block, block_no (1 or 2 for >=2), length_class, chain)
    start = ("pre", False, 0, 0, None)

    def step(st, sym):
        phase, in_block, bno, lc, ch = st
        if phase == "pre":
            if sym != LBRACKET:
                return None
            return [Trans(F(1), ("cert", False, 0, 0, _Chain()), opens=(("S",),), contribs=((("S",), "u", 1),))]
        if phase == "cert":
            if sym == "a":
                if in_block:
                    nlc = min(lc + 1, 2) if bno == 1 else 1 - lc
                    contribs = _unit_contribs(ch, 1, 1, w_in=1, w_out=2) + ((("S",), "u", 1),)
                    return [Trans(F(1), ("cert", True, bno, nlc, ch), contribs=contribs)]
                nb = min(bno + 1, 2)
                out = []
                for p, nch, opens in _start_unit(ch, 1):
                    contribs = _unit_contribs(nch, 1, 1, w_in=1, w_out=2) + ((("S",), "u", 1),)
                    out.append(Trans(p, ("cert", True, nb, 1, nch), opens, contribs))
                return out
            if sym in ("b", RBRACKET):
                if not in_block:
                    if sym == RBRACKET and bno == 0:
                        return [Trans(F(1), ("mid", False, 0, 0, None))]
                    return None
                if bno == 1 and lc != 1:
                    return None
                if bno == 2 and lc != 0:
                    return None
                nch, closes = _end_unit(ch, 1)
                if sym == "b":
                    return [Trans(F(1), ("cert", False, bno, 0, nch), closes=closes)]
                if nch.last_done is False:
                    return []
                return [Trans(F(1), ("mid", False, 0, 0, None), closes=closes)]
            return None
        if phase == "mid":
            return [Trans(F(1), ("input", False, 0, 0, None))] if sym == CENT else None
        if phase == "input":
            if sym == "a":
                return [Trans(F(1), st, contribs=((("S",), "v", 1),))]
            if sym == DOLLAR:
                return [Trans(F(1), ("end", False, 0, 0, None), closes=(("S",),))]
            return None
        return None

    return CheckProgram(start, step, lambda st: st[0] == "end")


@dataclass(frozen=True, eq=False)
class PostPfaVerifier:
    """A compiled check program with its fast evaluator."""

    program: CheckProgram
    c: Fraction
    states: tuple = field(repr=False, default=())

    def outcome(self, cert, x) -> RunOutcome:
        from ..harness import compose

        return evaluate_checks(self.program, compose(cert, x), self.c)


def amplification_for(eps, c=DEFAULT_C) -> int:
    """Smallest odd majority size taking ``c/(c+1)`` and ``c/(c+5/4)`` to error ``eps``."""
    c = _check_c(c)
    eps = as_fraction(eps)
    if not 0 < eps < HALF:
        raise DomainError("eps must lie in (0, 1/2)")
    return smallest_majority_k(c / (c + 1), c / (c + F(5, 4)), eps)


def _postpfa_construction(name, prog, cert_alphabet, member, prover, eps, c, description):
    c = _check_c(c)
    alphabet = (LBRACKET, RBRACKET, CENT, DOLLAR) + tuple(sorted(set(cert_alphabet) | {"a"}))
    pfa, labels, order = compile_checks(prog, alphabet, c)
    k = amplification_for(eps, c)
    m = MaMachine(pfa, ("a",), tuple(cert_alphabet), labels, name, amplification=k)
    cons = Construction(m, prover, member, VerificationClaim("bounded", as_fraction(eps)), description)
    return cons, PostPfaVerifier(prog, c, tuple(order))


def build_usquare_mapostpfa(eps=F(1, 3), c=DEFAULT_C):
    """USQUARE with eps, certificate ``(a^i b)^i``; returns ``(construction, verifier)``."""
    return build_upoly_mapostpfa(2, eps, c, name="usquare-mapostpfa")


def nested_certificate(i: int, k: int) -> tuple:
    seps = SEPARATORS[: k - 1]
    unit: tuple = ("a",) * i + (seps[0],)
    for lvl in range(2, k):
        unit = unit * i + (seps[lvl - 1],)
    return unit * i


def build_upoly_mapostpfa(k: int, eps=F(1, 3), c=DEFAULT_C, name: Optional[str] = None):
    """UPOLY(k) with nested separators; returns ``(construction, verifier)``."""

    def member(x):
        n = unary_length(x)
        return n is not None and exact_root(n, k) is not None

    def prover(x):
        return nested_certificate(exact_root(len(x), k), k) if member(x) else None

    return _postpfa_construction(name or f"upoly-{k}-mapostpfa", nested_blocks_program(k), ("a",) + SEPARATORS[: k - 1],
                                 member, prover, eps, c, f"unary {k}-th powers with eps; nested block certificate")


def upower_certificate(i: int) -> tuple:
    if i == 0:
        return ()
    out: list = []
    for j in range(i):
        if j:
            out.append("b")
        out.extend(["a"] * (2**j))
    return tuple(out)


def build_upower_mapostpfa(eps=F(1, 3), c=DEFAULT_C):
    """UPOWER with doubling-chain certificate ``a b a^2 b ... a^(2^(i-1))``."""

    def member(x):
        n = unary_length(x)
        return n is not None and exact_log2(n) is not None

    def prover(x):
        return upower_certificate(exact_log2(len(x))) if member(x) else None

    return _postpfa_construction("upower-mapostpfa", upower_program(), ("a", "b"), member, prover, eps, c,
                                 "unary powers of two; doubling chain certificate")

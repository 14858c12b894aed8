"""Verifiers that carry a whole language as one real number.

The membership bits of a language are packed in base 4,
``alpha = sum_i F(i) 4^-i``.  A certificate lists bits; the verifier keeps
``alpha_k = 4^k alpha - (digits read so far)`` in a register.  When the
digits are right, ``alpha_k`` is the tail of the expansion and lies in
``[0, 1/3]``.  When an earlier digit is wrong it has magnitude at least
``4 - 1/3``, and when the last digit is forged it lies in ``[-1, -2/3]``.

The reject amplitude is ``4 (alpha_k - 1/6)``.  This keeps the honest
acceptance at or above ``9/13``, and every forged digit pushes rejection
above ``4/5``.  Because ``alpha`` is generally irrational, results are
intervals computed from an oracle with a finite horizon.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from ..automata import CENT, DOLLAR, LBRACKET, RBRACKET
from ..exactnum import DomainError, RationalInterval, as_fraction
from ..harness import MaMachine, VerificationClaim, as_word
from .common import Construction
from .qprogram import QProgram, compile_program, run_program

F = Fraction
DEFAULT_MARGIN = 40
SHIFT = F(1, 6)


@dataclass(frozen=True)
class UnaryOracle:
    """Membership bits ``F(1), ..., F(horizon)``; later indices are unknown."""

    member: Callable[[int], bool]
    horizon: int

    def __call__(self, i: int) -> int:
        if i < 1:
            raise DomainError("oracle indices start at 1")
        if i > self.horizon:
            raise DomainError(f"index {i} is beyond the oracle horizon {self.horizon}")
        return 1 if self.member(i) else 0

    def bits(self, upto: int) -> tuple:
        return tuple(str(self(i)) for i in range(1, upto + 1))


def alpha_of(o: UnaryOracle, k: int = 0) -> RationalInterval:
    """Enclosure of the tail ``alpha_k = sum_{i>k} F(i) 4^(k-i)``."""
    if k < 0 or o.horizon < k:
        raise DomainError(f"horizon {o.horizon} does not reach k = {k}")
    lo = sum((F(o(i), 4 ** (i - k)) for i in range(k + 1, o.horizon + 1)), F(0))
    return RationalInterval(lo, lo + F(1, 3 * 4 ** (o.horizon - k)))


def _affine_interval(f0: Fraction, f1: Fraction, alpha: RationalInterval) -> RationalInterval:
    """Range of ``f0 + (f1 - f0) a`` for ``a`` in ``alpha``."""
    a, b = f0 + (f1 - f0) * alpha.lo, f0 + (f1 - f0) * alpha.hi
    return RationalInterval(min(a, b), max(a, b))


@dataclass(frozen=True, eq=False)
class AlphaVerifier:
    """A register program parameterized by ``alpha`` plus the oracle that pins ``alpha`` down."""

    name: str
    program: Callable[[Fraction], QProgram]
    alphabet: tuple
    input_alphabet: tuple
    cert_alphabet: tuple
    oracle: UnaryOracle
    needed_index: Callable[[tuple], int]
    prover: Callable
    member: Callable
    margin: int = DEFAULT_MARGIN

    def _check_horizon(self, x) -> RationalInterval:
        need = self.needed_index(x) + self.margin
        if self.oracle.horizon < need:
            raise DomainError(f"oracle horizon {self.oracle.horizon} is below the required {need}")
        return alpha_of(self.oracle, 0)

    def acceptance_interval(self, cert, x) -> RationalInterval:
        """Postselected acceptance for the true ``alpha`` as an exact enclosure."""
        cert, x = as_word(cert), as_word(x)
        alpha = self._check_horizon(x)
        word = (LBRACKET,) + cert + (RBRACKET, CENT) + x + (DOLLAR,)
        r0 = run_program(self.program(F(0)), word)
        if r0 is None:
            return RationalInterval(F(0), F(0))
        r1 = run_program(self.program(F(1)), word)
        acc0, acc1 = as_fraction(r0[0]), as_fraction(r1[0])
        if acc0 == 0 or acc1 == 0:
            raise DomainError("accepting amplitude vanished")
        # relative to the accepting amplitude every reject amplitude is affine in alpha
        total = RationalInterval.point(1)
        for a0, a1 in zip(r0[1], r1[1]):
            total = total + _affine_interval(as_fraction(a0) / acc0, as_fraction(a1) / acc1, alpha).square()
        return total.reciprocal()

    def rejection_interval(self, cert, x) -> RationalInterval:
        iv = self.acceptance_interval(cert, x)
        return RationalInterval(1 - iv.hi, 1 - iv.lo)

    def realize(self, alpha: Optional[Fraction] = None) -> MaMachine:
        """Concrete postselecting QFA for a rational ``alpha`` (default: the oracle's lower enclosure)."""
        if alpha is None:
            alpha = alpha_of(self.oracle, 0).lo
        q, labels = compile_program(self.program(as_fraction(alpha)), self.alphabet)
        return MaMachine(q, self.input_alphabet, self.cert_alphabet, labels, self.name)

    def construction(self, alpha: Optional[Fraction] = None) -> Construction:
        return Construction(self.realize(alpha), self.prover, self.member, VerificationClaim("bounded", F(13, 45)),
                            f"{self.name}: language packed into a base-4 constant")


def _start(alpha) -> dict:
    """Unit vector ``(1, alpha, alpha^2/2) / (1 + alpha^2/2)``; the last entry is scratch."""
    z = 1 + alpha * alpha / 2
    return {"one": {"one": 1 / z}, "al": {"one": alpha / z}, "~prep": {"one": alpha * alpha / 2 / z}}


def _reject_alpha() -> dict:
    return {"al": 4, "one": -4 * SHIFT}


def unary_alpha_program(alpha: Fraction) -> QProgram:
    """Digits ``c`` map ``al -> 4 al - c``; each digit adds one and each input symbol subtracts one from ``len``."""
    regs = ("one", "al", "len")

    def step(ctrl, sym):
        if ctrl == "init":
            return (("cert", None), _start(alpha)) if sym == LBRACKET else None
        phase, last = ctrl
        if phase == "cert":
            if sym in ("0", "1"):
                c = int(sym)
                return ("cert", sym), {"one": {"one": 1}, "al": {"al": 4, "one": -c}, "len": {"len": 1, "one": 1}}
            if sym == RBRACKET:
                return (("mid", last), None) if last == "1" else None
            return None
        if phase == "mid":
            return (("input", last), None) if sym == CENT else None
        if phase == "input" and sym == "a":
            return ("input", last), {"one": {"one": 1}, "al": {"al": 1}, "len": {"len": 1, "one": -1}}
        return None

    def final(ctrl):
        if ctrl == "init" or ctrl[0] != "input":
            return None
        return {"one": 1}, [_reject_alpha(), {"len": 2, "one": -2}]

    return QProgram(regs, step, final, initial="init")


def build_unary_alpha_verifier(oracle: UnaryOracle, margin: int = DEFAULT_MARGIN) -> AlphaVerifier:
    """Unary verifier; the honest certificate for ``a^n`` is ``F(1) ... F(n+1)``."""

    def member(x):
        x = as_word(x)
        return all(s == "a" for s in x) and oracle(len(x) + 1) == 1

    def prover(x):
        x = as_word(x)
        return oracle.bits(len(x) + 1) if member(x) else None

    return AlphaVerifier("unary-alpha", unary_alpha_program, ("a", "0", "1", LBRACKET, RBRACKET, CENT, DOLLAR),
                         ("a",), ("0", "1"), oracle, lambda x: len(x) + 1, prover, member, margin)


# binary strings in shortlex order

def lex_index(s) -> int:
    """Shortlex position over ``{a, b}`` starting at 1; equals the numeral ``1`` followed by ``a->0, b->1``."""
    s = as_word(s)
    bits = "".join("0" if c == "a" else "1" if c == "b" else "?" for c in s)
    if "?" in bits:
        raise DomainError(f"not a string over {{a, b}}: {s!r}")
    return int("1" + bits, 2)


def lex_string(i: int) -> str:
    if i < 1:
        raise DomainError("lex indices start at 1")
    return bin(i)[3:].replace("0", "a").replace("1", "b")


def language_oracle(member: Callable[[str], bool], horizon: int) -> UnaryOracle:
    """Oracle over shortlex positions for a predicate on strings over ``{a, b}``."""
    return UnaryOracle(lambda i: member(lex_string(i)), horizon)


def binary_alpha_certificate(x, oracle: UnaryOracle) -> tuple:
    """``s_1 # F(1) # s_2 # F(2) # ... # x # F(idx x)`` with ``s_1`` the empty string."""
    out: list = []
    for i in range(1, lex_index(x) + 1):
        if i > 1:
            out.append("#")
        out.extend(lex_string(i))
        out.append("#")
        out.append(str(oracle(i)))
    return tuple(out)


BIN_REGS = ("one", "al", "E", "P", "EE", "EP", "PP", "S", "X")


def binary_alpha_program(alpha: Fraction) -> QProgram:
    """Register program for the shortlex certificate.

    ``E`` is the numeral of the string being read and ``P`` the previous
    one.  The products ``EE``, ``EP`` and ``PP`` let the squared gap
    ``(P + 1 - E)^2`` be added to ``S`` linearly.  ``X`` is the numeral of
    the input, compared against the last listed string.
    """
    keep = {r: {r: 1} for r in BIN_REGS}

    def upd(**changes):
        u = dict(keep)
        u.update(changes)
        return u

    def bit(b):
        # E <- 2E + b, EE <- 4EE + 4bE + b, EP <- 2EP + bP
        return upd(E={"E": 2, "one": b}, EE={"EE": 4, "E": 4 * b, "one": b}, EP={"EP": 2, "P": b})

    close_pair = upd(S={"S": 1, "PP": 1, "P": 2, "one": 1, "EP": -2, "E": -2, "EE": 1})
    open_listing = upd(E={"one": 1}, EE={"one": 1}, X={"one": 1})
    # after a string: P <- E, PP <- EE, E <- 1, EE <- 1, EP <- E
    shift = upd(P={"E": 1}, PP={"EE": 1}, E={"one": 1}, EE={"one": 1}, EP={"E": 1})

    # controls: ("str", first) reading s_i; ("sep1", first) after s_i#; ("bit", first, d) after the digit;
    # ("mid", d), ("input",)
    def step(ctrl, sym):
        if ctrl == "init":
            if sym != LBRACKET:
                return None
            return ("str", True), _start(alpha)
        kind = ctrl[0]
        if kind == "str":
            first = ctrl[1]
            if sym in ("a", "b"):
                if first:
                    return None  # the listing starts with the empty string
                return ("str", False), bit(0 if sym == "a" else 1)
            if sym == "#":
                # the empty first string sets the numerals to 1 (kept apart from the alpha preparation)
                return ("sep", first), (open_listing if first else close_pair)
            return None
        if kind == "sep":
            if sym in ("0", "1"):
                c = int(sym)
                return ("bit", sym), upd(al={"al": 4, "one": -c})
            return None
        if kind == "bit":
            if sym == "#":
                return ("str", False), shift
            if sym == RBRACKET:
                return (("mid", ctrl[1]), None) if ctrl[1] == "1" else None
            return None
        if kind == "mid":
            return (("input",), None) if sym == CENT else None
        if kind == "input" and sym in ("a", "b"):
            b = 0 if sym == "a" else 1
            return ("input",), upd(X={"X": 2, "one": b})
        return None

    def final(ctrl):
        if ctrl == "init" or ctrl[0] != "input":
            return None
        return {"one": 1}, [_reject_alpha(), {"S": 2}, {"E": 2, "X": -2}]

    return QProgram(BIN_REGS, step, final, initial="init")


def build_binary_alpha_verifier(oracle: UnaryOracle, margin: int = DEFAULT_MARGIN) -> AlphaVerifier:
    """Verifier over ``{a, b}``; the certificate lists every string up to ``x`` with its membership bit."""

    def member(x):
        x = as_word(x)
        return all(s in ("a", "b") for s in x) and oracle(lex_index(x)) == 1

    def prover(x):
        return binary_alpha_certificate(x, oracle) if member(x) else None

    return AlphaVerifier("binary-alpha", binary_alpha_program,
                         ("a", "b", "0", "1", "#", LBRACKET, RBRACKET, CENT, DOLLAR), ("a", "b"),
                         ("a", "b", "0", "1", "#"), oracle, lex_index, prover, member, margin)


def unary_language_oracle(member: Callable[[int], bool], horizon: int) -> UnaryOracle:
    """Oracle for a unary language given as a predicate on ``n``; ``a^n`` sits at position ``n + 1``."""
    return UnaryOracle(lambda i: member(i - 1), horizon)


def pow2_oracle(horizon: int) -> UnaryOracle:
    return unary_language_oracle(lambda n: n >= 1 and n & (n - 1) == 0, horizon)

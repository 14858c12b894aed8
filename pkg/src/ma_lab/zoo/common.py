"""Shared record type for zoo constructions."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Callable, Optional

from ..harness import MaMachine, Prover, VerificationClaim, Word


@dataclass(frozen=True)
class Construction:
    """A verifier together with its honest prover and the language it verifies."""

    machine: MaMachine
    prover: Prover
    member: Callable[[Word], bool]
    claim: VerificationClaim
    description: str = ""


def amplitude_claim(t: int) -> VerificationClaim:
    """Claim for verifiers ending in amplitudes ``(1, t d)``: members reach 1, others at most ``1/(t^2+1)``.

    At ``t = 1`` that bound is 1/2, which only supports a cutpoint claim.
    """
    bound = Fraction(1, t * t + 1)
    return VerificationClaim("cutpoint", bound) if t == 1 else VerificationClaim("bounded", bound)


def unary_length(x: Word, symbol: str = "a") -> Optional[int]:
    """``n`` when ``x == a^n``, else ``None``."""
    x = tuple(x)
    return len(x) if all(s == symbol for s in x) else None


def exact_root(n: int, k: int) -> Optional[int]:
    """Integer ``i >= 0`` with ``i**k == n``, or ``None``."""
    if n < 0:
        return None
    if k == 2:
        r = isqrt(n)
        return r if r * r == n else None
    lo, hi = 0, 1
    while hi**k < n:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**k < n:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo**k == n else None


def exact_log2(n: int) -> Optional[int]:
    if n >= 1 and n & (n - 1) == 0:
        return n.bit_length() - 1
    return None

"""Sublinear-certificate verifiers for unary languages.

The MA-PFAs compare a certificate-driven counter ``f(i)`` with the input
length ``n`` and accept with probability exactly 1/2 iff ``f(i) == n``.
The MA-PostQFA ends with unnormalized amplitudes ``(1, t(n - i^2))`` on its
accepting and rejecting states.
"""

from __future__ import annotations

from fractions import Fraction

from ..automata import (
    CENT,
    DOLLAR,
    LBRACKET,
    RBRACKET,
    Pfa,
    PostLabels,
    Qfa,
    stochastic_embed,
    superop_complete,
    validate_pfa,
    validate_qfa,
)
from ..exactnum import sqrt_of
from ..harness import MaMachine, VerificationClaim
from .common import Construction, amplitude_claim, exact_log2, exact_root, unary_length

F = Fraction


def _kron(a, b):
    return [[x * y for x in ra for y in rb] for ra in a for rb in b]


def linear_encoders(kind: str, k: int = 2):
    """Integer operator, start vector and index of the encoded value.

    ``square``: (1, 2i+1, i^2); ``linear``: (1, i); ``power``: (1, i)^{(x)k},
    whose last entry is i^k; ``doubling``: (1, 2^i).
    """
    if kind == "square":
        return [[1, 0, 0], [2, 1, 0], [0, 1, 1]], [1, 1, 0], 2
    if kind == "linear":
        return [[1, 0], [1, 1]], [1, 0], 1
    if kind == "power":
        if k < 2:
            raise ValueError("power encoder needs k >= 2")
        op, start = [[1, 0], [1, 1]], [1, 0]
        for _ in range(k - 1):
            op = _kron(op, [[1, 0], [1, 1]])
            start = [x * y for x in start for y in [1, 0]]
        return op, start, len(start) - 1
    if kind == "doubling":
        return [[1, 0], [0, 2]], [1, 1], 1
    raise ValueError(f"unknown encoder {kind!r}")


def encoder_power(kind: str, i: int, k: int = 2) -> list[int]:
    op, v, _ = linear_encoders(kind, k)
    for _ in range(i):
        v = [sum(op[r][c] * v[c] for c in range(len(v))) for r in range(len(op))]
    return v


# verbatim integer tables of the 11-state machine, each to be divided by 4
_PRINTED_USQUARE = {
    LBRACKET: [
        [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [1, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 4, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 4, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 4, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 4, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 4, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 4, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 4, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 4, 0],
        [2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 4],
    ],
    "a": [
        [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0],
        [2, 1, 0, 0, 0, 2, 1, 0, 0, 0, 0],
        [0, 1, 1, 0, 0, 0, 1, 1, 0, 0, 0],
        [1, 0, 0, 1, 0, 1, 0, 0, 1, 0, 0],
        [0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0],
        [0] * 11,
        [0] * 11,
        [0] * 11,
        [0] * 11,
        [0] * 11,
        [0, 2, 3, 3, 3, 0, 2, 3, 3, 3, 4],
    ],
    RBRACKET: [
        [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0] * 11,
        [0] * 11,
        [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
        [0] * 11,
        [0] * 11,
        [0] * 11,
        [0] * 11,
        [0] * 11,
        [2, 4, 3, 4, 4, 4, 4, 4, 4, 4, 4],
    ],
    CENT: [
        [0] * 11,
        [0] * 11,
        [0] * 11,
        [0] * 11,
        [0] * 11,
        [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0],
        [3, 3, 3, 3, 3, 4, 4, 4, 4, 4, 4],
    ],
    DOLLAR: [
        [0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2],
        [0] * 11,
        [0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0],
        [4, 4, 4, 3, 3, 3, 3, 3, 3, 3, 0],
    ],
}


def printed_usquare_matrices() -> dict:
    """The published 11-state matrices (scaled by 1/4), without corrections."""
    return {s: [[F(v, 4) for v in row] for row in rows] for s, rows in _PRINTED_USQUARE.items()}


def template_mapfa(kind: str, k: int = 2) -> tuple[Pfa, int]:
    """Build the counter-comparison MA-PFA for an encoder; returns ``(pfa, l)``.

    Layout: encoder registers ``e``, the input counter, the stored value,
    a mirror of those registers used right after ``¢``, and one slack state.
    After ``$`` the first state holds ``f(i)``, the second holds ``n`` and
    the third and fourth split everything else evenly; states 0 and 2 accept.
    """
    op, start, vidx = linear_encoders(kind, k)
    d = len(op)
    cnt, val = d, d + 1
    main = d + 2
    size = 2 * main + 1
    slack = size - 1
    layout = list(range(size - 1))

    def blank():
        return [[0] * (size - 1) for _ in range(size - 1)]

    # column sums that must fit under l
    step_sums = [sum(op[r][c] for r in range(d)) + (1 if c == 0 else 0) for c in range(d)]
    l = max(step_sums + [sum(start), 1])
    if kind == "square" and l != 4:
        raise AssertionError("square encoder must reproduce l = 4")

    ops = {}
    m = blank()
    for r in range(d):
        m[r][0] = start[r]
    for c in range(1, size - 1):
        m[c][c] = l
    ops[LBRACKET] = m

    m = blank()
    for base in (0, main):
        for c in range(d):
            for r in range(d):
                m[r][base + c] += op[r][c]
        m[cnt][base + 0] += 1
        m[cnt][base + cnt] += 1
        m[val][base + val] += 1
    ops["a"] = m

    m = blank()
    m[0][0] = 1
    m[val][vidx] = 1
    ops[RBRACKET] = m

    m = blank()
    for c in range(main):
        m[main + c][c] = 1
    ops[CENT] = m

    mats = {}
    for sym, o in ops.items():
        mat = stochastic_embed(o, l, layout, slack, size)
        mat[slack][slack] = F(1)
        mats[sym] = mat

    dollar = [[F(0)] * size for _ in range(size)]
    for c in range(main):
        rest = F(l)
        if c == val:
            dollar[0][c] += F(1, l)
            rest -= 1
        if c == cnt:
            dollar[1][c] += F(1, l)
            rest -= 1
        dollar[2][c] += rest / (2 * l)
        dollar[3][c] += rest / (2 * l)
    for c in range(main, 2 * main):
        dollar[c][c] = F(1, l)
        dollar[slack][c] = F(l - 1, l)
    dollar[2][slack] = F(1, 2)
    dollar[3][slack] = F(1, 2)
    mats[DOLLAR] = dollar
    pfa = Pfa.from_matrices(mats, initial=0, accepting=(0, 2))
    validate_pfa(pfa).raise_if_invalid(f"{kind} template")
    return pfa, l


def build_usquare_mapfa(printed: bool = False) -> Construction:
    """USQUARE MA-PFA with certificate ``a^i``: Acc = 1/2 iff ``i^2 == n`` (n >= 1).

    ``printed=True`` returns the published matrices verbatim; those count
    ``n + 1`` and leak mass to the slack state, so they miss the 1/2 mark
    on members.
    """
    if printed:
        pfa = Pfa.from_matrices(printed_usquare_matrices(), initial=0, accepting=(0, 2))
        validate_pfa(pfa).raise_if_invalid("printed USQUARE")
    else:
        pfa, _ = template_mapfa("square")
    m = MaMachine(pfa, ("a",), ("a",), None, "usquare-mapfa" + ("-printed" if printed else ""), sublinear=True)

    def member(x):
        n = unary_length(x)
        return n is not None and n >= 1 and exact_root(n, 2) is not None

    def prover(x):
        if not member(x):
            return None
        return ("a",) * exact_root(len(x), 2)

    return Construction(m, prover, member, VerificationClaim("two-sided", F(1, 2)),
                        "unary squares {a^(i^2) | i >= 1}; certificate a^i")


def build_upoly_mapfa(k: int) -> Construction:
    """UPOLY(k) MA-PFA over the k-fold tensor encoder; certificate ``a^i`` for ``n = i^k``."""
    if k < 2:
        raise ValueError("k must be at least 2")
    pfa, _ = template_mapfa("power", k)
    m = MaMachine(pfa, ("a",), ("a",), None, f"upoly-{k}", sublinear=True)

    def member(x):
        n = unary_length(x)
        return n is not None and n >= 1 and exact_root(n, k) is not None

    def prover(x):
        return ("a",) * exact_root(len(x), k) if member(x) else None

    return Construction(m, prover, member, VerificationClaim("two-sided", F(1, 2)),
                        f"unary k-th powers {{a^(i^{k}) | i >= 1}}; certificate a^i")


def build_upower_mapfa() -> Construction:
    """UPOWER MA-PFA over the doubling encoder; certificate ``a^i`` for ``n = 2^i``."""
    pfa, _ = template_mapfa("doubling")
    m = MaMachine(pfa, ("a",), ("a",), None, "upower", sublinear=True)

    def member(x):
        n = unary_length(x)
        return n is not None and exact_log2(n) is not None

    def prover(x):
        return ("a",) * exact_log2(len(x)) if member(x) else None

    return Construction(m, prover, member, VerificationClaim("two-sided", F(1, 2)),
                        "unary powers of two {a^(2^i) | i >= 0}; certificate a^i")


# the 10-state postselecting quantum verifier

def _printed_qfa_elements() -> dict:
    r7, r8, r2, r5 = sqrt_of(7) / 3, sqrt_of(8) / 3, sqrt_of(2) / 3, sqrt_of(5) / 3
    z = [[F(0)] * 10 for _ in range(10)]

    def mat(entries, base=None):
        out = [row[:] for row in (base or z)]
        for (r, c), v in entries.items():
            out[r][c] = v
        return out

    a1 = [[F(v, 3) for v in row] for row in [
        [1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [2, 1, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 1, 1, 0, 0, 0, 0, 0, 0, 0],
        [1, 0, 0, 1, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 0, 0, 0, 0, 0],
        [1, -2, 0, -1, 0, 0, 0, 0, 0, 0],
        [0, 1, -1, 0, 0, 0, 0, 0, 0, 0],
        [0] * 10, [0] * 10, [0] * 10,
    ]]
    a2 = mat({(5, 0): r2, (6, 1): r2, (7, 2): r7, (8, 3): r7, (9, 4): r8})
    a3 = mat({(i, i): F(1) for i in range(5, 10)})
    lb1 = mat({(0, 0): F(1, 3), (1, 0): F(1, 3), **{(i, i): F(1) for i in range(5, 10)}})
    lb2 = mat({(5, 0): r7, (6, 1): F(1), (7, 2): F(1), (8, 3): F(1), (9, 4): F(1)})
    rb1 = mat({(0, 0): F(1, 3), (3, 0): F(1, 3), (4, 2): F(1, 3), **{(i, i): F(1) for i in range(5, 10)}})
    rb2 = mat({(5, 0): r7, (6, 1): F(1), (7, 2): r8, (8, 3): F(1), (9, 4): F(1)})
    c1 = mat({**{(i, i): F(1, 3) for i in range(5)}, **{(i, i): F(1) for i in range(5, 10)}})
    c2 = mat({(i + 5, i): r8 for i in range(5)})
    d1 = mat({(0, 0): F(1, 3), (3, 1): F(2, 3), (4, 1): F(-2, 3), **{(i, i): F(1) for i in range(5, 10)}})
    d2 = mat({(5, 0): r8, (6, 1): r5, (7, 2): F(1), (8, 3): F(1), (9, 4): F(1)})
    return {LBRACKET: [lb1, lb2], "a": [a1, a2, a3], RBRACKET: [rb1, rb2], CENT: [c1, c2], DOLLAR: [d1, d2]}


def printed_usquare_qfa_elements() -> dict:
    """Published operation elements of the 10-state verifier (t = 2), verbatim."""
    return _printed_qfa_elements()


def dollar_scale(t: int) -> int:
    """Least integer ``L`` with ``L^2 >= 1 + 3 t^2`` (bounds the $ block's norm)."""
    target = 1 + 3 * t * t
    L = 1
    while L * L < target:
        L += 1
    return L


AUX = list(range(5, 10))


def usquare_qfa_elements(t: int = 2) -> dict:
    """Corrected operation elements: verbatim where valid, completed elsewhere."""
    printed = _printed_qfa_elements()
    out = {s: printed[s] for s in (LBRACKET, RBRACKET, CENT)}
    out["a"] = superop_complete([printed["a"][0]], AUX, 10)
    L = dollar_scale(t)
    d1 = [[F(0)] * 10 for _ in range(10)]
    d1[0][0] = F(1, L)
    d1[1][0], d1[1][3], d1[1][4] = F(-t, L), F(t, L), F(-t, L)
    for i in range(5, 10):
        d1[i][i] = F(1)
    out[DOLLAR] = superop_complete([d1], AUX, 10)
    return out


def build_usquare_mapostqfa(t: int = 2, printed: bool = False) -> Construction:
    """MA-PostQFA for USQUARE with eps: members accepted with probability 1, others rejected
    with probability at least ``t^2 / (t^2 + 1)``."""
    if t < 1:
        raise ValueError("t must be positive")
    els = printed_usquare_qfa_elements() if printed else usquare_qfa_elements(t)
    q = Qfa.from_matrices(els, initial=0, accepting=(0,))
    if not printed:
        validate_qfa(q).raise_if_invalid("USQUARE MA-PostQFA")
    labels = PostLabels({0}, {1})
    m = MaMachine(q, ("a",), ("a",), labels, f"usquare-mapostqfa-t{t}" + ("-printed" if printed else ""), sublinear=True)

    def member(x):
        n = unary_length(x)
        return n is not None and exact_root(n, 2) is not None

    def prover(x):
        return ("a",) * exact_root(len(x), 2) if member(x) else None

    return Construction(m, prover, member, amplitude_claim(t),
                        "unary squares including eps; certificate a^i")


def _qfa_poly_like(name: str, encoder: str, k: int, member, root, t: int) -> Construction:
    """Postselecting QFA comparing an encoder value with n, via the generic program compiler."""
    from .qprogram import QProgram, compile_program

    op, start, vidx = linear_encoders(encoder, k)
    d = len(op)
    regs = [f"e{j}" for j in range(d)] + ["n"]

    def step(ctrl, sym):
        if ctrl == "init":
            if sym != LBRACKET:
                return None
            return "cert", {f"e{r}": {"e0": start[r]} for r in range(d) if start[r]}
        if ctrl == "cert" and sym == "a":
            upd = {f"e{r}": {f"e{c}": op[r][c] for c in range(d) if op[r][c]} for r in range(d)}
            return "cert", upd
        if ctrl == "cert" and sym == RBRACKET:
            return "mid", {"e0": {"e0": 1}, f"e{vidx}": {f"e{vidx}": 1}}
        if ctrl == "mid" and sym == CENT:
            return "input", None
        if ctrl == "input" and sym == "a":
            upd = {r: {r: 1} for r in regs}
            upd["n"] = {"n": 1, "e0": 1}
            return "input", upd
        return None

    def final(ctrl):
        if ctrl != "input":
            return None
        return {"e0": 1}, [{"n": t, f"e{vidx}": -t}]

    prog = QProgram(regs, step, final, initial="init")
    q, labels = compile_program(prog, alphabet=("a",) + (LBRACKET, RBRACKET, CENT, DOLLAR))
    m = MaMachine(q, ("a",), ("a",), labels, name, sublinear=True)

    def prover(x):
        return ("a",) * root(len(x)) if member(x) else None

    return Construction(m, prover, member, amplitude_claim(t), name)


def build_upoly_mapostqfa(k: int, t: int = 2) -> Construction:
    def member(x):
        n = unary_length(x)
        return n is not None and exact_root(n, k) is not None

    return _qfa_poly_like(f"upoly-{k}-mapostqfa", "power", k, member, lambda n: exact_root(n, k), t)


def build_upower_mapostqfa(t: int = 2) -> Construction:
    def member(x):
        n = unary_length(x)
        return n is not None and exact_log2(n) is not None

    return _qfa_poly_like("upower-mapostqfa", "doubling", 2, member, exact_log2, t)

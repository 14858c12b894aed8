"""Compile classical-control register programs into postselecting QFAs.

A program has a finite set of control states and a vector of named
registers.  On every symbol the control moves deterministically and the
registers go through a rational linear map.  At ``$`` a control either
rejects outright or emits one accepting functional and some rejecting
functionals of the registers.

Compilation gives every (control, register) pair its own basis state.  Each
transition becomes one operation element scaled by ``1/N``, where ``N`` is
an integer bound on the map's norm.  The lost norm is completed exactly
(LDL of ``I - M^T M / N^2``) into absorbing auxiliary states.  The useful
computation therefore stays in a single pure branch, and the postselected
outcome equals the register-level evaluation in :func:`run_program`.
Register names starting with ``~`` are write-only scratch rows that land
in auxiliary states.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Callable, Mapping, Optional, Sequence

from ..automata import DOLLAR, PostLabels, Qfa, ldl_psd
from ..exactnum import as_fraction, sqrt_of

Update = Optional[Mapping[str, Mapping[str, object]]]


@dataclass
class QProgram:
    """``step(control, symbol) -> (control', update) | None``; ``final(control) -> (acc, [rej...]) | None``.

    ``update`` maps each target register to ``{source: coefficient}``; targets
    left out become zero, and ``None`` means the identity.  The run starts
    with amplitude 1 in ``registers[0]``.
    """

    registers: Sequence[str]
    step: Callable
    final: Callable
    initial: object = "init"


class ProgramReject(Exception):
    pass


def _prepare(update: Update, index: Mapping[str, int]):
    """Turn an update into a function on the register list (``None`` stays the identity)."""
    if update is None:
        return None
    coefs: list = []
    exprs = ["0"] * len(index)
    for tgt, row in update.items():
        if tgt.startswith("~"):
            continue
        terms = []
        for src, c in row.items():
            if c:
                if c == 1:
                    terms.append(f"r[{index[src]}]")
                else:
                    terms.append(f"c[{len(coefs)}]*r[{index[src]}]")
                    coefs.append(_plain(c))
        if terms:
            exprs[index[tgt]] = "+".join(terms)
    return eval("lambda r: [" + ",".join(exprs) + "]", {"c": coefs})


def _transition(prog: QProgram, ctrl, sym):
    cache = prog.__dict__.setdefault("_cache", {})
    key = (ctrl, sym)
    if key not in cache:
        nxt = prog.step(ctrl, sym)
        index = {r: i for i, r in enumerate(prog.registers)}
        cache[key] = None if nxt is None else (nxt[0], _prepare(nxt[1], index), nxt[1])
    return cache[key]


def run_program(prog: QProgram, word: Sequence[str]):
    """Register-level evaluation: ``(acc_amp, [rej_amps])`` or ``None`` on deterministic rejection."""
    ctrl = prog.initial
    regs = [1] + [0] * (len(prog.registers) - 1)
    last = len(word) - 1
    for i, sym in enumerate(word):
        if sym == DOLLAR and i == last:
            fin = prog.final(ctrl)
            if fin is None:
                return None
            acc, rejs = fin
            index = {r: j for j, r in enumerate(prog.registers)}
            amp = lambda f: sum(_plain(c) * regs[index[r]] for r, c in f.items())
            return amp(acc), [amp(f) for f in rejs]
        nxt = _transition(prog, ctrl, sym)
        if nxt is None:
            return None
        ctrl, fn, _ = nxt
        if fn is not None:
            regs = fn(regs)
    raise ValueError("word must end with $")


def _pull_back(update: Update, f: dict) -> dict:
    """Functional ``f`` on the registers after ``update`` as a functional on the registers before it."""
    if update is None:
        return dict(f)
    out: dict = {}
    for tgt, w in f.items():
        for src, c in update.get(tgt, {}).items():
            if c:
                out[src] = out.get(src, 0) + w * c
    return {k: v for k, v in out.items() if v}


def _plain(c):
    """Integers stay integers (much cheaper than integral Fractions)."""
    if isinstance(c, (int, Fraction)):
        c = Fraction(c)
        return c.numerator if c.denominator == 1 else c
    return c


def _tail_functionals(prog: QProgram, ctrl, tail: Sequence[str]):
    """Final functionals of ``tail`` (ending in ``$``) pulled back to control ``ctrl``, or ``None``."""
    path = []
    for sym in tail[:-1]:
        nxt = _transition(prog, ctrl, sym)
        if nxt is None:
            return None
        path.append(nxt[2])
        ctrl = nxt[0]
    fin = prog.final(ctrl)
    if fin is None:
        return None
    acc, rejs = fin
    funcs = [{r: _plain(c) for r, c in f.items()} for f in [acc, *rejs]]
    for upd in reversed(path):
        funcs = [_pull_back(upd, f) for f in funcs]
    return funcs


def batch_acceptance(prog: QProgram, heads: Sequence[Sequence[str]], tail: Sequence[str]) -> list:
    """Postselected acceptance of every ``head + tail``; shares head prefixes and pulls the tail back once."""
    index = {r: j for j, r in enumerate(prog.registers)}
    tails: dict = {}
    out = []
    stack = [(prog.initial, [1] + [0] * (len(prog.registers) - 1))]
    prev: tuple = ()
    for head in heads:
        head = tuple(head)
        lcp = 0
        while lcp < min(len(prev), len(head)) and prev[lcp] == head[lcp] and lcp + 1 < len(stack):
            lcp += 1
        del stack[lcp + 1:]
        dead = False
        for sym in head[lcp:]:
            ctrl, regs = stack[-1]
            nxt = None if ctrl is None else _transition(prog, ctrl, sym)
            if nxt is None:
                stack.append((None, regs))
                dead = True
                continue
            stack.append((nxt[0], regs if nxt[1] is None else nxt[1](regs)))
        prev = head
        ctrl, regs = stack[-1]
        dead = dead or ctrl is None
        if not dead and ctrl not in tails:
            tails[ctrl] = _tail_functionals(prog, ctrl, tuple(tail))
        funcs = None if dead else tails[ctrl]
        if funcs is None:
            out.append(Fraction(0))
            continue
        amps = [sum(w * regs[index[r]] for r, w in f.items()) for f in funcs]
        a = amps[0] * amps[0]
        tot = a + sum(x * x for x in amps[1:])
        if tot == 0:
            from ..automata import PostselectionUndefined

            raise PostselectionUndefined("program produced zero amplitudes")
        out.append(Fraction(a) / tot)
    return out


def program_acceptance(prog: QProgram, word) -> Fraction:
    """Postselected acceptance ``acc^2 / (acc^2 + sum rej^2)`` from the register view."""
    res = run_program(prog, word)
    if res is None:
        return Fraction(0)
    acc, rejs = res
    a = as_fraction(acc) ** 2
    r = sum(as_fraction(x) ** 2 for x in rejs)
    if a + r == 0:
        from ..automata import PostselectionUndefined

        raise PostselectionUndefined("program produced zero amplitudes")
    return a / (a + r)


def _norm_bound(cols: Mapping[str, Mapping[str, Fraction]]) -> int:
    """Integer ``N`` with ``N^2 >= ||M||_1 * ||M||_inf`` (a bound on the squared spectral norm)."""
    col_sum = max((sum(abs(v) for v in col.values()) for col in cols.values()), default=Fraction(0))
    row_tot: dict = {}
    for col in cols.values():
        for r, v in col.items():
            row_tot[r] = row_tot.get(r, 0) + abs(v)
    row_sum = max(row_tot.values(), default=Fraction(0))
    bound = as_fraction(col_sum * row_sum)
    n = isqrt(bound.numerator // bound.denominator) if bound else 1
    while n * n < bound:
        n += 1
    return max(n, 1)


def _columns(update: Update, registers: Sequence[str]) -> dict:
    """Transpose an update into ``{source: {target: coef}}``."""
    if update is None:
        return {r: {r: Fraction(1)} for r in registers}
    cols: dict = {r: {} for r in registers}
    for tgt, row in update.items():
        for src, coef in row.items():
            c = as_fraction(coef)
            if c:
                if src not in cols:
                    raise KeyError(f"unknown source register {src!r}")
                cols[src][tgt] = c
    return cols


def _completion_rows(cols: dict, registers: Sequence[str], scale: int):
    """Rows ``sqrt(D_k) L[:,k]^T`` completing the scaled map (over source registers)."""
    n = len(registers)
    g = [[Fraction(0)] * n for _ in range(n)]
    for i, ri in enumerate(registers):
        ci = cols[ri]
        for j in range(i, n):
            cj = cols[registers[j]]
            v = sum((x * cj[t] for t, x in ci.items() if t in cj), Fraction(0))
            g[i][j] = g[j][i] = v / (scale * scale)
    resid = [[(1 if i == j else 0) - g[i][j] for j in range(n)] for i in range(n)]
    lower, d = ldl_psd(resid)
    rows = []
    for k in range(n):
        if d[k] > 0:
            root = sqrt_of(d[k])
            rows.append({registers[j]: root * lower[j][k] for j in range(k, n) if lower[j][k]})
    return rows


def compile_program(prog: QProgram, alphabet: Sequence[str], max_controls: int = 5000):
    """Return ``(qfa, labels)`` realizing ``prog`` over ``alphabet`` (which must contain ``$``)."""
    alphabet = tuple(alphabet)
    regs = list(prog.registers)
    trans: dict = {}
    finals: dict = {}
    order = [prog.initial]
    seen = {prog.initial}
    queue = deque([prog.initial])
    while queue:
        q = queue.popleft()
        finals[q] = prog.final(q)
        for sym in alphabet:
            if sym == DOLLAR:
                continue
            nxt = prog.step(q, sym)
            trans[(q, sym)] = nxt
            if nxt is not None and nxt[0] not in seen:
                seen.add(nxt[0])
                order.append(nxt[0])
                queue.append(nxt[0])
                if len(order) > max_controls:
                    raise ValueError("control state space exceeds the configured limit")
    n_rej = max((len(f[1]) for f in finals.values() if f is not None), default=1)
    ACC, DREJ = 0, 1 + n_rej
    rej_states = list(range(1, 1 + n_rej))
    base = DREJ + 1
    cidx = {q: i for i, q in enumerate(order)}
    R = len(regs)
    ridx = {r: i for i, r in enumerate(regs)}

    def st(q, r):
        return base + cidx[q] * R + ridx[r]

    scratch = sorted({t for upd in (v[1] for v in trans.values() if v and v[1]) for t in upd if t.startswith("~")})
    aux0 = base + len(order) * R
    n_aux = R + len(scratch)
    size = aux0 + n_aux
    scratch_row = {name: aux0 + R + i for i, name in enumerate(scratch)}

    sinks = [ACC] + rej_states + [DREJ] + list(range(aux0, size))
    ident = tuple(((c, Fraction(1)),) if c in sinks else () for c in range(size))

    def element(entries):
        cols = [[] for _ in range(size)]
        for (r, c), v in entries.items():
            if v:
                cols[c].append((r, v))
        return tuple(tuple(sorted(col)) for col in cols)

    def reject_element(q):
        ent = {(DREJ, st(q, regs[0])): Fraction(1)}
        for i, r in enumerate(regs[1:]):
            ent[(aux0 + i, st(q, r))] = Fraction(1)
        return element(ent)

    def mapped(q, cols, target_row, scale):
        main, comp = {}, {}
        for src, col in cols.items():
            for tgt, v in col.items():
                main[(target_row(tgt), st(q, src))] = v / scale
        for k, row in enumerate(_completion_rows(cols, regs, scale)):
            for src, v in row.items():
                comp[(aux0 + k, st(q, src))] = v
        out = [element(main)]
        if comp:
            out.append(element(comp))
        return out

    elements = {}
    for sym in alphabet:
        lst = [ident]
        for q in order:
            if sym == DOLLAR:
                fin = finals[q]
                if fin is None:
                    lst.append(reject_element(q))
                    continue
                acc, rejs = fin
                names = {"@acc": ACC, **{f"@rej{i}": rej_states[i] for i in range(len(rejs))}}
                upd = {"@acc": acc, **{f"@rej{i}": f for i, f in enumerate(rejs)}}
                cols = _columns(upd, regs)
                scale = _norm_bound(cols)
                lst.extend(mapped(q, cols, names.__getitem__, scale))
                continue
            nxt = trans[(q, sym)]
            if nxt is None:
                lst.append(reject_element(q))
                continue
            q2, upd = nxt
            cols = _columns(upd, regs)
            scale = _norm_bound(cols)

            def row_of(tgt, q2=q2):
                return scratch_row[tgt] if tgt.startswith("~") else st(q2, tgt)

            lst.extend(mapped(q, cols, row_of, scale))
        elements[sym] = tuple(lst)
    qfa = Qfa(size, alphabet, elements, st(prog.initial, regs[0]), frozenset({ACC}))
    labels = PostLabels({ACC}, set(rej_states) | {DREJ})
    return qfa, labels

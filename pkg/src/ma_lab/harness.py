"""Merlin-Arthur wrapper around the automata core.

A certificate ``c`` and an input ``x`` are read as ``⌊ c ⌋ ¢ x $``.  This
module runs such machines, searches certificates exhaustively for the best
cheating strategy, checks verification claims over input ranges, and
amplifies bounded-error machines by majority vote.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from math import comb, isqrt
from typing import Callable, Iterable, Optional, Sequence, Union

from .automata import (
    CENT,
    DOLLAR,
    LBRACKET,
    MARKERS,
    RBRACKET,
    DomainError,
    Evolver,
    MachineError,
    Pfa,
    PostLabels,
    PostselectionUndefined,
    Qfa,
    RunOutcome,
    post_decide,
)
from .exactnum import as_fraction, format_rational, format_scalar

Word = tuple
Prover = Callable[[Word], Optional[Word]]


def as_word(s) -> Word:
    """Strings are split into single-character symbols; sequences are kept as given."""
    if isinstance(s, str):
        return tuple(s)
    return tuple(s)


def word_text(w: Sequence[str]) -> str:
    w = tuple(w)
    if all(len(s) == 1 for s in w) and "," not in w:
        return "".join(w)
    return ",".join(w)


@dataclass(frozen=True, eq=False)
class MaMachine:
    """A verifier reading ``⌊ certificate ⌋ ¢ input $``.

    ``labels`` is ``None`` for machines without postselection (all
    non-accepting states reject).  ``amplification`` is an odd number of
    independent copies combined by majority vote, evaluated analytically.
    """

    machine: Union[Pfa, Qfa]
    input_alphabet: tuple
    cert_alphabet: tuple
    labels: Optional[PostLabels] = None
    name: str = ""
    amplification: int = 1
    sublinear: bool = False

    def __post_init__(self):
        object.__setattr__(self, "input_alphabet", tuple(self.input_alphabet))
        object.__setattr__(self, "cert_alphabet", tuple(self.cert_alphabet))
        alpha = set(self.machine.alphabet)
        need = set(self.input_alphabet) | set(self.cert_alphabet) | set(MARKERS)
        if not need <= alpha:
            raise MachineError(f"machine alphabet lacks {sorted(need - alpha)}")
        clash = set(MARKERS) & (set(self.input_alphabet) | set(self.cert_alphabet))
        if clash:
            raise MachineError(f"markers reused as ordinary symbols: {sorted(clash)}")
        if self.amplification < 1 or self.amplification % 2 == 0:
            raise DomainError("amplification must be a positive odd integer")
        if self.labels is not None:
            self.labels.check(self.machine.state_count)

    @property
    def postselecting(self) -> bool:
        return self.labels is not None

    @property
    def effective_labels(self) -> PostLabels:
        return self.labels if self.labels is not None else PostLabels.complement(self.machine)

    @cached_property
    def evolver(self) -> Evolver:
        return Evolver(self.machine, self.effective_labels)

    def with_amplification(self, k: int) -> "MaMachine":
        return MaMachine(self.machine, self.input_alphabet, self.cert_alphabet, self.labels, self.name, k, self.sublinear)

    def default_cert_bound(self, n: int) -> int:
        """|x| + 8 for linear certificates, ceil(sqrt|x|) + 4 for sublinear ones."""
        if self.sublinear:
            r = isqrt(n)
            return (r if r * r == n else r + 1) + 4
        return n + 8

    def __getstate__(self):
        d = dict(self.__dict__)
        d.pop("evolver", None)
        return d

    def __setstate__(self, d):
        self.__dict__.update(d)


def compose(c, x, m: Optional[MaMachine] = None) -> Word:
    """The flat word ``⌊ c ⌋ ¢ x $``."""
    c, x = as_word(c), as_word(x)
    if m is not None:
        bad_c = [s for s in c if s not in m.cert_alphabet]
        bad_x = [s for s in x if s not in m.input_alphabet]
        if bad_c or bad_x:
            raise MachineError(f"symbols outside declared alphabets: certificate {bad_c}, input {bad_x}")
    else:
        bad = [s for s in c + x if s in MARKERS]
        if bad:
            raise MachineError(f"marker symbols inside certificate or input: {bad}")
    return (LBRACKET,) + c + (RBRACKET, CENT) + x + (DOLLAR,)


@dataclass(frozen=True)
class MaResult:
    acc: Fraction
    rej: Fraction
    outcome: RunOutcome


def amplify_majority(per_copy, k: int) -> tuple[Fraction, Fraction]:
    """Exact ``P[Bin(k, p) > k/2]`` for ``p = a / (a + r)`` and odd ``k``."""
    a, r = per_copy
    if k < 1 or k % 2 == 0:
        raise DomainError("k must be a positive odd integer")
    total = a + r
    if total == 0:
        raise PostselectionUndefined("per-copy masses are both zero")
    p = as_fraction(a) / as_fraction(total)
    return _majority(p, k)


def _majority(p: Fraction, k: int) -> tuple[Fraction, Fraction]:
    num, den = p.numerator, p.denominator
    q = den - num
    tail = sum(comb(k, j) * num**j * q ** (k - j) for j in range(k // 2 + 1, k + 1))
    acc = Fraction(tail, den**k)
    return acc, 1 - acc


def smallest_majority_k(p_yes: Fraction, p_no: Fraction, eps: Fraction, limit: int = 100001) -> int:
    """Smallest odd ``k`` with majority tails ``>= 1 - eps`` at ``p_yes`` and ``<= eps`` at ``p_no``."""
    p_yes, p_no, eps = as_fraction(p_yes), as_fraction(p_no), as_fraction(eps)
    if not p_no < Fraction(1, 2) < p_yes:
        raise DomainError("majority amplification needs p_no < 1/2 < p_yes")
    k = 1
    while k <= limit:
        if _majority(p_yes, k)[0] >= 1 - eps and _majority(p_no, k)[0] <= eps:
            return k
        k += 2
    raise DomainError(f"no odd k <= {limit} reaches error {eps}")


def run_ma(m: MaMachine, c, x) -> MaResult:
    """Postselected (or plain) acceptance of ``(c, x)``; amplification applied analytically."""
    word = compose(c, x, m)
    o = m.evolver.outcome(m.evolver.run(word))
    return _decide(m, o)


def _decide(m: MaMachine, o: RunOutcome) -> MaResult:
    acc, rej = post_decide(o)
    acc, rej = as_fraction(acc), as_fraction(rej)
    if m.amplification > 1:
        acc, rej = _majority(acc, m.amplification)
    return MaResult(acc, rej, o)


# adversarial search

@dataclass
class AttackResult:
    best_cert: Optional[Word]
    best_value: Optional[Fraction]
    best_acc: Optional[Fraction]
    explored: int = 0
    undefined: int = 0


def _sink_states(machine) -> frozenset:
    """States mapped to themselves with certainty by every symbol."""
    out = set()
    for s in range(machine.state_count):
        ok = True
        for sym in machine.alphabet:
            if isinstance(machine, Pfa):
                col = machine.columns[sym][s]
                if col != ((s, 1),):
                    ok = False
                    break
            else:
                hits = [e[s] for e in machine.elements[sym] if e[s]]
                if len(hits) != 1 or len(hits[0]) != 1 or hits[0][0][0] != s or hits[0][0][1] not in (1, -1):
                    ok = False
                    break
        if ok:
            out.add(s)
    return frozenset(out)


class _Search:
    def __init__(self, m: MaMachine, x: Word, objective: str, lam: Fraction):
        self.m = m
        self.ev = m.evolver
        self.suffix = (RBRACKET, CENT) + x + (DOLLAR,)
        self.objective = objective
        self.lam = lam
        self.sinks = _sink_states(m.machine)
        self.alphabet = tuple(sorted(m.cert_alphabet))
        self.per_copy = objective == "max-acc" and m.amplification > 1
        if isinstance(m.machine, Pfa):
            labels = m.effective_labels
            self.fa = self._backward(labels.accepting)
            self.fr = self._backward(labels.rejecting)

    def _backward(self, target) -> dict:
        g = {s: Fraction(1) for s in target}
        cols = self.m.machine.columns
        for sym in reversed(self.suffix):
            nxt = {}
            for c, col in enumerate(cols[sym]):
                tot = Fraction(0)
                for r, v in col:
                    w = g.get(r)
                    if w:
                        tot += v * w
                if tot:
                    nxt[c] = tot
            g = nxt
        return g

    def outcome(self, state) -> RunOutcome:
        if isinstance(self.m.machine, Pfa):
            a = sum((v * self.fa[s] for s, v in state.items() if s in self.fa), Fraction(0))
            r = sum((v * self.fr[s] for s, v in state.items() if s in self.fr), Fraction(0))
            return RunOutcome(a, r, 1 - a - r)
        return self.ev.outcome(self.ev.run(self.suffix, state))

    def frozen(self, state) -> bool:
        if isinstance(self.m.machine, Pfa):
            return all(s in self.sinks for s in state)
        kind, data = state
        if kind != "b":
            return False
        return all(s in self.sinks for v in data for s in v)

    def value(self, acc: Fraction) -> Fraction:
        if self.objective == "max-acc":
            return acc
        return abs(acc - self.lam)

    def better(self, v, best) -> bool:
        if best is None:
            return True
        return v > best if self.objective == "max-acc" else v < best

    def run(self, prefix: Word, state, depth_left: int, res: AttackResult) -> None:
        stack = [(prefix, state, depth_left)]
        while stack:
            cert, st, left = stack.pop()
            res.explored += 1
            try:
                o = self.outcome(st)
                if self.per_copy:
                    # majority voting is increasing in the per-copy value, so compare that and amplify at the end
                    v = as_fraction(post_decide(o)[0])
                    acc = v
                else:
                    acc = _decide(self.m, o).acc
                    v = self.value(acc)
                if self.better(v, res.best_value):
                    res.best_cert, res.best_value, res.best_acc = cert, v, acc
            except PostselectionUndefined:
                res.undefined += 1
            if left == 0 or self.frozen(st) or self.ev.is_dead(st):
                continue
            for sym in reversed(self.alphabet):
                stack.append((cert + (sym,), self.ev.step(st, sym), left - 1))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MA_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _subtree(args):
    m, x, objective, lam, sym, max_len = args
    s = _Search(m, x, objective, lam)
    st = s.ev.step(s.ev.run((LBRACKET,)), sym)
    res = AttackResult(None, None, None)
    s.run((sym,), st, max_len - 1, res)
    return res


def adversarial_max(m: MaMachine, x, max_cert_len: int, objective: str = "max-acc", lam=Fraction(1, 2)) -> AttackResult:
    """Exhaustive certificate search up to ``max_cert_len`` symbols.

    ``objective`` is ``max-acc`` (largest acceptance) or ``min-distance``
    (acceptance closest to ``lam``).  Ties keep the lexicographically
    smallest certificate.  Certificates with undefined postselection are
    counted and skipped.
    """
    if max_cert_len < 0:
        raise DomainError("max_cert_len must be nonnegative")
    if objective in ("distance-to-half", "min-distance-to-half"):
        objective, lam = "min-distance", Fraction(1, 2)
    if objective not in ("max-acc", "min-distance"):
        raise DomainError(f"unknown objective {objective!r}")
    x = as_word(x)
    compose((), x, m)
    lam = as_fraction(lam)
    search = _Search(m, x, objective, lam)
    res = AttackResult(None, None, None)
    root = search.ev.run((LBRACKET,))
    workers = _threads()
    if workers > 1 and max_cert_len >= 3 and len(search.alphabet) > 1:
        search.run((), root, 0, res)
        jobs = [(m, x, objective, lam, sym, max_cert_len) for sym in search.alphabet]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_subtree, jobs))
        for part in parts:  # alphabet order keeps the lexicographic tie-break
            res.explored += part.explored
            res.undefined += part.undefined
            if part.best_value is not None and search.better(part.best_value, res.best_value):
                res.best_cert, res.best_value, res.best_acc = part.best_cert, part.best_value, part.best_acc
    else:
        search.run((), root, max_cert_len, res)
    if search.per_copy and res.best_value is not None:
        res.best_acc = res.best_value = _majority(res.best_value, m.amplification)[0]
    return res


# claims

@dataclass(frozen=True)
class VerificationClaim:
    """``exact``, ``cutpoint`` (threshold), ``two-sided`` (Acc = threshold iff member) or ``bounded`` (error)."""

    mode: str
    param: Optional[Fraction] = None

    def __post_init__(self):
        if self.mode not in ("exact", "cutpoint", "two-sided", "bounded"):
            raise DomainError(f"unknown claim mode {self.mode!r}")
        if self.mode != "exact":
            if self.param is None:
                raise DomainError(f"mode {self.mode} needs a parameter")
            p = as_fraction(self.param)
            object.__setattr__(self, "param", p)
            if self.mode in ("cutpoint", "two-sided") and not 0 <= p < 1:
                raise DomainError("cutpoint must lie in [0, 1)")
            if self.mode == "bounded" and not 0 <= p < Fraction(1, 2):
                raise DomainError("error bound must lie in [0, 1/2)")

    @classmethod
    def parse(cls, text: str) -> "VerificationClaim":
        mode, _, arg = text.partition(":")
        return cls(mode, as_fraction(arg) if arg else None)

    def __str__(self):
        return self.mode if self.param is None else f"{self.mode}:{format_rational(self.param)}"

    def member_ok(self, acc: Fraction) -> bool:
        if self.mode == "exact":
            return acc == 1
        if self.mode == "cutpoint":
            return acc > self.param
        if self.mode == "two-sided":
            return acc == self.param
        return acc >= 1 - self.param

    def objective(self) -> str:
        return "min-distance" if self.mode == "two-sided" else "max-acc"

    def nonmember_ok(self, value: Optional[Fraction]) -> bool:
        if value is None:  # no certificate produced a decision
            return True
        if self.mode == "exact":
            return value == 0
        if self.mode == "cutpoint":
            return value <= self.param
        if self.mode == "two-sided":
            return value > 0
        return value <= self.param


@dataclass
class ClaimReport:
    machine: str
    claim: str
    max_n: int
    cert_bound: str
    rows: list = field(default_factory=list)

    @property
    def counterexamples(self) -> list:
        return [r for r in self.rows if not r["pass"]]

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def to_json(self) -> dict:
        return {
            "machine": self.machine,
            "claim": self.claim,
            "max_n": self.max_n,
            "cert_bound": self.cert_bound,
            "inputs": self.rows,
            "counterexamples": [r["input"] for r in self.counterexamples],
            "pass": self.ok,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False)


def enumerate_words(alphabet: Sequence[str], max_len: int) -> Iterable[Word]:
    alphabet = sorted(alphabet)
    for n in range(max_len + 1):
        yield from product(alphabet, repeat=n)


def check_claim(m: MaMachine, claim: VerificationClaim, member: Callable[[Word], bool], max_n: int,
                cert_bound: Union[int, Callable[[int], int], None] = None, prover: Optional[Prover] = None,
                inputs: Optional[Iterable] = None) -> ClaimReport:
    """Check completeness with the prover and soundness by exhaustive attack on every input."""
    if max_n < 0:
        raise DomainError("max_n must be nonnegative")
    if cert_bound is None:
        bound_fn, bound_text = m.default_cert_bound, ("ceil(sqrt|x|)+4" if m.sublinear else "|x|+8")
    elif callable(cert_bound):
        bound_fn, bound_text = cert_bound, getattr(cert_bound, "__doc__", None) or "custom"
    else:
        if cert_bound < 0:
            raise DomainError("certificate bound must be nonnegative")
        bound_fn, bound_text = (lambda n, b=cert_bound: b), str(cert_bound)
    report = ClaimReport(m.name, str(claim), max_n, bound_text)
    words = enumerate_words(m.input_alphabet, max_n) if inputs is None else (as_word(w) for w in inputs)
    for x in words:
        row = {"input": word_text(x), "member": bool(member(x)), "mode": str(claim),
               "honest_cert": None, "honest_acc": None,
               "adversarial_best_cert": None, "adversarial_acc": None, "pass": False}
        if row["member"]:
            cert = prover(x) if prover is not None else None
            if cert is not None:
                row["honest_cert"] = word_text(cert)
                try:
                    acc = run_ma(m, cert, x).acc
                    row["honest_acc"] = format_rational(acc)
                    row["pass"] = claim.member_ok(acc)
                except PostselectionUndefined:
                    row["honest_acc"] = "undefined"
        else:
            res = adversarial_max(m, x, bound_fn(len(x)), claim.objective(), claim.param or Fraction(1, 2))
            if res.best_cert is not None:
                row["adversarial_best_cert"] = word_text(res.best_cert)
                row["adversarial_acc"] = format_rational(res.best_acc)
            row["pass"] = claim.nonmember_ok(res.best_value)
        report.rows.append(row)
    return report


# explicit products

STATE_BUDGET = 40_000


def _product_labels(base: PostLabels, m: int, k: int, rule: str):
    acc, rej = [], []
    for idx, tup in enumerate(product(range(m), repeat=k)):
        kinds = ["a" if s in base.accepting else "r" if s in base.rejecting else "n" for s in tup]
        if rule == "all-accept-vs-all-reject":
            if all(t == "a" for t in kinds):
                acc.append(idx)
            elif all(t == "r" for t in kinds):
                rej.append(idx)
        elif rule == "majority":
            if "n" in kinds:
                continue
            (acc if kinds.count("a") * 2 > k else rej).append(idx)
        else:
            raise DomainError(f"unknown product rule {rule!r}")
    return PostLabels(frozenset(acc), frozenset(rej))


def _kron_sparse(mats, m: int):
    k = len(mats)
    cols = []
    for tup in product(range(m), repeat=k):
        entries = [((), Fraction(1))]
        for mat, c in zip(mats, tup):
            entries = [(rs + (r,), v * w) for rs, v in entries for r, w in mat[c]]
        col = []
        for rs, v in entries:
            idx = 0
            for r in rs:
                idx = idx * m + r
            col.append((idx, v))
        col.sort()
        cols.append(tuple(col))
    return tuple(cols)


def product_amplify(m: MaMachine, k: int, rule: str = "majority") -> MaMachine:
    """Explicit ``k``-fold product machine (``k <= 3``) with the given combination rule."""
    if k < 1 or k > 3:
        raise DomainError("explicit products are limited to k <= 3")
    if rule == "majority" and k % 2 == 0:
        raise DomainError("majority needs odd k")
    base = m.machine
    size = base.state_count**k
    if size > STATE_BUDGET:
        raise DomainError(f"product needs {size} states, budget is {STATE_BUDGET}")
    labels = _product_labels(m.effective_labels, base.state_count, k, rule)
    init = 0
    for _ in range(k):
        init = init * base.state_count + base.initial
    if isinstance(base, Pfa):
        cols = {s: _kron_sparse([base.columns[s]] * k, base.state_count) for s in base.alphabet}
        machine = Pfa(size, base.alphabet, cols, init, labels.accepting)
    else:
        els = {}
        for s in base.alphabet:
            els[s] = tuple(_kron_sparse(list(combo), base.state_count) for combo in product(base.elements[s], repeat=k))
        machine = Qfa(size, base.alphabet, els, init, labels.accepting)
    return MaMachine(machine, m.input_alphabet, m.cert_alphabet, labels, f"{m.name}^{k}", 1, m.sublinear)


def acceptance_text(acc) -> str:
    return format_scalar(acc)

"""Deterministic verifiers and DFAs with several start states.

An MA-DFA can only use its certificate to choose the state in which it
starts reading ``¢ x $``.  Collecting those states yields a multi-entry
DFA, and conversely a multi-entry DFA becomes an MA-DFA whose unary
certificate names the entry.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from ..automata import CENT, DOLLAR, LBRACKET, RBRACKET, MachineError, Pfa
from ..harness import MaMachine, as_word


def dfa_table(pfa: Pfa) -> dict:
    """``{(state, symbol): next}`` for a deterministic machine."""
    if not pfa.is_deterministic:
        raise MachineError("machine is not deterministic")
    table = {}
    for sym in pfa.alphabet:
        for i, col in enumerate(pfa.columns[sym]):
            table[(i, sym)] = col[0][0]
    return table


def pfa_from_table(n: int, alphabet: Sequence[str], table: Mapping, initial: int, accepting) -> Pfa:
    cols = {s: tuple(((table[(i, s)], Fraction(1)),) for i in range(n)) for s in alphabet}
    return Pfa(n, tuple(alphabet), cols, initial, frozenset(accepting))


@dataclass(frozen=True)
class MultiEntryDfa:
    """A DFA over ``Σ ∪ {¢, $}`` that accepts ``x`` when some entry state reads ``¢ x $`` into acceptance."""

    dfa: Pfa
    entries: tuple

    def __post_init__(self):
        if not self.entries:
            raise MachineError("a multi-entry DFA needs at least one entry state")
        if any(not 0 <= e < self.dfa.state_count for e in self.entries):
            raise MachineError("entry state out of range")
        if {LBRACKET, RBRACKET} & set(self.dfa.alphabet):
            raise MachineError("multi-entry DFAs do not read certificate markers")
        dfa_table(self.dfa)

    @property
    def k(self) -> int:
        return len(self.entries)

    @property
    def input_alphabet(self) -> tuple:
        return tuple(s for s in self.dfa.alphabet if s not in (CENT, DOLLAR))

    def run_from(self, state: int, x) -> int:
        table = dfa_table(self.dfa)
        for s in (CENT,) + as_word(x) + (DOLLAR,):
            state = table[(state, s)]
        return state

    def accepts(self, x) -> bool:
        return any(self.run_from(e, x) in self.dfa.accepting for e in self.entries)


def entry_states(m: MaMachine) -> tuple:
    """States reachable from the initial state by ``⌊ Γ* ⌋``, in increasing order."""
    table = dfa_table(m.machine)
    frontier = {table[(m.machine.initial, LBRACKET)]}
    seen = set(frontier)
    while frontier:
        nxt = {table[(q, g)] for q in frontier for g in m.cert_alphabet} - seen
        seen |= nxt
        frontier = nxt
    return tuple(sorted({table[(q, RBRACKET)] for q in seen}))


def madfa_accepts(m: MaMachine, x) -> bool:
    """Exact verified-language membership: some certificate leads to acceptance."""
    return MultiEntryDfa(_input_part(m), entry_states(m)).accepts(x)


def _input_part(m: MaMachine) -> Pfa:
    keep = tuple(s for s in m.machine.alphabet if s in m.input_alphabet or s in (CENT, DOLLAR))
    return Pfa(m.machine.state_count, keep, {s: m.machine.columns[s] for s in keep}, m.machine.initial,
               m.machine.accepting)


def madfa_to_kentry(m: MaMachine) -> MultiEntryDfa:
    """Entry set = states reachable after the certificate; the DFA is the input-reading part."""
    return MultiEntryDfa(_input_part(m), entry_states(m))


def fresh_cert_symbol(alphabet) -> str:
    for g in ("a", "1", "#", "*", "g"):
        if g not in alphabet:
            return g
    raise MachineError("no fresh certificate symbol available")


def kentry_to_madfa(a: MultiEntryDfa, cert_symbol: Optional[str] = None) -> MaMachine:
    """MA-DFA with one extra sink state; the certificate ``g^i`` selects entry ``i`` (counting from 0).

    The certificate symbol is ``a`` unless the DFA reads ``a``, in which
    case a fresh symbol is used so the two phases stay apart.
    """
    g = cert_symbol or fresh_cert_symbol(a.dfa.alphabet)
    if g in a.dfa.alphabet:
        raise MachineError(f"certificate symbol {g!r} is also read by the DFA")
    n = a.dfa.state_count
    sink = n
    old = dfa_table(a.dfa)
    alphabet = (LBRACKET, RBRACKET, g) + tuple(a.dfa.alphabet)
    table = {}
    succ = {e: (a.entries[i + 1] if i + 1 < a.k else sink) for i, e in enumerate(a.entries)}
    for q in range(n + 1):
        for s in alphabet:
            if q == sink:
                table[(q, s)] = sink
            elif s in (LBRACKET, RBRACKET):
                table[(q, s)] = q
            elif s == g:
                table[(q, s)] = succ.get(q, sink)
            else:
                table[(q, s)] = old[(q, s)]
    pfa = pfa_from_table(n + 1, alphabet, table, a.entries[0], a.dfa.accepting)
    return MaMachine(pfa, a.input_alphabet, (g,), None, "kentry-madfa")


def kentry_certificate(a: MultiEntryDfa, x, g: Optional[str] = None) -> Optional[tuple]:
    """Honest certificate: the first entry from which ``x`` is accepted."""
    g = g or fresh_cert_symbol(a.dfa.alphabet)
    for i, e in enumerate(a.entries):
        if a.run_from(e, x) in a.dfa.accepting:
            return (g,) * i
    return None


def random_madfa(rng: random.Random, max_states: int = 6, input_alphabet=("a", "b"), cert_alphabet=("0", "1")) -> MaMachine:
    n = rng.randint(1, max_states)
    alphabet = (LBRACKET, RBRACKET, CENT, DOLLAR) + tuple(cert_alphabet) + tuple(input_alphabet)
    table = {(q, s): rng.randrange(n) for q in range(n) for s in alphabet}
    acc = {q for q in range(n) if rng.random() < 0.4}
    pfa = pfa_from_table(n, alphabet, table, rng.randrange(n), acc)
    return MaMachine(pfa, tuple(input_alphabet), tuple(cert_alphabet), None, "random-madfa")


def random_kentry(rng: random.Random, max_states: int = 6, max_k: int = 3, input_alphabet=("a", "b")) -> MultiEntryDfa:
    n = rng.randint(1, max_states)
    alphabet = (CENT, DOLLAR) + tuple(input_alphabet)
    table = {(q, s): rng.randrange(n) for q in range(n) for s in alphabet}
    acc = {q for q in range(n) if rng.random() < 0.4}
    entries = tuple(sorted(rng.sample(range(n), rng.randint(1, min(max_k, n)))))
    return MultiEntryDfa(pfa_from_table(n, alphabet, table, entries[0], acc), entries)

import random

import pytest

from ma_lab.automata import CENT, DOLLAR, LBRACKET, RBRACKET, MachineError
from ma_lab.harness import MaMachine, enumerate_words, run_ma
from ma_lab.zoo.kentry import (
    MultiEntryDfa,
    entry_states,
    fresh_cert_symbol,
    kentry_certificate,
    kentry_to_madfa,
    madfa_accepts,
    madfa_to_kentry,
    pfa_from_table,
    random_kentry,
    random_madfa,
)


def _brute_madfa(m, x, max_cert):
    return any(run_ma(m, c, x).acc == 1 for c in enumerate_words(m.cert_alphabet, max_cert))


def test_identity_certificate_gives_single_entry():
    # 2 states; certificate symbols loop in place, input a toggles, accept state 1
    alphabet = (LBRACKET, RBRACKET, CENT, DOLLAR, "0", "a")
    table = {}
    for q in range(2):
        for s in alphabet:
            table[(q, s)] = 1 - q if s == "a" else q
    m = MaMachine(pfa_from_table(2, alphabet, table, 0, {1}), ("a",), ("0",))
    k = madfa_to_kentry(m)
    assert k.entries == (0,)
    assert [k.accepts("a" * n) for n in range(4)] == [False, True, False, True]


def test_certificate_bit_selects_start():
    # state 0 reads the certificate: bit 1 moves to state 1; input a is a no-op; accept state 1
    alphabet = (LBRACKET, RBRACKET, CENT, DOLLAR, "0", "1", "a")
    table = {(q, s): q for q in range(3) for s in alphabet}
    table[(0, "1")] = 1
    table[(0, "0")] = 0
    m = MaMachine(pfa_from_table(3, alphabet, table, 0, {1}), ("a",), ("0", "1"))
    k = madfa_to_kentry(m)
    assert k.entries == (0, 1) and k.k <= m.machine.state_count
    assert madfa_accepts(m, "aa")


def test_one_entry_dfa_accepts_with_empty_certificate():
    alphabet = (CENT, DOLLAR, "a")
    table = {(q, s): q for q in range(2) for s in alphabet}
    table[(0, DOLLAR)] = 1
    k = MultiEntryDfa(pfa_from_table(2, alphabet, table, 0, {1}), (0,))
    m = kentry_to_madfa(k)
    assert run_ma(m, "", "aaa").acc == 1
    assert kentry_certificate(k, "aaa") == ()


def test_two_entry_dfa_gives_five_states():
    alphabet = (CENT, DOLLAR, "b")
    table = {(q, s): q for q in range(4) for s in alphabet}
    k = MultiEntryDfa(pfa_from_table(4, alphabet, table, 0, {2}), (0, 2))
    m = kentry_to_madfa(k)
    assert m.machine.state_count == 5
    assert m.cert_alphabet == ("a",)
    assert run_ma(m, "", "bb").acc == 0
    assert run_ma(m, "a", "bb").acc == 1
    assert run_ma(m, "aa", "bb").acc == 0


def test_fresh_symbol_when_dfa_reads_a():
    assert fresh_cert_symbol((CENT, DOLLAR, "a")) == "1"
    k = random_kentry(random.Random(3))
    with pytest.raises(MachineError):
        kentry_to_madfa(k, "a")


@pytest.mark.parametrize("seed", range(10))
def test_round_trips(seed):
    rng = random.Random(seed)
    m = random_madfa(rng)
    k = madfa_to_kentry(m)
    assert k.k <= m.machine.state_count
    for x in enumerate_words(m.input_alphabet, 5):
        assert k.accepts(x) == _brute_madfa(m, x, m.machine.state_count)
    a = random_kentry(rng)
    back = kentry_to_madfa(a)
    assert back.machine.state_count == a.dfa.state_count + 1
    assert madfa_to_kentry(back).entries[:1] == (a.entries[0],)
    for x in enumerate_words(a.input_alphabet, 5):
        assert madfa_accepts(back, x) == a.accepts(x)
        cert = kentry_certificate(a, x)
        assert (cert is not None) == a.accepts(x)
        if cert is not None:
            assert run_ma(back, cert, x).acc == 1


def test_entry_states_sorted_unique():
    m = random_madfa(random.Random(11))
    es = entry_states(m)
    assert list(es) == sorted(set(es))

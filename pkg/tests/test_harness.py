from fractions import Fraction as F
from itertools import product
from math import comb

import pytest

from ma_lab.automata import CENT, DOLLAR, LBRACKET, RBRACKET, MachineError, Pfa, PostLabels
from ma_lab.exactnum import DomainError
from ma_lab.harness import (
    MaMachine,
    VerificationClaim,
    adversarial_max,
    amplify_majority,
    check_claim,
    compose,
    product_amplify,
    run_ma,
    smallest_majority_k,
)
from ma_lab.zoo import get_construction
from ma_lab.zoo.postpfa import equality_gadget, equality_masses


def test_compose():
    assert compose("", "") == (LBRACKET, RBRACKET, CENT, DOLLAR)
    assert "".join(compose("aa", "aaaa")) == "⌊aa⌋¢aaaa$"
    assert "".join(compose("a", "abb")) == "⌊a⌋¢abb$"


def test_compose_checks_alphabets():
    m = get_construction("usquare-mapfa").machine
    with pytest.raises(MachineError):
        compose("b", "a", m)
    with pytest.raises(MachineError):
        compose("a", "$")


def test_run_ma_examples():
    sq = get_construction("usquare-mapfa").machine
    assert run_ma(sq, "aa", "aaaa").acc == F(1, 2)
    assert run_ma(sq, "a", "aaa").acc == F(1, 2) - F(1, 4**8)
    qq = get_construction("usquare-mapostqfa").machine
    assert run_ma(qq, "a", "aa").rej == F(4, 5)


def test_adversarial_usquare_nonmember_never_half():
    sq = get_construction("usquare-mapfa").machine
    res = adversarial_max(sq, "aaa", 6, "distance-to-half")
    assert res.explored == 7
    assert res.best_value > 0


def test_adversarial_finds_honest_certificate():
    sq = get_construction("usquare-mapfa").machine
    res = adversarial_max(sq, "aaaa", 2, "min-distance")
    assert res.best_cert == ("a", "a") and res.best_value == 0 and res.best_acc == F(1, 2)


def test_adversarial_zero_length_tries_only_empty():
    sq = get_construction("usquare-mapfa").machine
    res = adversarial_max(sq, "aa", 0)
    assert res.explored == 1 and res.best_cert == ()
    with pytest.raises(DomainError):
        adversarial_max(sq, "aa", -1)


def test_adversarial_max_acc_matches_brute_force():
    m = get_construction("usquare-mapostqfa").machine
    best = max(run_ma(m, "a" * k, "aaa").acc for k in range(6))
    assert adversarial_max(m, "aaa", 5).best_acc == best


def test_amplified_attack_compares_per_copy():
    m = get_construction("usquare-mapostpfa").machine
    res = adversarial_max(m, "a" * 5, 6)
    brute = max(run_ma(m, c, "a" * 5).acc for n in range(7) for c in product("ab", repeat=n))
    assert res.best_acc == brute
    assert res.best_acc <= F(1, 3)


def test_check_claim_examples():
    sq = get_construction("usquare-mapfa")
    rep = check_claim(sq.machine, VerificationClaim("two-sided", F(1, 2)), sq.member, 16, 4, sq.prover)
    assert rep.ok and len(rep.rows) == 17
    qq = get_construction("usquare-mapostqfa")
    rep = check_claim(qq.machine, VerificationClaim("bounded", F(1, 5)), qq.member, 16, 4, qq.prover)
    assert rep.ok


def test_check_claim_broken_machine_fails_on_members():
    sq = get_construction("usquare-mapfa")
    broken = MaMachine(sq.machine.machine.with_accepting(()), ("a",), ("a",), None, "broken", sublinear=True)
    rep = check_claim(broken, VerificationClaim("two-sided", F(1, 2)), sq.member, 9, 3, sq.prover)
    bad = {r["input"] for r in rep.counterexamples}
    assert bad == {"a", "aaaa", "aaaaaaaaa"}


def test_claim_parsing_and_bounds():
    assert str(VerificationClaim.parse("bounded:1/5")) == "bounded:1/5"
    assert VerificationClaim.parse("exact").param is None
    with pytest.raises(DomainError):
        VerificationClaim.parse("bounded:1/2")
    with pytest.raises(DomainError):
        VerificationClaim.parse("sideways:1/3")


def test_amplify_majority_cases():
    for k in (1, 3, 11):
        assert amplify_majority((F(1), F(1)), k)[0] == F(1, 2)
    assert amplify_majority((F(1), F(0)), 3) == (1, 0)
    assert amplify_majority((F(9), F(8)), 301)[0] > F(2, 3)
    with pytest.raises(DomainError):
        amplify_majority((F(1), F(1)), 4)


def test_amplify_majority_binomial_formula():
    p = F(3, 5)
    direct = sum(comb(5, j) * p**j * (1 - p) ** (5 - j) for j in range(3, 6))
    assert amplify_majority((F(3), F(2)), 5)[0] == direct


def test_smallest_majority_k_is_minimal():
    k = smallest_majority_k(F(9, 17), F(9, 19), F(1, 3))
    assert k % 2 == 1
    acc_yes = amplify_majority((F(9), F(8)), k)[0]
    acc_no = amplify_majority((F(9), F(10)), k)[0]
    assert acc_yes >= F(2, 3) and acc_no <= F(1, 3)
    prev_yes = amplify_majority((F(9), F(8)), k - 2)[0]
    prev_no = amplify_majority((F(9), F(10)), k - 2)[0]
    assert prev_yes < F(2, 3) or prev_no > F(1, 3)


def _gadget_machine():
    pfa, labels = equality_gadget()
    ident = tuple(((i, F(1)),) for i in range(pfa.state_count))
    cols = dict(pfa.columns, **{LBRACKET: ident, RBRACKET: ident})
    wrapped = Pfa(pfa.state_count, pfa.alphabet + (LBRACKET, RBRACKET), cols, pfa.initial, pfa.accepting)
    return MaMachine(wrapped, ("a", "b"), (), labels, "eq")


def test_product_k1_is_same_machine():
    m = _gadget_machine()
    p1 = product_amplify(m, 1)
    for x in ["ab", "aab", "aba", "b"]:
        assert run_ma(p1, "", x).acc == run_ma(m, "", x).acc


@pytest.mark.parametrize("mm,nn", [(1, 1), (2, 1), (1, 3), (0, 0)])
def test_product_k2_all_agree(mm, nn):
    m = _gadget_machine()
    x = "a" * mm + "b" + "a" * nn
    a, r = equality_masses(mm, nn)
    assert run_ma(product_amplify(m, 2, "all-accept-vs-all-reject"), "", x).acc == a * a / (a * a + r * r)


@pytest.mark.parametrize("mm,nn", [(1, 1), (2, 1), (0, 2)])
def test_product_k3_majority_matches_analytic(mm, nn):
    m = _gadget_machine()
    x = "a" * mm + "b" + "a" * nn
    assert run_ma(product_amplify(m, 3), "", x).acc == amplify_majority(equality_masses(mm, nn), 3)[0]


def test_product_budget_and_parity():
    m = _gadget_machine()
    with pytest.raises(DomainError):
        product_amplify(m, 2, "majority")
    with pytest.raises(DomainError):
        product_amplify(m, 4)


def test_machine_rejects_marker_reuse():
    p = Pfa.from_matrices({s: [[1]] for s in (LBRACKET, RBRACKET, CENT, DOLLAR, "a")}, accepting=(0,))
    with pytest.raises(MachineError):
        MaMachine(p, ("a", CENT), ("a",))
    with pytest.raises(DomainError):
        MaMachine(p, ("a",), ("a",), amplification=2)
    MaMachine(p, ("a",), ("a",), PostLabels({0}, set()))

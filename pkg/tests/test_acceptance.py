"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict (printed in the terminal summary)
before asserting.  Run alone with ``pytest tests/test_acceptance.py -q``.
"""

import random
from fractions import Fraction as F
from itertools import combinations_with_replacement, product
from math import isqrt

import pytest

from ma_lab.automata import (
    CENT,
    DOLLAR,
    LBRACKET,
    RBRACKET,
    Pfa,
    Qfa,
    outcome_of,
    pfa_run,
    post_decide,
    validate_qfa,
)
from ma_lab.counter_machine import (
    build_history_verifier,
    even_machine,
    pow2_machine,
    serialize_history,
    tcm_accepts,
    tcm_history,
)
from ma_lab.harness import (
    MaMachine,
    adversarial_max,
    amplify_majority,
    compose,
    enumerate_words,
    product_amplify,
    run_ma,
    smallest_majority_k,
)
from ma_lab.zoo import get_construction
from ma_lab.zoo.alpha import (
    binary_alpha_certificate,
    build_binary_alpha_verifier,
    build_unary_alpha_verifier,
    language_oracle,
    lex_index,
    lex_string,
    pow2_oracle,
)
from ma_lab.zoo.kentry import dfa_table, kentry_to_madfa, madfa_to_kentry, random_kentry, random_madfa
from ma_lab.zoo.postpfa import amplification_for, build_upower_mapostpfa, build_usquare_mapostpfa, equality_gadget
from ma_lab.zoo.qprogram import batch_acceptance
from ma_lab.zoo.subsetsum import SubsetSumInstance, selection_certificate, subsetsum_program
from ma_lab.zoo.unary import build_usquare_mapostqfa, printed_usquare_qfa_elements, usquare_qfa_elements

EPS = F(1, 3)
HALF = F(1, 2)


def _is_square(n):
    return isqrt(n) ** 2 == n


# 1. sublinear MA-PFA for squares

def test_c01_usquare_mapfa(criterion):
    m = get_construction("usquare-mapfa").machine
    members = [i * i for i in range(1, 17)]
    honest = all(run_ma(m, "a" * isqrt(n), "a" * n).acc == HALF for n in members)
    closest = None
    for n in range(65):
        if n >= 1 and _is_square(n):
            continue
        res = adversarial_max(m, "a" * n, 10, "min-distance", HALF)
        if closest is None or res.best_value < closest:
            closest = res.best_value
    ok = honest and closest > 0
    criterion("1 USQUARE MA-PFA", ok, f"16 members at exactly 1/2; min |Acc-1/2| over non-members = {float(closest):.3g}")
    assert ok


# 2. postselecting QFA for squares

def test_c02_usquare_mapostqfa(criterion):
    m = get_construction("usquare-mapostqfa").machine
    members_ok = all(run_ma(m, "a" * isqrt(n), "a" * n).acc == 1 for n in [i * i for i in range(17)])
    sound, equality_ok = True, True
    for n in range(65):
        if _is_square(n):
            continue
        for i in range(11):
            rej = run_ma(m, "a" * i, "a" * n).rej
            sound &= rej >= F(4, 5)
            equality_ok &= (rej == F(4, 5)) == (abs(n - i * i) == 1)
    formula_ok = True
    for t in (1, 2, 3, 5):
        mt = build_usquare_mapostqfa(t).machine
        for i, n in product(range(16), repeat=2):
            d2 = (n - i * i) ** 2
            formula_ok &= run_ma(mt, "a" * i, "a" * n).rej == F(t * t * d2, 1 + t * t * d2)
    ok = members_ok and sound and equality_ok and formula_ok
    criterion("2 USQUARE MA-PostQFA", ok,
              f"members={members_ok} rej>=4/5={sound} equality-at-distance-1={equality_ok} t-formula={formula_ok}")
    assert ok


# 3. superoperator validity

def _mutation_failures(elements):
    """Count single-entry +1/100 mutations that still validate (should be none)."""
    survivors = 0
    for j, e in enumerate(elements):
        for r in range(len(e)):
            for c in range(len(e)):
                mutated = [[row[:] for row in el] for el in elements]
                mutated[j][r][c] = mutated[j][r][c] + F(1, 100)
                if validate_qfa(Qfa.from_matrices({"s": mutated})).ok:
                    survivors += 1
    return survivors


def test_c03_superoperators(criterion):
    printed = printed_usquare_qfa_elements()
    corrected = usquare_qfa_elements(2)
    verbatim_ok = {s: validate_qfa(Qfa.from_matrices({"s": printed[s]})).ok for s in printed}
    used = {s: (printed[s] if s in (LBRACKET, RBRACKET, CENT) else corrected[s]) for s in printed}
    valid = all(validate_qfa(Qfa.from_matrices({"s": els})).ok for els in used.values())
    survivors = sum(_mutation_failures(els) for els in used.values())
    ok = valid and survivors == 0 and all(verbatim_ok[s] for s in (LBRACKET, RBRACKET, CENT))
    bad = sorted(s for s, v in verbatim_ok.items() if not v)
    criterion("3 superoperator validity", ok,
              f"verbatim ⌊ ⌋ ¢ valid; a and $ as used (completed) valid; surviving mutations = {survivors}; "
              f"verbatim {' '.join(bad)} invalid (checked separately)")
    assert ok


@pytest.mark.xfail(strict=True, reason="printed a and $ elements are not trace preserving")
def test_c03_verbatim_a_and_dollar(criterion):
    printed = printed_usquare_qfa_elements()
    ok = all(validate_qfa(Qfa.from_matrices({"s": printed[s]})).ok for s in ("a", DOLLAR))
    criterion("3 verbatim a and $ elements", ok, "sum of E^T E differs from I (expected failure)")
    assert ok


# 4. deterministic verifiers and multi-entry DFAs

def _madfa_brute(m, x):
    table = dfa_table(m.machine)
    for cert in enumerate_words(m.cert_alphabet, m.machine.state_count):
        q = m.machine.initial
        for s in compose(cert, x):
            q = table[(q, s)]
        if q in m.machine.accepting:
            return True
    return False


def _kentry_brute(a, x):
    table = dfa_table(a.dfa)
    for e in a.entries:
        q = e
        for s in (CENT,) + tuple(x) + (DOLLAR,):
            q = table[(q, s)]
        if q in a.dfa.accepting:
            return True
    return False


def test_c04_dfa_round_trip(criterion):
    rng = random.Random(2024)
    mismatches, size_ok = 0, True
    for _ in range(50):
        m = random_madfa(rng)
        k = madfa_to_kentry(m)
        size_ok &= k.k <= m.machine.state_count
        for x in enumerate_words(m.input_alphabet, 8):
            mismatches += k.accepts(x) != _madfa_brute(m, x)
    for _ in range(50):
        a = random_kentry(rng)
        m = kentry_to_madfa(a)
        size_ok &= m.machine.state_count == a.dfa.state_count + 1
        for x in enumerate_words(a.input_alphabet, 8):
            mismatches += _kentry_brute(a, x) != _madfa_brute(m, x)
    ok = mismatches == 0 and size_ok
    criterion("4 MA-DFA <-> k-entry DFA", ok, f"100 random machines, strings up to 8, mismatches = {mismatches}")
    assert ok


# 5. equality gadget and amplification

def test_c05_gadget_and_amplification(criterion):
    pfa, labels = equality_gadget(F(9, 8))
    gadget_ok = True
    for mm, nn in product(range(31), repeat=2):
        v = pfa_run(pfa, (CENT,) + ("a",) * mm + ("b",) + ("a",) * nn + (DOLLAR,))
        acc = v[1] / (v[1] + v[2])
        gadget_ok &= acc == F(9, 17) if mm == nn else acc <= F(9, 19)
    k = smallest_majority_k(F(9, 17), F(9, 19), EPS)
    amp_ok = (amplify_majority((F(9), F(8)), k)[0] >= 1 - EPS and amplify_majority((F(9), F(10)), k)[0] <= EPS
              and (amplify_majority((F(9), F(8)), k - 2)[0] < 1 - EPS or amplify_majority((F(9), F(10)), k - 2)[0] > EPS)
              and amplification_for(EPS) == k)
    ident = tuple(((i, F(1)),) for i in range(pfa.state_count))
    wrapped = Pfa(pfa.state_count, pfa.alphabet + (LBRACKET, RBRACKET),
                  dict(pfa.columns, **{LBRACKET: ident, RBRACKET: ident}), pfa.initial, pfa.accepting)
    gm = MaMachine(wrapped, ("a", "b"), (), labels)
    prod_ok = True
    for mm, nn in [(0, 0), (2, 2), (1, 2), (3, 0)]:
        x = "a" * mm + "b" + "a" * nn
        o = outcome_of(pfa, labels, (CENT,) + tuple(x) + (DOLLAR,))
        prod_ok &= run_ma(product_amplify(gm, 1), "", x).acc == post_decide(o)[0]
        prod_ok &= run_ma(product_amplify(gm, 2, "all-accept-vs-all-reject"), "", x).acc == o.a**2 / (o.a**2 + o.r**2)
        prod_ok &= run_ma(product_amplify(gm, 3), "", x).acc == amplify_majority((o.a, o.r), 3)[0]
    ok = gadget_ok and amp_ok and prod_ok
    criterion("5 equality gadget + amplification", ok,
              f"m,n<=30 exact 9/17 vs <=9/19: {gadget_ok}; smallest odd k for error 1/3 = {k}; products k<=3: {prod_ok}")
    assert ok


# 6. linear-certificate postselecting PFAs

@pytest.fixture(scope="module")
def postpfas():
    return {"usquare": build_usquare_mapostpfa(EPS), "upower": build_upower_mapostpfa(EPS)}


def test_c06_mapostpfa(criterion, postpfas):
    honest = {"usquare": [1, 4, 9, 16, 25], "upower": [1, 2, 4, 8, 16]}
    worst_member, worst_attack = F(1), F(0)
    for key, (cons, _) in postpfas.items():
        for n in honest[key]:
            x = "a" * n
            worst_member = min(worst_member, run_ma(cons.machine, cons.prover(x), x).acc)
        for n in range(13):
            x = "a" * n
            if cons.member(x):
                continue
            res = adversarial_max(cons.machine, x, n + 6)
            if res.best_acc is not None:
                worst_attack = max(worst_attack, res.best_acc)
    ok = worst_member >= 1 - EPS and worst_attack <= EPS
    criterion("6 MA-PostPFA (USQUARE, UPOWER)", ok,
              f"min honest Acc = {float(worst_member):.4f}; max non-member Acc (certs <= n+6) = {float(worst_attack):.4f}")
    assert ok


# 7. base-4 constant verifier, unary

def test_c07_unary_alpha(criterion):
    v = build_unary_alpha_verifier(pow2_oracle(33 + 40), margin=40)
    lows, rejs = [], []
    for n in (1, 2, 4, 8, 16, 32):
        x = "a" * n
        cert = v.prover(x)
        lows.append(v.acceptance_interval(cert, x).lo)
        for j in range(len(cert)):
            bad = list(cert)
            bad[j] = "1" if bad[j] == "0" else "0"
            rejs.append(v.rejection_interval(bad, x).lo)
        for wrong in (cert[:-1], cert[:-2], cert + ("1",), cert + ("0", "1")):
            rejs.append(v.rejection_interval(wrong, x).lo)
    lo, rej = min(lows), min(rejs)
    ok = lo >= F(9, 13) and rej >= F(4, 5)
    sharp = lo - F(9, 13) < F(1, 10**6) and rej - F(4, 5) < F(1, 100)
    criterion("7 unary base-4 verifier (POW2)", ok and sharp,
              f"min Acc lower bound = 9/13 + {float(lo - F(9, 13)):.2e}; min Rej = 4/5 + {float(rej - F(4, 5)):.4f}")
    assert ok and sharp


# 8. subset sum

def test_c08_subsetsum(criterion):
    t = 3
    prog = subsetsum_program(t)
    disagreements = weak = checked = 0
    for size in range(1, 5):
        for items in combinations_with_replacement(range(1, 16), size):
            masks = list(product((False, True), repeat=size))
            for target in range(1, 61):
                inst = SubsetSumInstance(target, items)
                x = inst.render()
                heads = [(LBRACKET,) + selection_certificate(inst, mk) for mk in masks]
                accs = batch_acceptance(prog, heads, (RBRACKET, CENT) + tuple(x) + (DOLLAR,))
                checked += len(accs)
                member = any(sum(b for b, s in zip(items, mk) if s) == target for mk in masks)
                disagreements += (max(accs) == 1) != member
                if not member:
                    weak += sum(1 for a in accs if 1 - a < F(t * t, t * t + 1))
    m = get_construction("subsetsum").machine
    spot = run_ma(m, "101##10##11", "101#10#11").acc == 1 and 1 - run_ma(m, "100##10#11", "100#10#11").acc >= F(9, 10)
    ok = disagreements == 0 and weak == 0 and spot
    criterion("8 SUBSETSUM (t = 3)", ok,
              f"{checked} selection certificates; verdict disagreements = {disagreements}; weak rejections = {weak}")
    assert ok


# 9. base-4 constant verifier, binary

def test_c09_binary_alpha(criterion):
    oracle = language_oracle(lambda s: s.count("a") % 2 == 0, 7 + 40)
    v = build_binary_alpha_verifier(oracle, margin=40)
    words = [w for w in enumerate_words(("a", "b"), 2)]
    members = [w for w in words if v.member(w)]
    low = min(v.acceptance_interval(v.prover(x), x).lo for x in members)
    rng = random.Random(99)
    alphabet = v.cert_alphabet
    worst = F(1)
    for _ in range(100):
        x = rng.choice(members)
        cert = list(v.prover(x))
        while True:
            kind = rng.choice(("sub", "ins", "del"))
            pos = rng.randrange(len(cert) + (kind == "ins"))
            bad = cert[:]
            if kind == "sub":
                bad[pos] = rng.choice([s for s in alphabet if s != cert[pos]])
            elif kind == "ins":
                bad.insert(pos, rng.choice(alphabet))
            else:
                del bad[pos]
            if bad != cert:
                break
        worst = min(worst, v.rejection_interval(bad, x).lo)
    ok = low >= F(9, 13) and worst >= F(4, 5)
    criterion("9 binary base-4 verifier", ok,
              f"{len(members)} members with |x|<=2, min Acc lower bound = {float(low):.4f}; "
              f"100 corruptions, min Rej = {float(worst):.4f}")
    assert ok


# 10. counter machine histories

@pytest.fixture(scope="module")
def history_verifiers():
    return {name: (mk(), build_history_verifier(mk(), EPS)) for name, mk in (("even", even_machine), ("pow2", pow2_machine))}


def _amplified(o, k):
    if o.a + o.r == 0:
        return F(0)
    return amplify_majority((o.a, o.r), k)[0]


def test_c10_histories(criterion, history_verifiers):
    rng = random.Random(10)
    verdict_ok, worst_corrupt, cross_ok = True, F(0), True
    for name, (tcm, (cons, ver)) in history_verifiers.items():
        k = cons.machine.amplification
        certs = {}
        for n in range(13):
            x = "a" * n
            cert = serialize_history(tcm_history(tcm, x))
            certs[x] = cert
            acc = _amplified(ver.outcome(cert, x), k)
            verdict_ok &= acc >= 1 - EPS if tcm_accepts(tcm, x) else acc <= EPS
        alphabet = cons.machine.cert_alphabet
        corrupted = []
        for _ in range(200):
            x = rng.choice(sorted(certs))
            cert = list(certs[x])
            while True:
                kind = rng.choice(("sub", "ins", "del"))
                pos = rng.randrange(len(cert) + (kind == "ins"))
                bad = cert[:]
                if kind == "sub":
                    bad[pos] = rng.choice([s for s in alphabet if s != cert[pos]])
                elif kind == "ins":
                    bad.insert(pos, rng.choice(alphabet))
                else:
                    del bad[pos]
                if bad != cert:
                    break
            corrupted.append((bad, x))
            worst_corrupt = max(worst_corrupt, _amplified(ver.outcome(bad, x), k))
        # the closed-form evaluator must agree with the compiled machine
        mm = cons.machine
        for bad, x in corrupted[:5] + [(certs["aa"], "aa")]:
            cross_ok &= outcome_of(mm.machine, mm.labels, compose(bad, x)) == ver.outcome(bad, x)
    ok = verdict_ok and worst_corrupt <= EPS and cross_ok
    criterion("10 counter-machine histories (EVEN, POW2)", ok,
              f"honest verdicts >= 2/3 for |x|<=12: {verdict_ok}; 400 corruptions, max Acc = {float(worst_corrupt):.4f}; "
              f"evaluator = machine: {cross_ok}")
    assert ok


# structural certificate lengths

def test_certificate_length_classes(criterion, postpfas):
    checks = {}
    sq = get_construction("usquare-mapfa")
    checks["sqrt"] = all(len(sq.prover("a" * n)) == isqrt(n - 1) + 1 for n in range(1, 257) if sq.member("a" * n))
    logs = [get_construction(name) for name in ("upower", "upower-mapostqfa")]
    checks["log"] = all(len(c.prover("a" * (2**i))) == i for c in logs for i in range(9))
    lin = True
    for cons, _ in postpfas.values():
        for n in range(1, 200):
            cert = cons.prover("a" * n)
            if cert is not None:
                lin &= n - 2 <= len(cert) <= 2 * n
    ua = build_unary_alpha_verifier(pow2_oracle(80))
    lin &= all(len(ua.prover("a" * n)) == n + 1 for n in (1, 2, 4, 8, 16, 32))
    checks["linear"] = lin
    oracle = language_oracle(lambda s: s.count("a") % 2 == 0, 64)
    ba = build_binary_alpha_verifier(oracle)
    expo = True
    for x in enumerate_words(("a", "b"), 4):
        if not ba.member(x):
            continue
        idx = lex_index(x)
        expected = sum(len(lex_string(i)) + 2 for i in range(1, idx + 1)) + idx - 1
        expo &= len(binary_alpha_certificate(x, oracle)) == expected and idx >= 2 ** len(x)
    checks["exponential"] = expo
    ok = all(checks.values())
    criterion("certificate length classes", ok, ", ".join(f"{k}={v}" for k, v in checks.items()))
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otlab.core import BitString
from otlab.crepeau import (
    CrepeauConfig,
    crepeau_attack_bound,
    crepeau_attack_closed_form,
    crepeau_attack_exact,
    run_crepeau,
)
from otlab.errors import InvalidParameterError
from otlab.rng import Stream

M0 = BitString.from_int(0x0123_4567, 32)
M1 = BitString.from_int(0x89AB_CDEF, 32)

# 1 - C(195, 100) / C(200, 100), 50-digit mpmath
CLOSED_S5_N300 = 0.9703083947657067


class TestConfig:
    def test_validation(self):
        for args in [(301,), (0,), (300, 301), (300, -1), (300, 0, 65)]:
            with pytest.raises(InvalidParameterError):
                CrepeauConfig(*args)


class TestRun:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**64 - 1), st.integers(0, 1), st.integers(0, 12))
    def test_transcript_invariants(self, seed, choice, s):
        cfg = CrepeauConfig(60, s)
        t = run_crepeau(cfg, (M0, M1), choice, seed)
        assert len(t.garbage) == s
        if t.aborted:
            assert t.received < cfg.n
            return
        U, V = set(t.U), set(t.V)
        assert len(U) == len(V) == cfg.n and not U & V
        assert t.announced == ((t.U, t.V) if choice == 0 else (t.V, t.U))
        assert t.bob_output == (M0, M1)[choice]
        # garbage is never in Bob's known set
        assert not U & set(t.garbage)
        expected = any((g in t.announced[0]) != (g in t.announced[1]) for g in t.garbage)
        assert t.alice_identified_choice == expected

    def test_no_garbage_no_identification(self):
        cfg = CrepeauConfig(60, 0)
        for seed in range(100):
            t = run_crepeau(cfg, (M0, M1), seed & 1, seed)
            assert not t.alice_identified_choice

    def test_all_garbage_aborts(self):
        cfg = CrepeauConfig(30, 30)
        assert all(run_crepeau(cfg, (M0, M1), 0, s).aborted for s in range(20))

    def test_message_length_checked(self):
        with pytest.raises(InvalidParameterError):
            run_crepeau(CrepeauConfig(30), (BitString((1,)), M1), 0)

    def test_unordered_pair_is_choice_invariant(self):
        cfg = CrepeauConfig(60)
        for seed in range(50):
            a = run_crepeau(cfg, (M0, M1), 0, seed)
            b = run_crepeau(cfg, (M0, M1), 1, seed)
            if not a.aborted:
                assert set(a.announced) == set(b.announced)
                assert a.announced == b.announced[::-1]

    def test_attack_rate_monotone_in_s(self):
        cfg_n, trials = 60, 800
        rates = []
        for s in range(0, 11, 2):
            cfg = CrepeauConfig(cfg_n, s)
            done = [run_crepeau(cfg, (M0, M1), k & 1, k) for k in range(trials)]
            done = [t for t in done if not t.aborted]
            rates.append(sum(t.alice_identified_choice for t in done) / len(done))
        for lo, hi in zip(rates, rates[1:]):
            assert hi >= lo - 3 * math.sqrt(max(lo * (1 - lo), 1e-4) / trials)


class TestBounds:
    def test_lower_bound_values(self):
        assert crepeau_attack_bound(0) == 0
        assert crepeau_attack_bound(1) == pytest.approx(1 / 3, rel=1e-15)
        assert crepeau_attack_bound(5) == pytest.approx(1 - 32 / 243, rel=1e-15)
        assert crepeau_attack_bound(5) == pytest.approx(0.8683127572016461, rel=1e-12)

    def test_closed_form(self):
        assert crepeau_attack_closed_form(CrepeauConfig(300, 5)) == pytest.approx(CLOSED_S5_N300, rel=1e-12)
        assert crepeau_attack_closed_form(CrepeauConfig(300, 0)) == 0.0

    @pytest.mark.parametrize("s", [0, 1, 2, 5, 10])
    def test_lower_bound_direction(self, s):
        # 1 - (2/3)^s bounds the attack success from below, not above
        assert crepeau_attack_closed_form(CrepeauConfig(300, s)) >= float(crepeau_attack_bound(s))


class TestExactOracle:
    def test_zero_garbage(self):
        est = crepeau_attack_exact(CrepeauConfig(300, 0), 1000, seed=1)
        assert est.rate == 0.0

    def test_all_garbage(self):
        est = crepeau_attack_exact(CrepeauConfig(300, 300), 1000, seed=1)
        assert est.rate is None and est.abort_rate == 1.0

    def test_s5_precision(self):
        est = crepeau_attack_exact(CrepeauConfig(300, 5), 100_000, seed=7)
        assert est.stderr <= 0.002
        assert abs(est.rate - CLOSED_S5_N300) <= 4 * est.stderr

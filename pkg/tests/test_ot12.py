import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otlab.ech import alice_battery
from otlab.errors import InvalidParameterError
from otlab.ot12 import (
    AbortStage,
    AliceKind,
    AliceOt12Strategy,
    BobKind,
    BobOt12Strategy,
    Ot12Config,
    alice_bound_value,
    bob_bound_value,
    build_pairs,
    failure_bound_value,
    ot12_alice_bound,
    ot12_bob_bound,
    ot12_failure_bound,
    receive_threshold,
    run_ot12,
)
from otlab.rng import Stream

CFG = Ot12Config(3, 3.0, 200, 0.45, 2)
BOTH_BITS = BobOt12Strategy(BobKind.BOTH_BITS)


def three_sigma(p, n):
    p = min(max(p, 0.0), 1.0)
    return 3 * math.sqrt(p * (1 - p) / n)


class TestReceiveThreshold:
    @pytest.mark.parametrize("N, beta, n", [(100, 2, 40), (100, 0, 50), (64, 1, 28), (200, 3, 79)])
    def test_examples(self, N, beta, n):
        assert receive_threshold(N, beta) == n

    def test_precondition(self):
        with pytest.raises(InvalidParameterError):
            receive_threshold(100, 5.01)


class TestConfig:
    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            Ot12Config(0, 1.0, 100, 0.4, 2)
        with pytest.raises(InvalidParameterError):
            Ot12Config(1, 6.0, 100, 0.4, 2)  # beta > sqrt(N)/2
        with pytest.raises(InvalidParameterError):
            Ot12Config(1, 1.0, 100, 0.5, 2)

    def test_acceptance_config_is_constructible(self):
        assert CFG.n_pairs == 79
        assert not CFG.satisfies_beta_bound2()
        assert Ot12Config(3, 3.0, 400, 0.45, 2).satisfies_beta_bound2()


class TestPairs:
    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**64 - 1), st.integers(0, 1), st.sampled_from(list(BobKind)))
    def test_pairlist_invariants(self, seed, choice, kind):
        N, n = 200, 79
        received = Stream(seed).coins(N)
        if received.sum() < n:
            return
        pl, known = build_pairs(received, n, choice, BobOt12Strategy(kind), Stream(seed + 1))
        flat = pl.pairs.ravel()
        assert len(set(flat.tolist())) == 2 * n
        assert flat.min() >= 1 and flat.max() <= N
        unflipped = pl.unflipped()
        assert np.array_equal(unflipped[:, choice], known)
        if kind is BobKind.HONEST:
            assert received[known - 1].all()
        # flips only reorder each pair
        assert np.array_equal(np.sort(pl.pairs, axis=1), np.sort(unflipped, axis=1))

    def test_both_bits_packs_received_pairs(self):
        N, n = 200, 79
        received = Stream(8).coins(N)
        pl, _ = build_pairs(received, n, 0, BOTH_BITS, Stream(9))
        u = pl.unflipped()
        full = int((received[u[:, 0] - 1] & received[u[:, 1] - 1]).sum())
        assert full == min(n, int(received.sum()) // 2)


class TestRunOt12:
    @pytest.mark.parametrize("b0, b1, B", [(b0, b1, B) for b0 in (0, 1) for b1 in (0, 1) for B in (0, 1)])
    def test_correctness(self, b0, b1, B, backend):
        for seed in range(150):
            r = run_ot12(CFG, (b0, b1), B, seed=seed)
            if not r.aborted:
                assert r.bob_output == (b0, b1)[B]
                assert not r.bob_learned_both and not r.alice_learned_choice

    def test_abort_bookkeeping(self):
        for seed in range(200):
            r = run_ot12(CFG, (1, 0), 1, seed=seed)
            if r.aborted:
                assert r.bob_output is None
                assert r.abort_round == len(r.per_round)
                assert r.abort_stage in (AbortStage.THRESHOLD, AbortStage.ECH_ABORT)
            else:
                assert len(r.per_round) == CFG.c

    def test_threshold_abort(self):
        # all garbage: Bob receives nothing
        alice = AliceOt12Strategy.garbage_inject(200)
        r = run_ot12(CFG, (0, 1), 0, alice, seed=1)
        assert r.aborted and r.abort_stage is AbortStage.THRESHOLD and r.abort_round == 1
        assert r.per_round[0].received == 0

    def test_leak_flag_is_a_transcript_audit(self):
        alice = AliceOt12Strategy.garbage_inject(42)
        hits = 0
        for seed in range(300):
            r = run_ot12(CFG, (0, 1), seed & 1, alice, seed=seed)
            audit = any(rd.garbage_in_key for rd in r.per_round)
            assert r.alice_learned_choice == audit
            for rd in r.per_round:
                if rd.key is not None:
                    # garbage is never received, so a leaky key is never both-known
                    assert not (rd.garbage_in_key and rd.both_known)
            hits += audit
        assert hits > 0

    def test_determinism_and_records(self, backend):
        a = run_ot12(CFG, (1, 1), 0, seed=123).dumps()
        assert a == run_ot12(CFG, (1, 1), 0, seed=123).dumps()
        recs = [json.loads(line) for line in a.splitlines()]
        assert recs[-1]["type"] == "result"
        assert {"received", "h", "k_h", "ciphertexts"} <= set(recs[0])

    def test_input_validation(self):
        with pytest.raises(InvalidParameterError):
            run_ot12(CFG, (0, 2), 0)
        with pytest.raises(InvalidParameterError):
            run_ot12(CFG, (0, 1), 0, AliceOt12Strategy.garbage_inject(201))
        with pytest.raises(InvalidParameterError):
            AliceOt12Strategy(AliceKind.HONEST, garbage=3)

    def test_choice_does_not_change_alice_view_of_aborts(self):
        # paired seeds: the receipt coins and ECH coins do not depend on B
        for seed in range(100):
            r0 = run_ot12(CFG, (0, 1), 0, seed=seed)
            r1 = run_ot12(CFG, (0, 1), 1, seed=seed)
            assert r0.aborted == r1.aborted

    def test_abort_rate_increases_with_garbage(self):
        n = 600
        rates = []
        for g in (0, 10, 30, 60):
            alice = AliceOt12Strategy.garbage_inject(g) if g else AliceOt12Strategy()
            rates.append(sum(run_ot12(CFG, (0, 0), 0, alice, seed=s).aborted for s in range(n)) / n)
        for lo, hi in zip(rates, rates[1:]):
            assert hi >= lo - three_sigma(lo, n)
        assert rates[-1] > rates[0]


class TestBoundFormulas:
    def test_failure_example(self):
        # N xi^2 2^(-x-2) = 8 with x=2, xi=1/4: N = 8 * 16 * 16
        assert failure_bound_value(1, 3, 2048, 0.25, 2) == pytest.approx(0.011779921794047330, rel=1e-12)
        assert failure_bound_value(2, 3, 2048, 0.25, 2) == pytest.approx(2 * failure_bound_value(1, 3, 2048, 0.25, 2), rel=1e-15)

    def test_bob_examples(self):
        assert bob_bound_value(3, 0.0, 2) == pytest.approx((2 / 3) ** 3, rel=1e-15)
        assert bob_bound_value(2, 1 / 16, 2) == pytest.approx(0.75820260076819844, rel=1e-12)
        assert bob_bound_value(2, 0.06, 2) > bob_bound_value(2, 0.05, 2)
        assert bob_bound_value(3, 0.01, 2) < bob_bound_value(2, 0.01, 2)

    def test_alice_examples(self):
        assert alice_bound_value(1, 1, 16, 4) == 0.25
        assert alice_bound_value(1, 1, 16, 5) == 0.125
        assert alice_bound_value(3, 2, 100, 4) == 3.75

    def test_config_wrappers(self):
        assert ot12_failure_bound(CFG).applicable
        assert not ot12_bob_bound(CFG).applicable
        assert ot12_alice_bound(CFG).clamped() == 1.0
        wide = Ot12Config(1, 1.0, 100, 0.1, 2)  # xi = 0.4 > 1/(2x)
        assert not ot12_failure_bound(wide).applicable


class TestAdversaries:
    def test_both_bits_bob_within_bound(self):
        cfg = Ot12Config(3, 3.0, 400, 0.45, 2)
        b = ot12_bob_bound(cfg)
        assert b.applicable
        n = 3000
        hits = sum(run_ot12(cfg, (0, 1), 0, bob=BOTH_BITS, seed=s).bob_learned_both for s in range(n))
        assert hits / n <= b.clamped() + three_sigma(b.clamped(), n)
        assert hits > 0

    def test_both_bits_bob_never_decodes_wrongly(self):
        # he may land on a pair he holds no index of; then he has no output
        outputs = set()
        for seed in range(100):
            r = run_ot12(CFG, (1, 0), 0, bob=BOTH_BITS, seed=seed)
            if not r.aborted:
                outputs.add(r.bob_output)
        assert outputs <= {1, None} and 1 in outputs

    def test_garbage_inject_with_ech_strategy(self):
        alice = AliceOt12Strategy.garbage_inject(42, alice_battery(0.45)["honest_prefer_a"])
        n = 500
        leaks = sum(run_ot12(CFG, (0, 1), s & 1, alice, seed=s).alice_learned_choice for s in range(n))
        b = ot12_alice_bound(CFG).clamped()
        assert leaks / n <= b + three_sigma(b, n)

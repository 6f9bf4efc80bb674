"""1-out-of-2 OT of single bits from the flawed all-or-nothing OT.

Each of ``c`` outer rounds handles one XOR share of each secret bit. Alice
pushes ``bigN`` random bits through the primitive; Bob needs at least
``receive_threshold`` of them, publishes that many index pairs with one known
index per pair (orientation hidden by secret flips), and the element choosing
protocol picks one pair. Alice masks share ``j`` of ``b0`` and ``b1`` with
the two bits of the chosen pair; Bob unmasks the side he knows.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from otlab import kernels
from otlab import rng as _rng
from otlab.rng import Stream
from otlab.bound import Bound
from otlab.core import DEFAULT_ELL, split_bit, xor_combine
from otlab.ech import (
    HONEST_ALICE,
    AliceEchStrategy,
    BobEchStrategy,
    EchConfig,
    EchSets,
    run_ech,
)
from otlab.errors import InvalidParameterError


@dataclass(frozen=True)
class Ot12Config:
    """Protocol parameters.

    Only ``beta <= sqrt(bigN)/2`` is enforced here, since the receive
    threshold needs it; ``beta <= sqrt(bigN)/5`` is a precondition of
    :func:`ot12_bob_bound` and is reported there.
    """

    c: int
    beta: float
    bigN: int
    alpha: float
    rounds_x: int
    ell: int = DEFAULT_ELL

    def __post_init__(self):
        if self.c < 1:
            raise InvalidParameterError("c must be >= 1")
        if self.bigN < 1:
            raise InvalidParameterError("bigN must be >= 1")
        if self.beta < 0:
            raise InvalidParameterError("beta must be >= 0")
        if self.beta > math.sqrt(self.bigN) / 2:
            raise InvalidParameterError("beta must satisfy beta <= sqrt(bigN)/2")
        if receive_threshold(self.bigN, self.beta) < 1:
            raise InvalidParameterError("receive threshold must be >= 1")
        EchConfig(self.alpha, self.rounds_x, 1, self.ell)  # validates the nested parameters

    @property
    def xi(self) -> float:
        return 0.5 - self.alpha

    @property
    def n_pairs(self) -> int:
        return receive_threshold(self.bigN, self.beta)

    def ech_config(self) -> EchConfig:
        return EchConfig(self.alpha, self.rounds_x, self.n_pairs, self.ell)

    def satisfies_beta_bound2(self) -> bool:
        return self.beta <= math.sqrt(self.bigN) / 5


def receive_threshold(bigN: int, beta: float) -> int:
    """``ceil(bigN/2 - beta*sqrt(bigN)/2)``: fewest receipts Bob may continue with."""
    if bigN < 1 or beta < 0 or beta > math.sqrt(bigN) / 2:
        raise InvalidParameterError("need bigN >= 1 and 0 <= beta <= sqrt(bigN)/2")
    # the 1e-9 keeps exact integers (e.g. 50 - 10) from rounding up
    return math.ceil(bigN / 2 - beta * math.sqrt(bigN) / 2 - 1e-9)


class AliceKind(enum.Enum):
    HONEST = "honest"
    GARBAGE_INJECT = "garbage_inject"


@dataclass(frozen=True)
class AliceOt12Strategy:
    """``GARBAGE_INJECT`` sends ``garbage`` uniformly placed garbage bits per round."""

    kind: AliceKind = AliceKind.HONEST
    garbage: int = 0
    ech: AliceEchStrategy = HONEST_ALICE

    def __post_init__(self):
        if self.garbage < 0:
            raise InvalidParameterError("garbage count must be >= 0")
        if self.kind is AliceKind.HONEST and self.garbage:
            raise InvalidParameterError("an honest Alice sends no garbage")

    @classmethod
    def garbage_inject(cls, g: int, ech: AliceEchStrategy = HONEST_ALICE) -> "AliceOt12Strategy":
        return cls(AliceKind.GARBAGE_INJECT, g, ech)


class BobKind(enum.Enum):
    HONEST = "honest"
    BOTH_BITS = "both_bits"


@dataclass(frozen=True)
class BobOt12Strategy:
    """``BOTH_BITS`` packs as many fully received pairs as possible and steers
    the element choosing protocol towards them."""

    kind: BobKind = BobKind.HONEST

    @property
    def ech(self) -> BobEchStrategy:
        return BobEchStrategy.PREFER_WIN_B if self.kind is BobKind.BOTH_BITS else BobEchStrategy.HONEST


HONEST_BOB = BobOt12Strategy()
HONEST_ALICE_OT12 = AliceOt12Strategy()


class AbortStage(enum.Enum):
    THRESHOLD = "threshold"
    ECH_ABORT = "ech_abort"


@dataclass(frozen=True)
class PairList:
    """Published pairs (after flips) and Bob's secret flip bits.

    Indices are labels ``1..bigN``; row ``i`` of ``pairs`` is pair ``i+1``.
    """

    pairs: np.ndarray  # (n, 2) int64, as published
    flips: np.ndarray  # (n,) uint8

    def unflipped(self) -> np.ndarray:
        out = self.pairs.copy()
        sw = self.flips.astype(bool)
        out[sw] = out[sw][:, ::-1]
        return out


@dataclass(frozen=True)
class Ot12Round:
    received: int
    garbage: int
    pair: Optional[int] = None  # h, label in 1..n
    flip: Optional[int] = None  # k_h
    key: Optional[tuple[int, int]] = None  # final ordered (u, v)
    ciphertexts: Optional[tuple[int, int]] = None
    known_first: Optional[bool] = None  # Bob's known index in slot 0 of published pair 1
    both_known: bool = False
    garbage_in_key: bool = False
    share: Optional[int] = None  # share of b_B that Bob recovered

    def to_record(self, index: int) -> dict:
        return {
            "type": "round",
            "round": index,
            "received": self.received,
            "garbage": self.garbage,
            "h": self.pair,
            "k_h": self.flip,
            "key": list(self.key) if self.key is not None else None,
            "ciphertexts": list(self.ciphertexts) if self.ciphertexts is not None else None,
            "known_first": self.known_first,
            "both_known": self.both_known,
            "garbage_in_key": self.garbage_in_key,
        }


@dataclass(frozen=True)
class Ot12Result:
    aborted: bool
    abort_stage: Optional[AbortStage]
    abort_round: Optional[int]
    bob_output: Optional[int]
    bob_learned_both: bool
    alice_learned_choice: bool
    per_round: tuple[Ot12Round, ...] = field(default=())

    def to_records(self) -> list[dict]:
        records = [r.to_record(i) for i, r in enumerate(self.per_round, start=1)]
        records.append(
            {
                "type": "result",
                "aborted": self.aborted,
                "abort_stage": self.abort_stage.value if self.abort_stage else None,
                "abort_round": self.abort_round,
                "bob_output": self.bob_output,
                "bob_learned_both": self.bob_learned_both,
                "alice_learned_choice": self.alice_learned_choice,
            }
        )
        return records

    def dumps(self) -> str:
        return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in self.to_records())


def build_pairs(
    received: np.ndarray,
    n: int,
    choice: int,
    bob: BobOt12Strategy,
    rng: Stream,
) -> tuple[PairList, np.ndarray]:
    """Bob's step-5 pair list and, per unflipped pair, the slot he knows.

    Honest Bob puts a uniform ``n``-subset of his received indices in slot
    ``choice`` and a uniform ``n``-subset of all other indices in the other
    slot. BothBits Bob lists his received indices first, in random order,
    followed by the rest, and cuts that list into consecutive pairs, so as
    many pairs as possible are fully received.

    Returns the pair list and an (n,) int array of the label Bob treats as
    his known index in each pair (slot ``choice`` before flipping).
    """
    N = received.shape[0]
    keys_a = _rng.raw(rng, N)
    keys_b = _rng.raw(rng, N)
    flips = _rng.coins(rng, n)
    if bob.kind is BobKind.HONEST:
        known = kernels.select_top(received, None, keys_a, n)
        rest = np.ones(N, dtype=np.uint8)
        rest[known] = 0
        partner = kernels.select_top(rest, None, keys_b, n)
    else:
        order = kernels.select_top(np.ones(N, dtype=np.uint8), received, keys_a, 2 * n)
        first, second = order[0::2], order[1::2]
        # keep a received index in slot `choice` where the pair has one
        swap = (received[first] == 0) & (received[second] == 1)
        known = np.where(swap, second, first)
        partner = np.where(swap, first, second)
    known = known + 1
    partner = partner + 1
    unflipped = np.empty((n, 2), dtype=np.int64)
    unflipped[:, choice] = known
    unflipped[:, 1 - choice] = partner
    pairs = unflipped.copy()
    sw = flips.astype(bool)
    pairs[sw] = pairs[sw][:, ::-1]
    return PairList(pairs, flips), known


def run_ot12(
    cfg: Ot12Config,
    secrets: tuple[int, int],
    choice: int,
    alice: AliceOt12Strategy = HONEST_ALICE_OT12,
    bob: BobOt12Strategy = HONEST_BOB,
    seed: int = 0,
) -> Ot12Result:
    b0, b1 = secrets
    if b0 not in (0, 1) or b1 not in (0, 1) or choice not in (0, 1):
        raise InvalidParameterError("secrets and choice must be bits")
    if alice.garbage > cfg.bigN:
        raise InvalidParameterError("garbage count exceeds bigN")

    share_rng = _rng.make_rng(_rng.derive_seed(seed, 0))
    shares0 = split_bit(b0, cfg.c, share_rng).shares
    shares1 = split_bit(b1, cfg.c, share_rng).shares
    n = cfg.n_pairs
    ech_cfg = cfg.ech_config()
    N = cfg.bigN

    rounds: list[Ot12Round] = []
    recovered: list[int] = []
    alice_learned = False
    all_both = True
    for j in range(cfg.c):
        round_seed = _rng.derive_seed(seed, j + 1)
        alice_rng = _rng.make_rng(_rng.derive_seed(round_seed, 0))
        coin_rng = _rng.make_rng(_rng.derive_seed(round_seed, 1))
        bob_rng = _rng.make_rng(_rng.derive_seed(round_seed, 2))

        r_bits = _rng.coins(alice_rng, N)
        garbage = np.zeros(N, dtype=np.uint8)
        if alice.garbage:
            sel = kernels.select_top(np.ones(N, dtype=np.uint8), None, _rng.raw(alice_rng, N), alice.garbage)
            garbage[sel] = 1
        received, _ = kernels.transfer(garbage ^ np.uint8(1), _rng.raw(coin_rng, N))
        n_recv = int(received.sum())
        if n_recv < n:
            rounds.append(Ot12Round(n_recv, alice.garbage))
            return _finish(rounds, AbortStage.THRESHOLD, j + 1, None, False, alice_learned)

        pl, known = build_pairs(received, n, choice, bob, bob_rng)
        unflipped = pl.unflipped()
        u_idx, v_idx = unflipped[:, 0] - 1, unflipped[:, 1] - 1
        win_a = garbage[u_idx] | garbage[v_idx]
        win_b = received[u_idx] & received[v_idx]
        sets = EchSets.from_masks(win_a, win_b)
        t = run_ech(ech_cfg, sets, alice.ech, bob.ech, _rng.derive_seed(round_seed, 3))
        known_first = bool(pl.pairs[0, 0] == known[0])
        if t.aborted:
            rounds.append(Ot12Round(n_recv, alice.garbage, known_first=known_first))
            return _finish(rounds, AbortStage.ECH_ABORT, j + 1, None, False, alice_learned)

        h = t.chosen
        k_h = int(pl.flips[h - 1])
        u, v = (int(z) for z in unflipped[h - 1])
        ct = (shares0[j] ^ int(r_bits[u - 1]), shares1[j] ^ int(r_bits[v - 1]))
        mine = (u, v)[choice]
        share = ct[choice] ^ int(r_bits[mine - 1]) if received[mine - 1] else None
        both = bool(received[u - 1] and received[v - 1])
        leak = bool(garbage[u - 1] or garbage[v - 1])
        alice_learned |= leak
        all_both &= both
        if share is not None:
            recovered.append(share)
        rounds.append(
            Ot12Round(n_recv, alice.garbage, h, k_h, (u, v), ct, known_first, both, leak, share)
        )

    output = xor_combine(recovered) if len(recovered) == cfg.c else None
    # an honest Bob unmasks only his own side, whatever else he happens to hold;
    # per-round ``both_known`` still records the raw fact
    cheated = all_both and bob.kind is BobKind.BOTH_BITS
    return _finish(rounds, None, None, output, cheated, alice_learned)


def _finish(rounds, stage, round_no, output, both, alice_learned) -> Ot12Result:
    return Ot12Result(
        aborted=stage is not None,
        abort_stage=stage,
        abort_round=round_no,
        bob_output=output,
        bob_learned_both=both and stage is None,
        alice_learned_choice=alice_learned,
        per_round=tuple(rounds),
    )


def failure_bound_value(c: float, beta: float, bigN: float, xi: float, x: float) -> float:
    return c * (math.exp(-(beta**2) / 2) + 2 * math.exp(-bigN * xi**2 * 2.0 ** (-x - 2)))


def bob_bound_value(c: float, xi: float, x: float) -> float:
    return (1 - 2 * xi) ** (-c * x) * (2 / 3) ** c


def alice_bound_value(c: float, beta: float, bigN: float, x: float) -> float:
    return c * beta * math.sqrt(bigN) * 2.0**-x


def ot12_failure_bound(cfg: Ot12Config) -> Bound:
    """Honest abort bound ``c (exp(-beta^2/2) + 2 exp(-N xi^2 2^(-x-2)))``.

    Flagged not applicable unless ``xi <= 1/(2x)``.
    """
    value = failure_bound_value(cfg.c, cfg.beta, cfg.bigN, cfg.xi, cfg.rounds_x)
    if cfg.xi > 1 / (2 * cfg.rounds_x):
        return Bound(value, applicable=False, note="xi > 1/(2x)")
    return Bound(value)


def ot12_bob_bound(cfg: Ot12Config) -> Bound:
    """``(1 - 2 xi)^(-c x) (2/3)^c``; flagged unless ``beta <= sqrt(N)/5``."""
    value = bob_bound_value(cfg.c, cfg.xi, cfg.rounds_x)
    if not cfg.satisfies_beta_bound2():
        return Bound(value, applicable=False, note="beta > sqrt(N)/5")
    return Bound(value)


def ot12_alice_bound(cfg: Ot12Config) -> Bound:
    """``c beta sqrt(N) 2^-x``, raw."""
    return Bound(alice_bound_value(cfg.c, cfg.beta, cfg.bigN, cfg.rounds_x))

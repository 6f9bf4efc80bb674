"""Element choosing protocol over the flawed OT primitive.

Parties share a labelled set ``1..n_T`` with disjoint winning subsets for
Alice and Bob. Each round Alice sends one fresh message per surviving label
through the all-or-nothing OT; Bob publishes ``keep_count`` labels whose
messages he received and those labels survive. After ``rounds_x`` rounds
Alice picks the outcome among the survivors.

Strategies plug in per round. Alice decides which surviving labels she sends
honestly (the rest are garbage) and how she makes the final pick; Bob decides
which of his received labels to publish.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from otlab import kernels
from otlab import rng as _rng
from otlab.rng import Stream
from otlab.bound import Bound
from otlab.core import DEFAULT_ELL
from otlab.errors import InvalidParameterError, ParameterRangeError

EXACT_TAIL_MAX = 10_000


def keep_count(current_size: int, alpha: float) -> int:
    """Number of labels Bob must publish out of ``current_size``.

    ``floor(alpha * current_size)``, but never 0.
    """
    if current_size < 1:
        raise InvalidParameterError("current_size must be >= 1")
    # the 1e-9 keeps products like 0.35 * 20 from flooring to 6
    return max(1, math.floor(alpha * current_size + 1e-9))


@dataclass(frozen=True)
class EchConfig:
    alpha: float
    rounds_x: int
    n_T: int
    ell: int = DEFAULT_ELL

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5:
            raise InvalidParameterError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if self.rounds_x < 1:
            raise InvalidParameterError("rounds_x must be >= 1")
        if self.n_T < 1:
            raise InvalidParameterError("n_T must be >= 1")
        if not 1 <= self.ell <= 64:
            raise InvalidParameterError("ell must lie in [1, 64]")

    @property
    def xi(self) -> float:
        return 0.5 - self.alpha

    @property
    def final_size(self) -> float:
        """Real-valued survivor count ``alpha**x * n_T`` used by the bounds."""
        return self.alpha**self.rounds_x * self.n_T

    def schedule(self) -> list[int]:
        """Set sizes before each round, followed by the final survivor count."""
        sizes = [self.n_T]
        for _ in range(self.rounds_x):
            sizes.append(keep_count(sizes[-1], self.alpha))
        return sizes


class EchSets:
    """The universe ``1..n_T`` with Alice's and Bob's winning labels.

    Stored as uint8 membership masks indexed by ``label - 1``; the label sets
    are materialised on first access.
    """

    __slots__ = ("n_T", "mask_a", "mask_b", "_win_a", "_win_b")

    def __init__(self, n_T: int, win_a: Iterable[int] = (), win_b: Iterable[int] = ()):
        a, b = frozenset(win_a), frozenset(win_b)
        for name, s in (("win_a", a), ("win_b", b)):
            if s and (min(s) < 1 or max(s) > n_T):
                raise InvalidParameterError(f"{name} must lie in 1..{n_T}")
        if a & b:
            raise InvalidParameterError("winning sets must be disjoint")
        self.n_T = n_T
        self.mask_a = _mask(a, n_T)
        self.mask_b = _mask(b, n_T)
        self._win_a, self._win_b = a, b

    @classmethod
    def from_masks(cls, win_a: np.ndarray, win_b: np.ndarray) -> "EchSets":
        a = np.asarray(win_a, dtype=np.uint8)
        b = np.asarray(win_b, dtype=np.uint8)
        if a.shape != b.shape or a.ndim != 1:
            raise InvalidParameterError("masks must be 1-d and of equal length")
        if np.any(a & b):
            raise InvalidParameterError("winning sets must be disjoint")
        obj = cls.__new__(cls)
        obj.n_T = int(a.shape[0])
        obj.mask_a, obj.mask_b = a, b
        obj._win_a = obj._win_b = None
        return obj

    @classmethod
    def leading(cls, n_T: int, n_A: int = 0, n_B: int = 0) -> "EchSets":
        """Alice wins on labels ``1..n_A``, Bob on the next ``n_B`` labels."""
        if n_A < 0 or n_B < 0 or n_A + n_B > n_T:
            raise InvalidParameterError("need 0 <= n_A, n_B and n_A + n_B <= n_T")
        return cls(n_T, range(1, n_A + 1), range(n_A + 1, n_A + n_B + 1))

    @property
    def universe(self) -> range:
        return range(1, self.n_T + 1)

    @property
    def win_a(self) -> frozenset[int]:
        if self._win_a is None:
            self._win_a = frozenset((np.flatnonzero(self.mask_a) + 1).tolist())
        return self._win_a

    @property
    def win_b(self) -> frozenset[int]:
        if self._win_b is None:
            self._win_b = frozenset((np.flatnonzero(self.mask_b) + 1).tolist())
        return self._win_b

    def __eq__(self, other):
        if not isinstance(other, EchSets):
            return NotImplemented
        return (
            self.n_T == other.n_T
            and np.array_equal(self.mask_a, other.mask_a)
            and np.array_equal(self.mask_b, other.mask_b)
        )

    __hash__ = None

    def __repr__(self):
        return f"EchSets(n_T={self.n_T}, |win_a|={int(self.mask_a.sum())}, |win_b|={int(self.mask_b.sum())})"


def _mask(labels: Iterable[int], n: int) -> np.ndarray:
    m = np.zeros(n, dtype=np.uint8)
    idx = np.fromiter(labels, dtype=np.int64)
    if idx.size:
        m[idx - 1] = 1
    return m


class FinalPick(enum.Enum):
    UNIFORM = "uniform"
    PREFER_WIN_A = "prefer_win_a"


class RoundView(NamedTuple):
    """What Alice's strategy sees at the start of a round."""

    round_index: int
    current: np.ndarray  # surviving labels, ascending
    in_win_a: np.ndarray  # uint8, aligned with current
    alpha: float
    rng: Stream  # Alice's private stream


HonestSubset = Callable[[RoundView], np.ndarray]


@dataclass(frozen=True)
class AliceEchStrategy:
    """Alice's behaviour. ``honest_subset=None`` means she sends everything honestly.

    ``honest_subset`` returns a boolean mask aligned with ``view.current``.
    """

    honest_subset: Optional[HonestSubset] = None
    final_pick: FinalPick = FinalPick.UNIFORM
    name: str = "honest"

    @property
    def is_honest(self) -> bool:
        return self.honest_subset is None and self.final_pick is FinalPick.UNIFORM


HONEST_ALICE = AliceEchStrategy()


class BobEchStrategy(enum.Enum):
    HONEST = "honest"
    PREFER_WIN_B = "prefer_win_b"


def fraction_schedule(
    fractions: Sequence[float],
    name: str,
    final_pick: FinalPick = FinalPick.PREFER_WIN_A,
) -> AliceEchStrategy:
    """Scripted Alice sending ``fractions[r]`` of round ``r+1`` honestly.

    Labels from her winning set are sent honestly first; the rest of the
    honest quota is filled uniformly. The last fraction repeats if the
    schedule is shorter than the run.
    """
    fractions = tuple(float(f) for f in fractions)
    if not fractions or any(not 0.0 <= f <= 1.0 for f in fractions):
        raise InvalidParameterError("fractions must be a non-empty sequence in [0, 1]")

    def honest_subset(view: RoundView) -> np.ndarray:
        f = fractions[min(view.round_index, len(fractions)) - 1]
        m = view.current.shape[0]
        quota = math.floor(f * m + 1e-9)
        mask = np.zeros(m, dtype=np.uint8)
        keys = _rng.raw(view.rng, m)
        mask[kernels.select_top(np.ones(m, dtype=np.uint8), view.in_win_a, keys, quota)] = 1
        return mask

    return AliceEchStrategy(honest_subset, final_pick, name)


def win_a_only(final_pick: FinalPick = FinalPick.PREFER_WIN_A) -> AliceEchStrategy:
    """The extreme hard strategy: only Alice's winning labels go out honestly."""

    def honest_subset(view: RoundView) -> np.ndarray:
        return view.in_win_a.copy()

    return AliceEchStrategy(honest_subset, final_pick, "win_a_only")


def alice_battery(alpha: float) -> dict[str, AliceEchStrategy]:
    """Scripted strategies covering hard, soft and mixed schedules.

    A round is hard when fewer than ``2 * alpha`` of its messages go out
    honestly and soft otherwise.
    """
    soft = min(1.0, 2 * alpha + (1 - 2 * alpha) / 2)
    hard = alpha
    battery = [
        AliceEchStrategy(None, FinalPick.PREFER_WIN_A, "honest_prefer_a"),
        fraction_schedule([soft], "pure_soft"),
        fraction_schedule([2 * alpha], "soft_edge"),
        fraction_schedule([hard], "pure_hard"),
        win_a_only(),
        fraction_schedule([hard, soft], "mixed_hard_first"),
        fraction_schedule([soft, hard], "mixed_soft_first"),
    ]
    return {s.name: s for s in battery}


class OutcomeClass(enum.Enum):
    ALICE_WINS = "alice_wins"
    BOB_WINS = "bob_wins"
    NEUTRAL = "neutral"
    ABORTED = "aborted"


@dataclass(frozen=True)
class EchRound:
    before: np.ndarray
    honest: np.ndarray
    received: np.ndarray
    published: np.ndarray

    def to_record(self, index: int) -> dict:
        return {
            "type": "round",
            "round": index,
            "before": self.before.tolist(),
            "honest": self.honest.tolist(),
            "received": self.received.tolist(),
            "published": self.published.tolist(),
        }


@dataclass(frozen=True)
class EchTranscript:
    per_round: tuple[EchRound, ...]
    aborted: bool
    abort_round: Optional[int] = None
    chosen: Optional[int] = None

    def to_records(self) -> list[dict]:
        records = [r.to_record(i) for i, r in enumerate(self.per_round, start=1)]
        records.append(
            {
                "type": "result",
                "aborted": self.aborted,
                "abort_round": self.abort_round,
                "chosen": self.chosen,
            }
        )
        return records

    def dumps(self) -> str:
        """Line-oriented JSON, one record per line."""
        return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in self.to_records())


def run_ech(
    cfg: EchConfig,
    sets: EchSets,
    alice: AliceEchStrategy = HONEST_ALICE,
    bob: BobEchStrategy = BobEchStrategy.HONEST,
    seed: int = 0,
    guess_prob: float = 0.0,
) -> EchTranscript:
    """Run the element choosing protocol once.

    The transfer coins, Bob's selection keys and Alice's private randomness
    come from three independent child streams of ``seed``, so swapping one
    party's strategy leaves the other party's draws untouched.
    """
    if sets.n_T != cfg.n_T:
        raise InvalidParameterError(f"sets cover {sets.n_T} labels, config says {cfg.n_T}")
    coin_rng = _rng.make_rng(_rng.derive_seed(seed, 0))
    bob_rng = _rng.make_rng(_rng.derive_seed(seed, 1))
    alice_rng = _rng.make_rng(_rng.derive_seed(seed, 2))
    thr = _rng.guess_threshold(guess_prob)
    prefer_b = bob is BobEchStrategy.PREFER_WIN_B

    current = np.arange(1, cfg.n_T + 1, dtype=np.int64)
    rounds: list[EchRound] = []
    for r in range(1, cfg.rounds_x + 1):
        m = current.shape[0]
        keep = keep_count(m, cfg.alpha)
        idx = current - 1
        if alice.honest_subset is None:
            honest = np.ones(m, dtype=np.uint8)
        else:
            view = RoundView(r, current, sets.mask_a[idx], cfg.alpha, alice_rng)
            honest = np.asarray(alice.honest_subset(view), dtype=np.uint8)
            if honest.shape != (m,):
                raise InvalidParameterError(f"{alice.name}: honest mask has wrong shape")
        priority = sets.mask_b[idx] if prefer_b else None
        received, guessed, pub = kernels.ech_round(
            honest, priority, _rng.raw(coin_rng, m), _rng.raw(bob_rng, m), keep, thr
        )
        # Alice accepts only a full publication in which Bob can open every
        # label; he holds a message iff he received it or guessed it right.
        ok = pub.shape[0] == keep and bool((received[pub] | guessed[pub]).all())
        published = np.sort(current[pub])
        rounds.append(EchRound(current, current[honest.view(bool)], current[received.view(bool)], published))
        if not ok:
            return EchTranscript(tuple(rounds), True, r, None)
        current = published

    m = current.shape[0]
    prio = sets.mask_a[current - 1] if alice.final_pick is FinalPick.PREFER_WIN_A else None
    pick = kernels.select_top(np.ones(m, dtype=np.uint8), prio, _rng.raw(alice_rng, m), 1)
    return EchTranscript(tuple(rounds), False, None, int(current[pick[0]]))


def classify_outcome(t: EchTranscript, sets: EchSets) -> OutcomeClass:
    if t.aborted:
        return OutcomeClass.ABORTED
    if sets.mask_a[t.chosen - 1]:
        return OutcomeClass.ALICE_WINS
    if sets.mask_b[t.chosen - 1]:
        return OutcomeClass.BOB_WINS
    return OutcomeClass.NEUTRAL


def ech_failure_bound(cfg: EchConfig) -> Bound:
    """Honest abort probability bound ``2 exp(-2 xi^2 N)`` with ``N = alpha^x n_T``.

    Only valid when ``exp(-2 xi^2 N) < 1/2``; otherwise the value is still
    returned but flagged not applicable.
    """
    t = math.exp(-2.0 * cfg.xi**2 * cfg.final_size)
    if t < 0.5:
        return Bound(2.0 * t)
    return Bound(2.0 * t, applicable=False, note="exp(-2 xi^2 N) >= 1/2")


def ech_bob_bound(cfg: EchConfig, n_B: int) -> Bound:
    """``n_B / ((2 alpha)^x n_T)``."""
    if not 0 <= n_B <= cfg.n_T:
        raise InvalidParameterError("need 0 <= n_B <= n_T")
    return Bound(n_B / ((2.0 * cfg.alpha) ** cfg.rounds_x * cfg.n_T))


def ech_alice_bound(n_A: int, rounds_x: int) -> Bound:
    """``n_A * 2^-x``."""
    if n_A < 0 or rounds_x < 1:
        raise InvalidParameterError("need n_A >= 0 and rounds_x >= 1")
    return Bound(n_A * 2.0**-rounds_x)


def round_abort_prob_exact(n_messages: int, alpha: float) -> float:
    """``P(X < keep_count(n, alpha))`` for ``X ~ Binomial(n, 1/2)``, exactly.

    The tail is summed in integer arithmetic and divided once, so the result
    is the correctly rounded float of the exact rational.
    """
    if n_messages < 1:
        raise InvalidParameterError("n_messages must be >= 1")
    if n_messages > EXACT_TAIL_MAX:
        raise ParameterRangeError(f"exact summation supports n <= {EXACT_TAIL_MAX}")
    k = keep_count(n_messages, alpha)
    term, total = 1, 0
    for i in range(k):
        total += term
        term = term * (n_messages - i) // (i + 1)
    return total / (1 << n_messages)


def chernoff_round_bound(n_messages: int, alpha: float) -> float:
    """Per-round Chernoff bound ``exp(-(1/2 - alpha)^2 n)``."""
    return math.exp(-((0.5 - alpha) ** 2) * n_messages)


def honest_failure_union_exact(cfg: EchConfig) -> float:
    """Union of exact per-round abort probabilities along the honest schedule."""
    sizes = cfg.schedule()[:-1]
    return sum(round_abort_prob_exact(n, cfg.alpha) for n in sizes)

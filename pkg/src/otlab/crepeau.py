"""The classic reduction from all-or-nothing OT to 1-out-of-2 OT, and why the
flawed primitive breaks it.

Alice pushes ``N`` random strings through the primitive. Bob names two
disjoint index sets of size ``N/3``: ``U`` made of indices he received and
``V`` of anything else, announcing them in the order that encodes his choice.
Alice masks ``m0`` with the XOR over the first set and ``m1`` with the XOR
over the second. A sender who garbles ``s`` chosen transfers knows those
indices can never be in ``U``; whenever one shows up in an announced set she
knows which set is Bob's.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from otlab import kernels
from otlab import rng as _rng
from otlab.bound import Bound
from otlab.core import DEFAULT_ELL, BitString
from otlab.errors import InvalidParameterError


@dataclass(frozen=True)
class CrepeauConfig:
    bigN: int
    s: int = 0
    ell: int = DEFAULT_ELL

    def __post_init__(self):
        if self.bigN < 3 or self.bigN % 3:
            raise InvalidParameterError("bigN must be a positive multiple of 3")
        if not 0 <= self.s <= self.bigN:
            raise InvalidParameterError("need 0 <= s <= bigN")
        if not 1 <= self.ell <= 64:
            raise InvalidParameterError("ell must lie in [1, 64]")

    @property
    def n(self) -> int:
        return self.bigN // 3


@dataclass(frozen=True)
class CrepeauTranscript:
    garbage: tuple[int, ...]
    received: int
    aborted: bool
    U: tuple[int, ...] = ()
    V: tuple[int, ...] = ()
    announced: Optional[tuple[tuple[int, ...], tuple[int, ...]]] = None
    keys: Optional[tuple[BitString, BitString]] = None
    ciphertexts: Optional[tuple[BitString, BitString]] = None
    bob_output: Optional[BitString] = None
    alice_identified_choice: bool = False

    def to_records(self) -> list[dict]:
        def bits(pair):
            return [str(b) for b in pair] if pair is not None else None

        return [
            {
                "type": "result",
                "garbage": list(self.garbage),
                "received": self.received,
                "aborted": self.aborted,
                "U": list(self.U),
                "V": list(self.V),
                "announced": [list(s) for s in self.announced] if self.announced else None,
                "keys": bits(self.keys),
                "ciphertexts": bits(self.ciphertexts),
                "bob_output": str(self.bob_output) if self.bob_output is not None else None,
                "alice_identified_choice": self.alice_identified_choice,
            }
        ]

    def dumps(self) -> str:
        return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in self.to_records())


def run_crepeau(
    cfg: CrepeauConfig,
    messages: tuple[BitString, BitString],
    choice: int,
    seed: int = 0,
) -> CrepeauTranscript:
    m0, m1 = messages
    if m0.length != cfg.ell or m1.length != cfg.ell:
        raise InvalidParameterError(f"messages must be {cfg.ell}-bit strings")
    if choice not in (0, 1):
        raise InvalidParameterError("choice must be a bit")
    N, n = cfg.bigN, cfg.n
    alice_rng = _rng.make_rng(_rng.derive_seed(seed, 0))
    coin_rng = _rng.make_rng(_rng.derive_seed(seed, 1))
    bob_rng = _rng.make_rng(_rng.derive_seed(seed, 2))

    width = np.uint64((1 << cfg.ell) - 1) if cfg.ell < 64 else np.uint64(~np.uint64(0))
    r = _rng.raw(alice_rng, N) & width
    garbage = np.zeros(N, dtype=np.uint8)
    if cfg.s:
        garbage[kernels.select_top(np.ones(N, dtype=np.uint8), None, _rng.raw(alice_rng, N), cfg.s)] = 1
    received, _ = kernels.transfer(garbage ^ np.uint8(1), _rng.raw(coin_rng, N))
    garbage_labels = tuple((np.flatnonzero(garbage) + 1).tolist())
    n_recv = int(received.sum())
    keys_u, keys_v = _rng.raw(bob_rng, N), _rng.raw(bob_rng, N)
    if n_recv < n:
        return CrepeauTranscript(garbage_labels, n_recv, True)

    u_pos = kernels.select_top(received, None, keys_u, n)
    rest = np.ones(N, dtype=np.uint8)
    rest[u_pos] = 0
    v_pos = kernels.select_top(rest, None, keys_v, n)
    U = tuple(sorted((u_pos + 1).tolist()))
    V = tuple(sorted((v_pos + 1).tolist()))
    X, Y = (U, V) if choice == 0 else (V, U)

    def key_of(labels) -> int:
        return int(np.bitwise_xor.reduce(r[np.asarray(labels) - 1]))

    k0 = BitString.from_int(key_of(X), cfg.ell)
    k1 = BitString.from_int(key_of(Y), cfg.ell)
    ct = (k0 ^ m0, k1 ^ m1)
    bob_key = BitString.from_int(key_of(U), cfg.ell)
    output = ct[choice] ^ bob_key

    xs, ys = set(X), set(Y)
    # a garbage index in exactly one announced set marks the set Bob cannot know
    identified = any((i in xs) != (i in ys) for i in garbage_labels)
    return CrepeauTranscript(
        garbage_labels, n_recv, False, U, V, (X, Y), (k0, k1), ct, output, identified
    )


def crepeau_attack_bound(s: int) -> Bound:
    """``1 - (2/3)^s``; a lower bound on the attack's success, despite the name."""
    if s < 0:
        raise InvalidParameterError("s must be >= 0")
    return Bound(1.0 - (2.0 / 3.0) ** s)


@dataclass(frozen=True)
class AttackEstimate:
    """Monte Carlo estimate of the identification rate, conditioned on no abort."""

    rate: Optional[float]
    stderr: Optional[float]
    abort_rate: float
    trials: int
    completed: int


def crepeau_attack_exact(cfg: CrepeauConfig, trials: int, seed: int = 0) -> AttackEstimate:
    """Independent estimate of ``P(alice_identified_choice | no abort)``.

    Samples the counting model directly rather than running the protocol:
    Bob's receipt count is ``Binomial(N - s, 1/2)``, and given no abort the
    number of garbage indices in ``V`` is hypergeometric, since ``V`` is a
    uniform ``n``-subset of the ``N - n`` indices outside ``U``, all garbage
    included.
    """
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    N, n, s = cfg.bigN, cfg.n, cfg.s
    gen = np.random.default_rng(seed)
    recv = gen.binomial(N - s, 0.5, size=trials)
    ok = recv >= n
    completed = int(ok.sum())
    abort_rate = 1.0 - completed / trials
    if completed == 0:
        return AttackEstimate(None, None, abort_rate, trials, 0)
    if s == 0:
        return AttackEstimate(0.0, 0.0, abort_rate, trials, completed)
    hits = gen.hypergeometric(s, N - n - s, n, size=completed) > 0
    p = float(hits.mean())
    return AttackEstimate(p, math.sqrt(p * (1 - p) / completed), abort_rate, trials, completed)


def crepeau_attack_closed_form(cfg: CrepeauConfig) -> float:
    """``1 - C(N-n-s, n) / C(N-n, n)``: the conditional identification rate."""
    N, n, s = cfg.bigN, cfg.n, cfg.s
    miss = Fraction(math.comb(N - n - s, n), math.comb(N - n, n)) if N - n - s >= n else Fraction(0)
    return float(1 - miss)

"""The flawed all-or-nothing OT primitive and XOR secret splitting.

The primitive is an ideal functionality: an honest send is delivered with
probability exactly 1/2 and the receiver knows whether it arrived; a garbage
send is never delivered and looks to the receiver exactly like an honest
non-delivery. A cheating sender can therefore only push delivery down, never
up.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import reduce
from operator import xor
from typing import Iterable, Optional, Sequence

import numpy as np

from otlab import kernels
from otlab import rng as _rng
from otlab.rng import Stream
from otlab.errors import InvalidParameterError

DEFAULT_ELL = 32


@dataclass(frozen=True)
class BitString:
    """An ordered, non-empty sequence of bits (most significant first)."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) < 1:
            raise InvalidParameterError("a bit string needs at least one bit")
        if any(b not in (0, 1) for b in self.bits):
            raise InvalidParameterError("bits must be 0 or 1")

    @property
    def length(self) -> int:
        return len(self.bits)

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitString":
        if length < 1:
            raise InvalidParameterError("length must be >= 1")
        if not 0 <= value < (1 << length):
            raise InvalidParameterError(f"{value} does not fit in {length} bits")
        return cls(tuple((value >> (length - 1 - i)) & 1 for i in range(length)))

    @classmethod
    def random(cls, length: int, rng: Stream) -> "BitString":
        return cls(tuple(int(b) for b in _rng.coins(rng, length)))

    def to_int(self) -> int:
        return reduce(lambda acc, b: (acc << 1) | b, self.bits, 0)

    def __xor__(self, other: "BitString") -> "BitString":
        if other.length != self.length:
            raise InvalidParameterError("xor of bit strings of different length")
        return BitString(tuple(a ^ b for a, b in zip(self.bits, other.bits)))

    def __str__(self):
        return "".join(map(str, self.bits))


class SendKind(enum.Enum):
    HONEST = "honest"
    GARBAGE = "garbage"


@dataclass(frozen=True)
class OtSendAction:
    """Alice's decision for one transfer: send ``message`` honestly, or garbage."""

    kind: SendKind
    message: Optional[BitString] = None

    def __post_init__(self):
        if self.kind is SendKind.HONEST and self.message is None:
            raise InvalidParameterError("an honest send carries a message")
        if self.kind is SendKind.GARBAGE and self.message is not None:
            raise InvalidParameterError("a garbage send carries no message")

    @classmethod
    def honest(cls, message: BitString) -> "OtSendAction":
        return cls(SendKind.HONEST, message)

    @classmethod
    def garbage(cls) -> "OtSendAction":
        return cls(SendKind.GARBAGE)


@dataclass(frozen=True)
class OtReceipt:
    """What Bob sees after one transfer.

    ``guessed`` marks the (by default impossible) event that Bob correctly
    guessed a message he did not receive; it never sets ``received``.
    """

    received: bool
    value: Optional[BitString] = None
    guessed: bool = False

    def __post_init__(self):
        if self.received != (self.value is not None):
            raise InvalidParameterError("value must be present exactly when received")


@dataclass(frozen=True)
class SecretShares:
    shares: tuple[int, ...]
    secret: int

    def __post_init__(self):
        if xor_combine(self.shares) != self.secret:
            raise InvalidParameterError("shares do not combine to the secret")


def ot_transfer(
    action: OtSendAction, rng: Stream, guess_prob: float = 0.0
) -> OtReceipt:
    """Run one all-or-nothing transfer.

    Consumes exactly one raw draw whatever the action, so the delivery
    sequence of a stream does not depend on the messages or on cheating.
    """
    word = int(_rng.raw(rng, 1)[0])
    coin = word >> 63
    if action.kind is SendKind.HONEST and coin:
        return OtReceipt(True, action.message)
    guessed = (
        action.kind is SendKind.HONEST
        and guess_prob > 0.0
        and (word & ((1 << 63) - 1)) < _rng.guess_threshold(guess_prob)
    )
    return OtReceipt(False, None, guessed=guessed)


def transfer_batch(
    honest: np.ndarray, rng: Stream, guess_prob: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`ot_transfer` over a mask of honest sends.

    Returns uint8 arrays ``(received, guessed)``. Position ``i`` consumes the
    ``i``-th raw draw, as a sequence of single transfers would.
    """
    honest = np.asarray(honest, dtype=np.uint8)
    words = _rng.raw(rng, honest.shape[0])
    return kernels.transfer(honest, words, _rng.guess_threshold(guess_prob))


def split_bit(secret: int, c: int, rng: Stream) -> SecretShares:
    """Split ``secret`` into ``c`` bits whose XOR is ``secret``."""
    if c < 1:
        raise InvalidParameterError("c must be >= 1")
    if secret not in (0, 1):
        raise InvalidParameterError("secret must be a bit")
    head = [int(b) for b in _rng.coins(rng, c - 1)]
    last = secret ^ reduce(xor, head, 0)
    return SecretShares(tuple(head + [last]), secret)


def xor_combine(shares: Iterable[int]) -> int:
    shares = list(shares)
    if not shares:
        raise InvalidParameterError("xor_combine needs at least one share")
    return reduce(xor, shares, 0) & 1


def xor_strings(parts: Sequence[BitString]) -> BitString:
    if not parts:
        raise InvalidParameterError("nothing to combine")
    return reduce(lambda a, b: a ^ b, parts)

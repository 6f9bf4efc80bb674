"""Reproducible Monte Carlo campaigns over the protocol modules.

A scenario fixes a protocol configuration, the parties' strategies and one
event decidable from a single transcript. :func:`run_trials` runs it with
per-trial seeds derived from a master seed, counts the event, attaches a
Wilson interval and, when the event has an analytic upper bound, a verdict.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from typing import ClassVar, Optional, Sequence, Union

from otlab import rng as _rng
from otlab.bound import Bound
from otlab.core import BitString
from otlab.crepeau import CrepeauConfig, run_crepeau
from otlab.ech import (
    HONEST_ALICE,
    AliceEchStrategy,
    BobEchStrategy,
    EchConfig,
    EchSets,
    OutcomeClass,
    alice_battery,
    classify_outcome,
    ech_alice_bound,
    ech_bob_bound,
    ech_failure_bound,
    run_ech,
)
from otlab.errors import ConfigError, InvalidParameterError
from otlab.ot12 import (
    AliceOt12Strategy,
    BobKind,
    BobOt12Strategy,
    Ot12Config,
    ot12_alice_bound,
    ot12_bob_bound,
    ot12_failure_bound,
    run_ot12,
)

Z_95 = 1.959963984540054
CSV_COLUMNS = ("label", "trials", "successes", "rate", "ci_low", "ci_high", "bound", "verdict")


class Verdict(str, enum.Enum):
    WITHIN_BOUND = "WithinBound"
    BOUND_VIOLATED = "BoundViolated"
    NO_BOUND = "NoBound"


@dataclass(frozen=True)
class EstimateReport:
    label: str
    trials: int
    successes: int
    rate: float
    ci_low: float
    ci_high: float
    bound: Optional[float] = None
    verdict: Verdict = Verdict.NO_BOUND

    @classmethod
    def from_counts(cls, label: str, trials: int, successes: int) -> "EstimateReport":
        if not 0 <= successes <= trials:
            raise InvalidParameterError("need 0 <= successes <= trials")
        lo, hi = wilson_interval(successes, trials)
        return cls(label, trials, successes, successes / trials, lo, hi)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.value
        return d


def wilson_interval(successes: int, trials: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise InvalidParameterError("trials must be >= 1")
    if not 0 <= successes <= trials or z <= 0:
        raise InvalidParameterError("need 0 <= successes <= trials and z > 0")
    p = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    margin = z / denom * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials))
    lo = 0.0 if successes == 0 else max(0.0, min(p, center - margin))
    hi = 1.0 if successes == trials else min(1.0, max(p, center + margin))
    return lo, hi


def compare_to_bound(report: EstimateReport, bound: float) -> EstimateReport:
    """Attach ``bound``; a violation needs the whole interval above ``min(1, bound)``."""
    if not math.isfinite(bound):
        raise InvalidParameterError("bound must be finite")
    violated = report.ci_low > min(1.0, float(bound))
    verdict = Verdict.BOUND_VIOLATED if violated else Verdict.WITHIN_BOUND
    return replace(report, bound=float(bound), verdict=verdict)


@lru_cache(maxsize=None)
def _alice_ech(name: str, alpha: float) -> AliceEchStrategy:
    if name == "honest":
        return HONEST_ALICE
    battery = alice_battery(alpha)
    if name not in battery:
        raise InvalidParameterError(f"unknown Alice strategy {name!r}; have {['honest', *battery]}")
    return battery[name]


_MISSING = object()


def _get(d: dict, key: str, kinds, default=_MISSING):
    """``d[key]`` type-checked against ``kinds``; bools never pass as numbers."""
    if key not in d:
        if default is _MISSING:
            raise ConfigError(key, "required field is missing")
        return default
    v = d[key]
    ok = isinstance(v, kinds) and not (isinstance(v, bool) and bool not in _as_tuple(kinds))
    if not ok:
        names = "/".join(k.__name__ for k in _as_tuple(kinds))
        raise ConfigError(key, f"expected {names}, got {v!r}")
    return v


def _as_tuple(kinds) -> tuple:
    return kinds if isinstance(kinds, tuple) else (kinds,)


def _check_keys(d: dict, allowed: Sequence[str]) -> None:
    for k in d:
        if k not in allowed:
            raise ConfigError(k, f"unknown field; expected one of {sorted(allowed)}")


def _enum(cls, d: dict, key: str, default):
    v = _get(d, key, str, default.value)
    try:
        return cls(v)
    except ValueError:
        raise ConfigError(key, f"expected one of {[m.value for m in cls]}, got {v!r}") from None


def _build(ctor, *args):
    try:
        return ctor(*args)
    except InvalidParameterError as exc:
        raise ConfigError("scenario", str(exc)) from None


_NUM = (int, float)


def _bit_or_uniform(value, field_name):
    if value is None or value == "uniform":
        return None
    if isinstance(value, int) and not isinstance(value, bool) and value in (0, 1):
        return value
    raise ConfigError(field_name, f"expected 0, 1 or 'uniform', got {value!r}")


@dataclass(frozen=True)
class EchScenario:
    kind: ClassVar[str] = "ech"
    EVENTS: ClassVar[tuple[str, ...]] = ("aborted", "alice_wins", "bob_wins", "neutral")
    FIELDS: ClassVar[tuple[str, ...]] = (
        "kind", "label", "alpha", "rounds_x", "n_T", "ell", "n_A", "n_B", "alice", "bob", "event",
    )

    cfg: EchConfig
    n_A: int = 0
    n_B: int = 0
    alice: str = "honest"
    bob: BobEchStrategy = BobEchStrategy.HONEST
    event: str = "aborted"
    label: str = ""

    def __post_init__(self):
        if self.event not in self.EVENTS:
            raise InvalidParameterError(f"unknown ech event {self.event!r}")
        _alice_ech(self.alice, self.cfg.alpha)
        EchSets.leading(self.cfg.n_T, self.n_A, self.n_B)

    @property
    def sets(self) -> EchSets:
        return _leading_sets(self.cfg.n_T, self.n_A, self.n_B)

    def outcome(self, seed: int) -> Optional[bool]:
        sets = self.sets
        t = run_ech(self.cfg, sets, _alice_ech(self.alice, self.cfg.alpha), self.bob, seed)
        return classify_outcome(t, sets) is OutcomeClass(self.event)

    def bound(self) -> Optional[Bound]:
        if self.event == "aborted":
            b = ech_failure_bound(self.cfg)
            return b if b.applicable else None
        if self.event == "alice_wins":
            return ech_alice_bound(self.n_A, self.cfg.rounds_x)
        if self.event == "bob_wins":
            return ech_bob_bound(self.cfg, self.n_B)
        return None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "alpha": self.cfg.alpha,
            "rounds_x": self.cfg.rounds_x,
            "n_T": self.cfg.n_T,
            "ell": self.cfg.ell,
            "n_A": self.n_A,
            "n_B": self.n_B,
            "alice": self.alice,
            "bob": self.bob.value,
            "event": self.event,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EchScenario":
        _check_keys(d, cls.FIELDS)
        cfg = _build(
            EchConfig, _get(d, "alpha", _NUM), _get(d, "rounds_x", int), _get(d, "n_T", int), _get(d, "ell", int, 32)
        )
        return _build(
            cls,
            cfg,
            _get(d, "n_A", int, 0),
            _get(d, "n_B", int, 0),
            _get(d, "alice", str, "honest"),
            _enum(BobEchStrategy, d, "bob", BobEchStrategy.HONEST),
            _get(d, "event", str, "aborted"),
            _get(d, "label", str, ""),
        )


@lru_cache(maxsize=64)
def _leading_sets(n_T: int, n_A: int, n_B: int) -> EchSets:
    return EchSets.leading(n_T, n_A, n_B)


@dataclass(frozen=True)
class Ot12Scenario:
    kind: ClassVar[str] = "ot12"
    EVENTS: ClassVar[tuple[str, ...]] = (
        "abort",
        "alice_leak",
        "bob_both",
        "correctness_failure",
        "known_first",
    )
    FIELDS: ClassVar[tuple[str, ...]] = (
        "kind", "label", "c", "beta", "bigN", "alpha", "rounds_x", "ell",
        "secrets", "choice", "garbage", "alice_ech", "bob", "event",
    )

    cfg: Ot12Config
    secrets: Optional[tuple[int, int]] = None  # None: uniform per trial
    choice: Optional[int] = None  # None: uniform per trial
    garbage: Optional[int] = None  # None: honest Alice
    alice_ech: str = "honest"
    bob: BobKind = BobKind.HONEST
    event: str = "abort"
    label: str = ""

    def __post_init__(self):
        if self.event not in self.EVENTS:
            raise InvalidParameterError(f"unknown ot12 event {self.event!r}")
        _alice_ech(self.alice_ech, self.cfg.alpha)
        if self.garbage is not None and not 0 <= self.garbage <= self.cfg.bigN:
            raise InvalidParameterError("garbage must lie in [0, bigN]")

    def strategies(self) -> tuple[AliceOt12Strategy, BobOt12Strategy]:
        ech = _alice_ech(self.alice_ech, self.cfg.alpha)
        if self.garbage is None:
            alice = AliceOt12Strategy(ech=ech)
        else:
            alice = AliceOt12Strategy.garbage_inject(self.garbage, ech)
        return alice, BobOt12Strategy(self.bob)

    def inputs(self, seed: int) -> tuple[tuple[int, int], int]:
        bits = _rng.coins(_rng.make_rng(_rng.derive_seed(seed, 1 << 20)), 3)
        secrets = self.secrets if self.secrets is not None else (int(bits[0]), int(bits[1]))
        choice = self.choice if self.choice is not None else int(bits[2])
        return secrets, choice

    def outcome(self, seed: int) -> Optional[bool]:
        secrets, choice = self.inputs(seed)
        alice, bob = self.strategies()
        res = run_ot12(self.cfg, secrets, choice, alice, bob, seed)
        if self.event == "abort":
            return res.aborted
        if self.event == "alice_leak":
            return res.alice_learned_choice
        if self.event == "bob_both":
            return res.bob_learned_both
        if self.event == "correctness_failure":
            return None if res.aborted else res.bob_output != secrets[choice]
        first = res.per_round[0].known_first
        return None if first is None else first

    def bound(self) -> Optional[Bound]:
        if self.event == "abort":
            b = ot12_failure_bound(self.cfg)
        elif self.event == "alice_leak":
            b = ot12_alice_bound(self.cfg)
        elif self.event == "bob_both":
            b = ot12_bob_bound(self.cfg)
        else:
            return None
        return b if b.applicable else None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "c": self.cfg.c,
            "beta": self.cfg.beta,
            "bigN": self.cfg.bigN,
            "alpha": self.cfg.alpha,
            "rounds_x": self.cfg.rounds_x,
            "ell": self.cfg.ell,
            "secrets": list(self.secrets) if self.secrets is not None else "uniform",
            "choice": self.choice if self.choice is not None else "uniform",
            "garbage": self.garbage,
            "alice_ech": self.alice_ech,
            "bob": self.bob.value,
            "event": self.event,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Ot12Scenario":
        _check_keys(d, cls.FIELDS)
        secrets = _get(d, "secrets", (str, list), "uniform")
        if secrets != "uniform":
            if not isinstance(secrets, (list, tuple)) or len(secrets) != 2:
                raise ConfigError("secrets", "expected a pair of bits or 'uniform'")
            secrets = (_bit_or_uniform(secrets[0], "secrets[0]"), _bit_or_uniform(secrets[1], "secrets[1]"))
            if None in secrets:
                raise ConfigError("secrets", "expected a pair of bits")
        else:
            secrets = None
        cfg = _build(
            Ot12Config,
            _get(d, "c", int),
            _get(d, "beta", _NUM),
            _get(d, "bigN", int),
            _get(d, "alpha", _NUM),
            _get(d, "rounds_x", int),
            _get(d, "ell", int, 32),
        )
        return _build(
            cls,
            cfg,
            secrets,
            _bit_or_uniform(d.get("choice", "uniform"), "choice"),
            _get(d, "garbage", (int, type(None)), None),
            _get(d, "alice_ech", str, "honest"),
            _enum(BobKind, d, "bob", BobKind.HONEST),
            _get(d, "event", str, "abort"),
            _get(d, "label", str, ""),
        )


@dataclass(frozen=True)
class CrepeauScenario:
    kind: ClassVar[str] = "crepeau"
    EVENTS: ClassVar[tuple[str, ...]] = ("alice_identified", "aborted")
    FIELDS: ClassVar[tuple[str, ...]] = ("kind", "label", "bigN", "s", "ell", "choice", "event")

    cfg: CrepeauConfig
    choice: Optional[int] = None
    event: str = "alice_identified"
    label: str = ""

    def __post_init__(self):
        if self.event not in self.EVENTS:
            raise InvalidParameterError(f"unknown crepeau event {self.event!r}")

    def outcome(self, seed: int) -> Optional[bool]:
        g = _rng.make_rng(_rng.derive_seed(seed, 1 << 20))
        m0 = BitString.random(self.cfg.ell, g)
        m1 = BitString.random(self.cfg.ell, g)
        choice = self.choice if self.choice is not None else int(_rng.coins(g, 1)[0])
        t = run_crepeau(self.cfg, (m0, m1), choice, seed)
        if self.event == "aborted":
            return t.aborted
        # identification rate is conditioned on the run completing
        return None if t.aborted else t.alice_identified_choice

    def bound(self) -> Optional[Bound]:
        return None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "bigN": self.cfg.bigN,
            "s": self.cfg.s,
            "ell": self.cfg.ell,
            "choice": self.choice if self.choice is not None else "uniform",
            "event": self.event,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CrepeauScenario":
        _check_keys(d, cls.FIELDS)
        cfg = _build(CrepeauConfig, _get(d, "bigN", int), _get(d, "s", int, 0), _get(d, "ell", int, 32))
        return _build(
            cls,
            cfg,
            _bit_or_uniform(d.get("choice", "uniform"), "choice"),
            _get(d, "event", str, "alice_identified"),
            _get(d, "label", str, ""),
        )


Scenario = Union[EchScenario, Ot12Scenario, CrepeauScenario]
SCENARIO_KINDS = {cls.kind: cls for cls in (EchScenario, Ot12Scenario, CrepeauScenario)}


def scenario_from_dict(d: dict) -> Scenario:
    if not isinstance(d, dict):
        raise ConfigError("scenario", f"expected an object, got {d!r}")
    try:
        cls = SCENARIO_KINDS[d["kind"]]
    except (KeyError, TypeError):
        raise ConfigError("kind", f"expected one of {sorted(SCENARIO_KINDS)}") from None
    return cls.from_dict(d)


def scenario_label(s: Scenario) -> str:
    return s.label or f"{s.kind}:{s.event}"


def trial_seed(master_seed: int, index: int) -> int:
    return _rng.derive_seed(master_seed, index)


def _count(args) -> tuple[int, int]:
    scenario, master_seed, start, stop = args
    counted = hits = 0
    for i in range(start, stop):
        out = scenario.outcome(trial_seed(master_seed, i))
        if out is None:
            continue
        counted += 1
        hits += bool(out)
    return counted, hits


def default_workers() -> int:
    raw = os.environ.get("OTLAB_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        raise ConfigError("OTLAB_THREADS", f"expected an integer, got {raw!r}") from None


def run_trials(
    scenario: Scenario,
    trials: int,
    master_seed: int,
    workers: Optional[int] = None,
) -> EstimateReport:
    """Estimate the probability of ``scenario.event``.

    Trials whose event is undefined (e.g. a conditional rate on an aborted
    run) are left out of both counts. The report depends only on
    ``(scenario, trials, master_seed)``, not on ``workers``.
    """
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    workers = default_workers() if workers is None else workers
    if workers <= 1 or trials < 2 * workers:
        counted, hits = _count((scenario, master_seed, 0, trials))
    else:
        step = math.ceil(trials / workers)
        chunks = [(scenario, master_seed, a, min(trials, a + step)) for a in range(0, trials, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_count, chunks))
        counted = sum(p[0] for p in parts)
        hits = sum(p[1] for p in parts)
    if counted == 0:
        raise InvalidParameterError(f"{scenario_label(scenario)}: no trial had a defined event")
    report = EstimateReport.from_counts(scenario_label(scenario), counted, hits)
    b = scenario.bound()
    return compare_to_bound(report, b) if b is not None else report


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Verdict):
        return v.value
    return str(v)


def reports_to_csv(reports: Sequence[EstimateReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def reports_to_json(reports: Sequence[EstimateReport]) -> str:
    return json.dumps([r.as_dict() for r in reports], indent=2) + "\n"


def write_reports(reports: Sequence[EstimateReport], path: str, fmt: str = "csv") -> None:
    """Write all reports at once, atomically (temp file + rename)."""
    if fmt not in ("csv", "json"):
        raise ConfigError("output.format", f"expected 'csv' or 'json', got {fmt!r}")
    text = reports_to_csv(reports) if fmt == "csv" else reports_to_json(reports)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".otlab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

"""Command-line entry point.

Subcommands::

    otlab params solve --epsilon 0.1
    otlab bounds --config campaign.json
    otlab simulate ot12 --config campaign.json --trials 10000 --seed 7
    otlab attack crepeau --s 5 --N 300

Exit status is 0 on success, 1 if any report has a ``BoundViolated``
verdict and 2 on configuration or usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

from otlab import __version__
from otlab.crepeau import CrepeauConfig, crepeau_attack_bound, crepeau_attack_closed_form, crepeau_attack_exact
from otlab.ech import ech_alice_bound, ech_bob_bound, ech_failure_bound
from otlab.errors import ConfigError, InvalidParameterError, NoRootError, ParameterRangeError
from otlab.ot12 import ot12_alice_bound, ot12_bob_bound, ot12_failure_bound
from otlab.params import derive_parameter_set, validate_parameter_set
from otlab.sim import (
    CrepeauScenario,
    EchScenario,
    EstimateReport,
    Ot12Scenario,
    Scenario,
    Verdict,
    run_trials,
    scenario_from_dict,
    scenario_label,
    write_reports,
)

SCHEMA = "otlab.campaign/1"
EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2
SEED_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class OutputSpec:
    path: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise ConfigError("output.format", f"expected 'csv' or 'json', got {self.format!r}")


@dataclass(frozen=True)
class CampaignConfig:
    """A list of scenarios run with a shared trial count and master seed."""

    scenarios: tuple[Scenario, ...]
    trials: int
    master_seed: int = 0
    output: OutputSpec = field(default_factory=OutputSpec)

    def __post_init__(self):
        if not self.scenarios:
            raise ConfigError("scenarios", "at least one scenario is required")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if not 0 <= self.master_seed <= SEED_MAX:
            raise ConfigError("master_seed", "must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "output": {"path": self.output.path, "format": self.output.format},
            "scenarios": [s.to_dict() for s in self.scenarios],
        }

    @classmethod
    def from_dict(cls, d) -> "CampaignConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "expected a JSON object")
        allowed = {"schema", "trials", "master_seed", "output", "scenarios"}
        for k in d:
            if k not in allowed:
                raise ConfigError(k, f"unknown field; expected one of {sorted(allowed)}")
        if d.get("schema") != SCHEMA:
            raise ConfigError("schema", f"expected {SCHEMA!r}, got {d.get('schema')!r}")
        trials = d.get("trials")
        if not _is_int(trials):
            raise ConfigError("trials", f"expected a positive integer, got {trials!r}")
        seed = d.get("master_seed", 0)
        if not _is_int(seed):
            raise ConfigError("master_seed", f"expected an integer, got {seed!r}")
        out = d.get("output", {})
        if not isinstance(out, dict) or set(out) - {"path", "format"}:
            raise ConfigError("output", "expected an object with 'path' and 'format'")
        path = out.get("path")
        if path is not None and not isinstance(path, str):
            raise ConfigError("output.path", f"expected a string or null, got {path!r}")
        output = OutputSpec(path, out.get("format", "csv"))
        raw = d.get("scenarios")
        if not isinstance(raw, list):
            raise ConfigError("scenarios", "expected a list")
        scenarios = []
        for i, sd in enumerate(raw):
            try:
                scenarios.append(scenario_from_dict(sd))
            except ConfigError as exc:
                raise ConfigError(f"scenarios[{i}].{exc.field}", str(exc).split(": ", 1)[1]) from None
        return cls(tuple(scenarios), trials, seed, output)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "CampaignConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", f"not valid JSON ({exc})") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str) -> "CampaignConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path!r}: {exc.strerror}") from None
        return cls.loads(text)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def scenario_bounds(s: Scenario) -> list[tuple[str, float, bool, str]]:
    """All analytic bounds for a scenario's configuration as (name, value, applicable, note)."""
    if isinstance(s, EchScenario):
        items = [
            ("ech_failure", ech_failure_bound(s.cfg)),
            ("ech_bob", ech_bob_bound(s.cfg, s.n_B)),
            ("ech_alice", ech_alice_bound(s.n_A, s.cfg.rounds_x)),
        ]
    elif isinstance(s, Ot12Scenario):
        items = [
            ("ot12_failure", ot12_failure_bound(s.cfg)),
            ("ot12_bob", ot12_bob_bound(s.cfg)),
            ("ot12_alice", ot12_alice_bound(s.cfg)),
        ]
    else:
        items = [("crepeau_attack_lower", crepeau_attack_bound(s.cfg.s))]
        closed = crepeau_attack_closed_form(s.cfg)
        return [(n, float(b), b.applicable, b.note) for n, b in items] + [
            ("crepeau_attack_closed_form", closed, True, "exact conditional rate")
        ]
    return [(n, float(b), b.applicable, b.note) for n, b in items]


def _print_reports(reports: Sequence[EstimateReport], out) -> None:
    print(f"{'label':<32} {'trials':>8} {'succ':>8} {'rate':>9} {'ci_low':>9} {'ci_high':>9} {'bound':>10}  verdict", file=out)
    for r in reports:
        bound = "-" if r.bound is None else f"{r.bound:.4g}"
        print(
            f"{r.label:<32} {r.trials:>8} {r.successes:>8} {r.rate:>9.5f} {r.ci_low:>9.5f} "
            f"{r.ci_high:>9.5f} {bound:>10}  {r.verdict.value}",
            file=out,
        )


def cmd_params_solve(args, out) -> int:
    ps = derive_parameter_set(args.epsilon)
    report = validate_parameter_set(ps)
    print("ParameterSet", file=out)
    for k, v in ps.as_dict().items():
        print(f"  {k:<8} {v!r}", file=out)
    print("  bounds   pa={:.6g} pb={:.6g} pf={:.6g}".format(ps.alice_bound(), ps.bob_bound(), ps.failure_bound()), file=out)
    print("ValidationReport", file=out)
    print(f"  ok       {report.ok}", file=out)
    for v in report.violations:
        print(f"  violated {v.condition}: {v.lhs!r} > {v.rhs!r}", file=out)
    return EXIT_OK


def cmd_bounds(args, out) -> int:
    cfg = CampaignConfig.load(args.config)
    for s in cfg.scenarios:
        print(scenario_label(s), file=out)
        for name, value, applicable, note in scenario_bounds(s):
            flag = "" if applicable else f"  (not applicable: {note})"
            print(f"  {name:<28} {value:.6g}{flag}", file=out)
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    cfg = CampaignConfig.load(args.config)
    for i, s in enumerate(cfg.scenarios):
        if s.kind != args.kind:
            raise ConfigError(f"scenarios[{i}].kind", f"expected {args.kind!r} for 'simulate {args.kind}', got {s.kind!r}")
    trials = cfg.trials if args.trials is None else args.trials
    seed = cfg.master_seed if args.seed is None else args.seed
    if trials < 1:
        raise ConfigError("--trials", "must be >= 1")
    if not 0 <= seed <= SEED_MAX:
        raise ConfigError("--seed", "must be a 64-bit unsigned integer")
    fmt = args.format or cfg.output.format
    if fmt not in ("csv", "json"):
        raise ConfigError("--format", f"expected 'csv' or 'json', got {fmt!r}")
    path = args.output or cfg.output.path
    reports = [run_trials(s, trials, seed) for s in cfg.scenarios]
    _print_reports(reports, out)
    if path:
        write_reports(reports, path, fmt)
        print(f"wrote {path}", file=out)
    violated = any(r.verdict is Verdict.BOUND_VIOLATED for r in reports)
    return EXIT_VIOLATION if violated else EXIT_OK


def cmd_attack_crepeau(args, out) -> int:
    cfg = CrepeauConfig(args.N, args.s)
    scenario = CrepeauScenario(cfg, label=f"crepeau_attack_s{args.s}_N{args.N}")
    lower = crepeau_attack_bound(args.s)
    closed = crepeau_attack_closed_form(cfg)
    oracle = crepeau_attack_exact(cfg, args.trials, seed=args.seed)
    print(f"Crepeau reduction, N={args.N}, garbage sends s={args.s}, trials={args.trials}", file=out)
    try:
        report = run_trials(scenario, args.trials, args.seed)
    except InvalidParameterError:
        print("  every run aborted; no identification rate", file=out)
        return EXIT_OK
    print(f"  attack rate        {report.rate:.5f}  (95% CI {report.ci_low:.5f} .. {report.ci_high:.5f}, {report.trials} completed)", file=out)
    if oracle.rate is not None:
        print(f"  counting oracle    {oracle.rate:.5f}", file=out)
    print(f"  closed form        {closed:.5f}", file=out)
    print(f"  1 - (2/3)^s        {float(lower):.5f}  (lower bound)", file=out)
    return EXIT_OK


def _epsilon(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and 0 < v < 1):
        raise argparse.ArgumentTypeError("epsilon must lie in (0, 1)")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="otlab", description="Simulate and audit OT constructions over a flawed primitive.")
    p.add_argument("--version", action="version", version=f"otlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    params = sub.add_parser("params", help="security parameter solver")
    psub = params.add_subparsers(dest="params_command", required=True)
    solve = psub.add_parser("solve", help="derive and validate a parameter set")
    solve.add_argument("--epsilon", type=_epsilon, required=True)
    solve.set_defaults(func=cmd_params_solve)

    bounds = sub.add_parser("bounds", help="print analytic bounds for each scenario in a config")
    bounds.add_argument("--config", required=True)
    bounds.set_defaults(func=cmd_bounds)

    sim = sub.add_parser("simulate", help="run a Monte Carlo campaign")
    sim.add_argument("kind", choices=["ech", "ot12", "crepeau"])
    sim.add_argument("--config", required=True)
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=_nonneg_int)
    sim.add_argument("--output")
    sim.add_argument("--format", choices=["csv", "json"])
    sim.set_defaults(func=cmd_simulate)

    attack = sub.add_parser("attack", help="attack demonstrations")
    asub = attack.add_subparsers(dest="attack_command", required=True)
    crep = asub.add_parser("crepeau", help="garbage-send attack on the classic reduction")
    crep.add_argument("--s", type=_nonneg_int, required=True)
    crep.add_argument("--N", type=int, required=True)
    crep.add_argument("--trials", type=int, default=20_000)
    crep.add_argument("--seed", type=_nonneg_int, default=0)
    crep.set_defaults(func=cmd_attack_crepeau)
    return p


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        return args.func(args, out)
    except ConfigError as exc:
        print(f"otlab: config error: {exc}", file=sys.stderr)
    except (InvalidParameterError, NoRootError, ParameterRangeError) as exc:
        print(f"otlab: error: {exc}", file=sys.stderr)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

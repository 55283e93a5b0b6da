"""Batch driver: ``pwexpect <mode> <file.pwhile> [options]``.

Modes
    analyze    derive a bound with et♯ and discharge its side conditions
    simulate   run the value-iteration oracle at ``depth`` and ``2·depth``
    check      discharge side conditions and re-check every annotated loop
               invariant semantically (plus the decrease property for
               loop-free programs)
    compare    analyze + simulate, and flag any store where the oracle
               exceeds the bound
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .costexpr import (AnnotationError, LoopRecord, NonConcaveContext,
                       discharge, et_sharp, eval_cexp, simplify)
from .lang import Store, grid
from .mdist import Active, Multidistribution, expected_cost_vi_many
from .numeric import to_json
from .parser import ParseError, parse_program
from .pretty import pretty_bexp, pretty_cexp
from .syntax import ZERO, Command, has_loop
from .transformer import (BudgetExceeded, Expectation, check_decrease,
                          check_upper_invariant)

SOUND = "Sound-on-domain"
SIDE_FAILED = "SideConditionFailed"
EXCEEDS = "OracleExceedsBound"
SIMULATED = "Simulated"

MODES = ("analyze", "simulate", "check", "compare")


@dataclass
class AnalysisConfig:
    mode: str = "analyze"
    domain: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    depth: int = 100
    fuel: int = 50
    seed: int = 0
    budget: int = 10_000
    samples: int = 0
    measure: str = "unfoldings"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        for name, (lo, hi) in self.domain.items():
            if lo > hi:
                raise ValueError(f"empty range for {name}: {lo}..{hi}")
        for name in ("depth", "fuel", "budget", "samples"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def stores(self) -> List[Store]:
        stores = grid({v: range(lo, hi + 1) for v, (lo, hi) in self.domain.items()})
        if 0 < self.samples < len(stores):
            rng = random.Random(self.seed)
            picked = sorted(rng.sample(range(len(stores)), self.samples))
            stores = [stores[i] for i in picked]
        return stores


def parse_domain(text: str) -> Dict[str, Tuple[int, int]]:
    """``"x=-10..10,y=0..5"`` to ``{"x": (-10, 10), "y": (0, 5)}``; a single
    value ``x=3`` is the range ``3..3``."""
    domain = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, sep, rng = part.partition("=")
        if not sep:
            raise ValueError(f"bad domain entry {part!r}, expected name=lo..hi")
        lo, dots, hi = rng.partition("..")
        domain[name.strip()] = (int(lo), int(hi if dots else lo))
    return domain


@dataclass
class Report:
    program: str
    mode: str
    config: AnalysisConfig
    variables: List[str]
    bound: Optional[str] = None
    side_conditions: List[dict] = field(default_factory=list)
    table: List[dict] = field(default_factory=list)
    verdict: str = SOUND

    @property
    def exit_code(self) -> int:
        return 0 if self.verdict in (SOUND, SIMULATED) else 1

    def to_json(self) -> dict:
        config = asdict(self.config)
        config["domain"] = {k: f"{lo}..{hi}" for k, (lo, hi) in sorted(self.config.domain.items())}
        return {
            "program": self.program,
            "mode": self.mode,
            "bound": self.bound,
            "side_conditions": self.side_conditions,
            "table": self.table,
            "verdict": self.verdict,
            "config": config,
        }

    def summary(self) -> str:
        lines = [f"{self.mode}: {self.program}"]
        if self.bound is not None:
            lines.append(f"  bound: {self.bound}")
        for sc in self.side_conditions:
            line = f"  [{sc['status']}] {sc['provenance']}: [{sc['guard']}] ⊨ {sc['lhs']} ⊑ {sc['rhs']}"
            if sc["counterexample"]:
                cx = sc["counterexample"]
                line += f"  (at {_fmt_store(cx['store'])}: {_fmt_cell(cx['lhs'])} > {_fmt_cell(cx['rhs'])})"
            lines.append(line)
        if self.table:
            keys = [k for k in self.table[0] if k != "store"]
            lines.append("  store | " + " | ".join(keys))
            for row in self.table:
                cells = [_fmt_cell(row[k]) for k in keys]
                lines.append(f"  {_fmt_store(row['store'])} | " + " | ".join(cells))
        lines.append(f"  verdict: {self.verdict}")
        return "\n".join(lines)


def _fmt_store(d: dict) -> str:
    return ",".join(f"{k}={v}" for k, v in d.items()) or "-"


def _fmt_cell(v) -> str:
    if isinstance(v, str) and "/" in v:
        num, den = v.split("/")
        if den == "1":
            return num
        return f"{v} (~{float(Fraction(int(num), int(den))):.6g})"
    return str(v)


def _store_json(s: Store, variables: Sequence[str]) -> dict:
    return s.as_dict(variables)


def _bound_and_conditions(program: Command, cfg: AnalysisConfig, report: Report,
                          trace: Optional[List[LoopRecord]] = None):
    raw, conds = et_sharp(True, program, ZERO, trace)
    bound = simplify(raw)
    report.bound = pretty_cexp(bound)
    stores = cfg.stores()
    ok = True
    for sc, verdict in discharge(conds, stores):
        ok = ok and verdict.verified
        report.side_conditions.append({
            "provenance": sc.provenance,
            "guard": pretty_bexp(sc.guard),
            "lhs": pretty_cexp(simplify(sc.lhs)),
            "rhs": pretty_cexp(simplify(sc.rhs)),
            "status": verdict.status,
            "checked": verdict.checked,
            "counterexample": None if verdict.verified else {
                "store": _store_json(verdict.store, report.variables),
                "lhs": to_json(verdict.lhs),
                "rhs": to_json(verdict.rhs),
            },
        })
    if not ok:
        report.verdict = SIDE_FAILED
    return bound, stores


def analyze(path: str, cfg: AnalysisConfig, program: Optional[Command] = None) -> Report:
    program = program if program is not None else _load(path)
    report = _new_report(path, cfg, "analyze")
    bound, stores = _bound_and_conditions(program, cfg, report)
    for s in stores:
        report.table.append({"store": _store_json(s, report.variables),
                             "bound": to_json(eval_cexp(bound, s))})
    return report


def simulate(path: str, cfg: AnalysisConfig, program: Optional[Command] = None) -> Report:
    program = program if program is not None else _load(path)
    report = _new_report(path, cfg, "simulate")
    stores = cfg.stores()
    low = expected_cost_vi_many(program, stores, cfg.depth, cfg.measure)
    high = expected_cost_vi_many(program, stores, 2 * cfg.depth, cfg.measure)
    for s in stores:
        report.table.append({
            "store": _store_json(s, report.variables),
            "oracle": to_json(low[s]),
            "oracle_2x_depth": to_json(high[s]),
            "nondecreasing": low[s] <= high[s],
        })
    report.verdict = SIMULATED
    return report


def compare(path: str, cfg: AnalysisConfig, program: Optional[Command] = None) -> Report:
    program = program if program is not None else _load(path)
    report = _new_report(path, cfg, "compare")
    bound, stores = _bound_and_conditions(program, cfg, report)
    oracle = expected_cost_vi_many(program, stores, cfg.depth, cfg.measure)
    exceeded = False
    for s in stores:
        b, o = eval_cexp(bound, s), oracle[s]
        exceeded = exceeded or o > b
        report.table.append({
            "store": _store_json(s, report.variables),
            "oracle": to_json(o),
            "bound": to_json(b),
            "slack": to_json(b - o) if b >= o else "-" + to_json(o - b),
            "exceeds": o > b,
        })
    # a failed side condition means no bound was claimed, so it takes precedence
    if exceeded and report.verdict == SOUND:
        report.verdict = EXCEEDS
    return report


def check(path: str, cfg: AnalysisConfig, program: Optional[Command] = None) -> Report:
    program = program if program is not None else _load(path)
    report = _new_report(path, cfg, "check")
    trace: List[LoopRecord] = []
    _, stores = _bound_and_conditions(program, cfg, report, trace)
    ok = report.verdict == SOUND
    for rec in trace:
        verdict = check_upper_invariant(rec.loop, Expectation.of_cexp(rec.post),
                                        Expectation.of_cexp(rec.loop.annotation.invariant),
                                        stores, cfg.fuel)
        ok = ok and verdict.verified
        report.side_conditions.append({
            "provenance": "semantic:upper-invariant",
            "guard": pretty_bexp(rec.loop.guard),
            "lhs": "F(I)",
            "rhs": pretty_cexp(rec.loop.annotation.invariant),
            "status": verdict.status,
            "checked": verdict.checked,
            "counterexample": None if verdict.verified else {
                "store": _store_json(verdict.store, report.variables),
                "lhs": to_json(verdict.lhs),
                "rhs": to_json(verdict.rhs),
            },
        })
    if not has_loop(program):
        zero = Expectation.const(0)
        for s in stores:
            m = Multidistribution.dirac(Active(program, s))
            try:
                holds = check_decrease(m, cfg.depth, True, zero, cfg.fuel, cfg.budget)
                status = "holds" if holds else "violated"
            except BudgetExceeded:
                holds, status = True, "budget-exceeded"
            ok = ok and holds
            report.table.append({"store": _store_json(s, report.variables), "decrease": status})
    if not ok:
        report.verdict = SIDE_FAILED
    return report


def _load(path: str) -> Command:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


def _new_report(path: str, cfg: AnalysisConfig, mode: str) -> Report:
    return Report(program=path, mode=mode, config=cfg, variables=sorted(cfg.domain))


RUNNERS = {"analyze": analyze, "simulate": simulate, "check": check, "compare": compare}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pwexpect",
                                 description="Expected-cost bounds for probabilistic while programs.")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("file", help="program in .pwhile syntax")
    ap.add_argument("--domain", default="", help='store grid, e.g. "x=-10..10,y=0..5"')
    ap.add_argument("--depth", type=int, default=100, help="value-iteration depth")
    ap.add_argument("--fuel", type=int, default=50, help="Kleene iterations per loop")
    ap.add_argument("--seed", type=int, default=0, help="seed for --samples")
    ap.add_argument("--budget", type=int, default=10_000, help="derivation enumeration cap")
    ap.add_argument("--samples", type=int, default=0,
                    help="check this many random grid stores instead of the whole grid")
    ap.add_argument("--measure", choices=("unfoldings", "steps"), default="unfoldings",
                    help="what --depth counts: loop unfoldings or single reduction steps")
    ap.add_argument("--json", metavar="OUT", help="write the report as JSON ('-' for stdout)")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = AnalysisConfig(mode=args.mode, domain=parse_domain(args.domain), depth=args.depth,
                             fuel=args.fuel, seed=args.seed & 0xFFFFFFFFFFFFFFFF,
                             budget=args.budget, samples=args.samples, measure=args.measure)
        report = RUNNERS[args.mode](args.file, cfg)
    except ParseError as exc:
        print(f"{args.file}:{exc}", file=sys.stderr)
        return 2
    except (AnnotationError, NonConcaveContext, ValueError, OSError) as exc:
        print(f"pwexpect: error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report.to_json(), indent=2, ensure_ascii=False) + "\n"
    if args.json == "-":
        sys.stdout.write(text)
    else:
        print(report.summary())
        if args.json:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(text)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())

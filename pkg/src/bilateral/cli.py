"""Command-line front end: ``bilateral run`` and ``bilateral suite``.

Exit codes: 0 success, 1 usage or configuration error, 2 a verification
contract was violated.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import re
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import averages, combinatorics, fillscheme, recurrence, suite
from .dynsys import CyclicSystem, make_system, point_from_json, point_to_json, spec_from_json
from .errors import (BilateralError, ClampWarning, ConfigError, DensityTooLow, NotACoboundary,
                     WitnessNotFound)
from .fixedpoint import GOLDEN_ALPHA, derive_seed
from .observables import observable_from_json

KINDS = ("trace", "classify", "oscillate", "dominate", "filling", "coboundary",
         "lemma1", "lemma4", "lemma2trace", "furstenberg", "en_a")

EXIT_OK, EXIT_USAGE, EXIT_CONTRACT = 0, 1, 2


@dataclass
class RunConfig:
    system: dict = field(default_factory=lambda: {"kind": "CircleRotation"})
    observable: dict = field(default_factory=lambda: {"kind": "SmoothCircle", "name": "cos"})
    kind: str = "trace"
    horizon: int = 1000
    q: int = 0
    burn_in: int | None = None     # None: horizon // 10
    tolerance: float = 0.01
    sample_count: int = 100
    seed: int = 0
    out: str = "out"
    a: int = 8                     # scale for lemma1 / lemma4 / lemma2trace
    level: float | None = None     # threshold: 0 for oscillate, -0.9 for en_a
    n0: int | None = None          # lower end of n-ranges; None: kind default
    p: int | None = None           # lemma2trace window; None: pilot choice
    point: dict | None = None      # explicit start point; None: sampled
    triple: list = field(default_factory=lambda: [1, -2, 1])


_TYPES = {
    "system": dict, "observable": dict, "kind": str, "horizon": int, "q": int,
    "burn_in": (int, type(None)), "tolerance": (int, float), "sample_count": int, "seed": int,
    "out": str, "a": int, "level": (int, float, type(None)), "n0": (int, type(None)),
    "p": (int, type(None)), "point": (dict, type(None)), "triple": list,
}


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Strict JSON parsing; every problem names the line and field."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{source}: top level must be an object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    for key, value in obj.items():
        where = f"{source}:{_line_of(text, key) or '?'}"
        if key not in known:
            raise ConfigError(f"{where}: unknown field {key!r}")
        want = _TYPES[key]
        if isinstance(value, bool) and want is not dict or not isinstance(value, want):
            raise ConfigError(f"{where}: field {key!r} has the wrong type ({type(value).__name__})")
    cfg = RunConfig(**obj)
    try:
        validate(cfg)
    except ConfigError as exc:
        bad = str(exc).split(":", 1)[0]
        raise ConfigError(f"{source}:{_line_of(text, bad) or '?'}: {exc}") from None
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.kind not in KINDS:
        raise ConfigError(f"kind: must be one of {', '.join(KINDS)}")
    if cfg.horizon < 1:
        raise ConfigError("horizon: must be >= 1")
    if cfg.q < 0:
        raise ConfigError("q: must be >= 0")
    if cfg.sample_count < 1:
        raise ConfigError("sample_count: must be >= 1")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")
    if cfg.a < 1:
        raise ConfigError("a: must be positive")
    if len(cfg.triple) != 3 or not all(isinstance(k, int) for k in cfg.triple):
        raise ConfigError("triple: must hold three integers")
    for name in ("system", "observable"):
        try:
            (spec_from_json if name == "system" else observable_from_json)(getattr(cfg, name))
        except (BilateralError, ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"{name}: {exc}") from None


# ---------------------------------------------------------------------------
# experiments


@dataclass
class Outcome:
    files: dict            # name -> text
    contract_ok: bool = True
    summary: str = ""


def _setup(cfg: RunConfig):
    system = make_system(spec_from_json(cfg.system))
    f = observable_from_json(cfg.observable)
    return system, f


def _start(cfg: RunConfig, system):
    if cfg.point is not None:
        return point_from_json(system, cfg.point)
    return system.sample_point(cfg.seed)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _trace(cfg):
    system, f = _setup(cfg)
    x = _start(cfg, system)
    tr = averages.averages_trace(system, x, f, cfg.horizon, cfg.q)
    return Outcome({"trace.csv": tr.to_csv()}, True, f"trace of {cfg.horizon} rows")


def _classify(cfg):
    system, f = _setup(cfg)
    tr = averages.averages_trace(system, _start(cfg, system), f, cfg.horizon, cfg.q)
    rep = averages.classify_trace(tr, cfg.burn_in, cfg.tolerance)
    return Outcome({"classify.json": _dump(rep.to_dict())}, True, rep.label)


def _oscillate(cfg):
    system, f = _setup(cfg)
    c = 0.0 if cfg.level is None else float(cfg.level)
    burn = cfg.horizon // 10 if cfg.burn_in is None else cfg.burn_in
    batch = system.sample_batch(cfg.seed, cfg.sample_count)
    pts = [_start(cfg, system)] if cfg.point is not None else \
        [system.point(batch, t) for t in range(cfg.sample_count)]
    rows = []
    for x in pts:
        above, below, hit = averages.oscillation_count(averages.averages_trace(system, x, f, cfg.horizon), c, burn)
        rows.append({"point": point_to_json(system, x), "above": above, "below": below, "at": hit})
    return Outcome({"oscillate.json": _dump({"c": c, "burn_in": burn, "N": cfg.horizon, "points": rows})})


def _dominate(cfg):
    system, f = _setup(cfg)
    n0 = 100 if cfg.n0 is None else cfg.n0
    batch = system.sample_batch(cfg.seed, cfg.sample_count)
    pts = [_start(cfg, system)] if cfg.point is not None else \
        [system.point(batch, t) for t in range(cfg.sample_count)]
    runs = [averages.domination_run(system, x, f, cfg.q, n0, cfg.horizon) for x in pts]
    body = {"q": cfg.q, "N0": n0, "N": cfg.horizon, "points": len(runs),
            "full_runs": sum(r.full_run for r in runs), "run_lengths": [r.length for r in runs]}
    return Outcome({"dominate.json": _dump(body)}, True, f"{body['full_runs']} full runs")


def _num(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v if isinstance(v, int) else float(v)


def _filling(cfg):
    system, f = _setup(cfg)
    if not isinstance(system, CyclicSystem):
        raise ConfigError("system: filling needs a CyclicRotation")
    table = fillscheme.filling_table(system, f)
    body = {"states": [r.to_dict() for r in table], "finite": all(r.finite for r in table)}
    ok = True
    if body["finite"]:
        body["residual"] = _num(fillscheme.verify_filling_equation(system, f))
        body["mean_forward_limit"] = str(fillscheme.mean_forward_limit(system, f))
        ok = body["residual"] == 0
    return Outcome({"filling.json": _dump(body)}, ok, "residual " + str(body.get("residual", "n/a")))


def _coboundary(cfg):
    system, f = _setup(cfg)
    if not isinstance(system, CyclicSystem):
        raise ConfigError("system: coboundary needs a CyclicRotation")
    try:
        g = fillscheme.extract_coboundary(system, f)
    except NotACoboundary as exc:
        raise ConfigError(f"observable: {exc}") from None
    vals = fillscheme._exact_values(f, system)
    ok = all(vals[x] == g[x] - g[system.step(x, 1)] for x in range(system.N))
    body = {"g": [_num(v) for v in g], "exact": ok}
    return Outcome({"coboundary.json": _dump(body)}, ok)


def _lemma(cfg, mode):
    fn = combinatorics.lemma1_exhaustive if mode == 1 else combinatorics.lemma4_exhaustive
    rep = fn(cfg.a)
    return Outcome({f"lemma{mode}.json": _dump(rep.to_dict(timing=False))}, rep.violations == 0,
                   f"{rep.violations} violations over {rep.sets_checked} sets ({rep.elapsed_ms:.1f} ms)")


def _lemma2(cfg):
    system, f = _setup(cfg)
    a = cfg.a
    if cfg.n0 is None or cfg.p is None:
        N, p = combinatorics.pilot_lemma2(system, f, a, seed=derive_seed(cfg.seed, 1))
        N = N if cfg.n0 is None else cfg.n0
        p = p if cfg.p is None else cfg.p
    else:
        N, p = cfg.n0, cfg.p
    V = combinatorics.BilateralNonpositive(f, N, combinatorics.lemma2_horizon(a, p))
    batch = system.sample_batch(cfg.seed, cfg.sample_count)
    pts = [_start(cfg, system)] if cfg.point is not None else \
        [system.point(batch, t) for t in range(cfg.sample_count)]
    try:
        reps = [combinatorics.lemma2_trace(system, x, f, N, p, V, a) for x in pts]
    except (DensityTooLow, WitnessNotFound) as exc:
        raise ConfigError(f"hypothesis not met: {exc}") from None
    body = {"N": N, "p": p, "a": a, "reports": [r.to_dict() for r in reps]}
    ok = all(r.all_hold for r in reps)
    return Outcome({"lemma2trace.json": _dump(body)}, ok)


def _furstenberg(cfg):
    tri = recurrence.CharacterTriple(tuple(cfg.triple))
    G = recurrence.KroneckerGroup()
    u, v, w = tri.characters()
    n = cfg.horizon
    lhs = recurrence.furstenberg_lhs(G, u, v, w, n, cfg.sample_count, derive_seed(cfg.seed, 0))
    rhs = recurrence.furstenberg_rhs(G, u, v, w, cfg.sample_count, derive_seed(cfg.seed, 1))
    cl, cr = recurrence.furstenberg_character(tri, GOLDEN_ALPHA, n)
    bound = recurrence.geometric_bound(tri, GOLDEN_ALPHA, n)
    se = math.hypot(lhs.std_error, rhs.std_error)
    ok = abs(lhs.value - rhs.value) <= 3 * se and abs(cl - cr) <= bound
    body = {"triple": list(tri.k), "lhs": lhs.to_dict(), "rhs": rhs.to_dict(),
            "closed_form": {"lhs": [cl.real, cl.imag], "rhs": cr, "bound": bound}}
    return Outcome({"furstenberg.json": _dump(body)}, ok)


def _en_a(cfg):
    system, f = _setup(cfg)
    level = -0.9 if cfg.level is None else float(cfg.level)
    n0 = 100 if cfg.n0 is None else cfg.n0
    est = recurrence.estimate_EN_a(system, f, n0, level, cfg.horizon, cfg.sample_count, cfg.seed)
    body = {"estimate": est, "a": level, "N": n0, "horizon": cfg.horizon,
            "samples": cfg.sample_count, "seed": cfg.seed}
    return Outcome({"en_a.json": _dump(body)}, True, f"estimate {est}")


_RUNNERS = {
    "trace": _trace, "classify": _classify, "oscillate": _oscillate, "dominate": _dominate,
    "filling": _filling, "coboundary": _coboundary, "lemma1": lambda c: _lemma(c, 1),
    "lemma4": lambda c: _lemma(c, 4), "lemma2trace": _lemma2, "furstenberg": _furstenberg,
    "en_a": _en_a,
}


def run(cfg: RunConfig, quiet: bool = False) -> int:
    """Execute one experiment and write its report files under ``cfg.out``."""
    validate(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        outcome = _RUNNERS[cfg.kind](cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in outcome.files.items():
        (out / name).write_text(text)
    if not quiet:
        status = "ok" if outcome.contract_ok else "CONTRACT VIOLATED"
        print(f"{cfg.kind}: {status}" + (f" ({outcome.summary})" if outcome.summary else ""))
        for name in outcome.files:
            print(f"  wrote {out / name}")
    return EXIT_OK if outcome.contract_ok else EXIT_CONTRACT


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bilateral",
                                     description="Forward, backward and bilateral ergodic averages lab.")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("--config", type=Path, help="JSON run configuration")
    r.add_argument("--kind", choices=KINDS)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--horizon", type=int)
    r.add_argument("--samples", type=int, dest="sample_count")
    r.add_argument("--quiet", action="store_true")

    s = sub.add_parser("suite", help="run the acceptance battery")
    s.add_argument("name", choices=("quick", "full"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--only", action="append", choices=list(suite.CRITERIA), help="restrict to a row (repeatable)")
    s.add_argument("--quiet", action="store_true")
    return parser


def _run_command(args) -> int:
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"{args.config}: {exc.strerror}") from None
        cfg = parse_config(text, str(args.config))
    else:
        cfg = RunConfig()
    for name in ("kind", "seed", "out", "horizon", "sample_count"):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    validate(cfg)
    return run(cfg, args.quiet)


def _suite_command(args) -> int:
    echo = None if args.quiet else print
    results = suite.run_suite(args.name, args.seed, args.only, echo)
    report = suite.suite_report(results, args.name, args.seed)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"suite_{args.name}.json").write_text(report)
    failed = [r.id for r in results if not r.passed]
    if not args.quiet:
        print(f"{len(results) - len(failed)}/{len(results)} rows passed")
    return EXIT_CONTRACT if failed else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "run":
            return _run_command(args)
        return _suite_command(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BilateralError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Pilot runs that fix the thresholds used by the acceptance battery.

Run from the repository root:  python3 scripts/pilot.py
Writes pilot/heavy_tail.json and pilot/passage_replay.json.  The pilot sample (seed 101)
is disjoint from the seeds the suite derives for its own rows.
"""
import json
from pathlib import Path

import numpy as np

from bilateral import combinatorics, suite
from bilateral.dynsys import CircleRotation, Odometer, make_system
from bilateral.observables import Constant, ScaledSum, SmoothCircle, make_coboundary, make_prop1_f

OUT = Path(__file__).resolve().parent.parent / "pilot"


def heavy_tail_pilot(points=100, N=4 ** 7):
    system = make_system(Odometer())
    batch = system.sample_batch(suite.PILOT_SEED, points)
    mins, maxs = suite.heavy_tail_extremes(system, make_prop1_f(), batch, points, N)
    q = [0.0, 0.05, 0.1, 0.5, 0.9, 1.0]
    # thresholds far inside the observed spread; the heavy tail of u moves
    # individual values by orders of magnitude, so only the sign pattern is robust
    return {
        "seed": suite.PILOT_SEED, "points": points, "N": N,
        "min_a_plus_quantiles": dict(zip(map(str, q), np.quantile(mins, q).tolist())),
        "max_a_minus_quantiles": dict(zip(map(str, q), np.quantile(maxs, q).tolist())),
        "thresholds": {"low": suite.HEAVY_TAIL_LOW, "high": suite.HEAVY_TAIL_HIGH,
                       "fraction": suite.HEAVY_TAIL_FRACTION},
        "pilot_fraction_passing": float(np.mean((mins <= suite.HEAVY_TAIL_LOW) & (maxs >= suite.HEAVY_TAIL_HIGH))),
    }


def passage_pilot():
    system = make_system(CircleRotation())
    f = ScaledSum(((1.0, Constant(-1.0)), (1.0, make_coboundary(SmoothCircle("cos")))))
    out = {}
    for a in (2 ** 10, 2 ** 12):
        N, p = combinatorics.pilot_lemma2(system, f, a, seed=suite.PILOT_SEED)
        out[str(a)] = {"N": N, "p": p, "horizon": combinatorics.lemma2_horizon(a, p)}
    return {"seed": suite.PILOT_SEED, "observable": "-1 + cos - cos o T", "choices": out}


def main():
    OUT.mkdir(exist_ok=True)
    for name, body in (("heavy_tail", heavy_tail_pilot()), ("passage_replay", passage_pilot())):
        text = json.dumps(body, indent=2, sort_keys=True) + "\n"
        (OUT / f"{name}.json").write_text(text)
        print(text)


if __name__ == "__main__":
    main()

import csv
import json

import pytest

from bilateral import averages, cli, suite


def _write(tmp_path, body, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(body, indent=2))
    return str(path)


def test_exhaustive_kind_run(tmp_path):
    cfg = _write(tmp_path, {"kind": "lemma1", "a": 8, "out": str(tmp_path / "out")})
    assert cli.main(["run", "--config", cfg, "--quiet"]) == cli.EXIT_OK
    rep = json.loads((tmp_path / "out" / "lemma1.json").read_text())
    assert rep["violations"] == 0 and rep["a"] == 8 and "elapsed_ms" not in rep


def test_residue_one_trace_has_zero_bilateral_column(tmp_path):
    cfg = _write(tmp_path, {
        "kind": "trace", "horizon": 500, "out": str(tmp_path / "out"),
        "system": {"kind": "ProductZmCircle"}, "observable": {"kind": "RemarksF"},
        "point": {"residue": 1, "frac": 12345678901234567},
    })
    assert cli.main(["run", "--config", cfg, "--quiet"]) == cli.EXIT_OK
    rows = list(csv.DictReader((tmp_path / "out" / "trace.csv").open()))
    assert len(rows) == 500 and all(float(r["b"]) == 0.0 for r in rows)


@pytest.mark.parametrize("kind", ["trace", "classify", "oscillate", "dominate", "furstenberg", "en_a"])
def test_reruns_are_byte_identical(tmp_path, kind):
    outs = []
    for rep in range(2):
        out = tmp_path / f"out{rep}"
        assert cli.main(["run", "--kind", kind, "--seed", "7", "--horizon", "300", "--samples", "200",
                         "--out", str(out), "--quiet"]) in (cli.EXIT_OK, cli.EXIT_CONTRACT)
        outs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert outs[0] and outs[0] == outs[1]


def test_filling_and_coboundary_kinds(tmp_path):
    base = {"system": {"kind": "CyclicRotation", "N": 3, "step": 1},
            "observable": {"kind": "TableLookup", "values": [-1, 2, -2]}}
    cfg = _write(tmp_path, dict(base, kind="filling", out=str(tmp_path / "f")))
    assert cli.main(["run", "--config", cfg, "--quiet"]) == cli.EXIT_OK
    cfg = _write(tmp_path, dict(base, kind="coboundary", out=str(tmp_path / "c")))
    assert cli.main(["run", "--config", cfg, "--quiet"]) == cli.EXIT_USAGE


@pytest.mark.parametrize("body,needle", [
    ('{\n  "kind": "trace",\n  "horizon": "ten"\n}', ":3: field 'horizon'"),
    ('{\n  "kind": "trace",\n  "colour": 1\n}', ":3: unknown field 'colour'"),
    ('{\n  "kind": "bogus"\n}', ":2: kind"),
    ('{\n  "q": -1\n}', ":2: q"),
    ('{\n  "seed": true\n}', ":2: field 'seed'"),
    ('{\n  "observable": {"kind": "Nope"}\n}', ":2: observable"),
    ('{"kind": ', "invalid JSON"),
])
def test_config_errors_are_diagnosed(tmp_path, capsys, body, needle):
    path = tmp_path / "bad.json"
    path.write_text(body)
    assert cli.main(["run", "--config", str(path)]) == cli.EXIT_USAGE
    assert needle in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == cli.EXIT_USAGE
    assert cli.main(["frobnicate"]) == cli.EXIT_USAGE
    assert cli.main(["run", "--kind", "trace", "--horizon", "0"]) == cli.EXIT_USAGE


def test_suite_report_written(tmp_path):
    out = tmp_path / "s"
    assert cli.main(["suite", "quick", "--only", "sumset_wide", "--only", "filling", "--out", str(out),
                     "--quiet"]) == cli.EXIT_OK
    report = json.loads((out / "suite_quick.json").read_text())
    assert [r["id"] for r in report["rows"]] == ["sumset_wide", "filling"]


def test_flipped_backward_sign_is_caught(tmp_path, monkeypatch, capsys):
    def mutated(fwd, bwd):
        return (fwd[0] + fwd[1]) - (bwd[0] + bwd[1])

    monkeypatch.setattr(averages, "_bilateral_sums", mutated)
    assert cli.main(["suite", "quick", "--out", str(tmp_path)]) == cli.EXIT_CONTRACT
    lines = capsys.readouterr().out.splitlines()
    status = {ln.split()[1]: ln.split()[0] for ln in lines if ln.startswith(("PASS", "FAIL"))}
    assert status["symmetric_zero"] == "FAIL" and status["identities"] == "FAIL"
    assert status["sumset_wide"] == "PASS"

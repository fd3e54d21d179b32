import json
import math

import numpy as np
import pytest

from walkbench import cli
from walkbench.cli import main
from walkbench.configurations import ConfigSpec, generate
from walkbench.engine import algorithm_b, run
from walkbench.io import (
    CSV_HEADER,
    ExperimentError,
    load_experiment,
    parse_experiment,
    read_trace_csv,
    write_trace_csv,
)


def write_json(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return path


def grid_exp(tmp_path, name="exp.json", **extra):
    obj = {"topology": "grid", "n": 3, "algorithm": "b", "config": "diag:0", "steps": 50}
    obj.update(extra)
    return write_json(tmp_path / name, obj)


# ---------------------------------------------------------------- experiment files


def test_parse_presets_and_custom():
    exp = parse_experiment({"topology": "grid", "n": 4, "algorithm": "A", "config": "antidiag:1"})
    assert exp.steps is None and exp.spec.space.dim == 64
    cyc = parse_experiment(
        {
            "topology": "cycle",
            "n": 8,
            "algorithm": "custom",
            "coins": {"unmarked": "paulix", "marked": "q(0.3,1.0,2.0)"},
            "shift": "cycle-moving",
            "config": "explicit:(0)",
            "steps": 5,
            "snapshots": "every:2",
            "seed": 7,
        }
    )
    assert str(cyc.spec.shift) == "cycle-moving"
    assert cyc.snapshots.every == 2
    two = parse_experiment(
        {
            "topology": "grid",
            "n": 3,
            "algorithm": "custom",
            "coins": {
                "odd": {"unmarked": "grover4", "marked": "negid4"},
                "even": {"unmarked": "grover4", "marked": "fourier4"},
            },
            "config": "diag:0",
        }
    )
    assert two.spec.space.dim == 16 * 9


@pytest.mark.parametrize(
    "raw, key",
    [
        ({"topology": "grid", "n": 3, "algorithm": "a", "config": "diag:0", "colour": 1}, "colour"),
        ({"topology": "grid", "n": 3, "algorithm": "a"}, "config"),
        ({"topology": "torus", "n": 3, "algorithm": "a", "config": "diag:0"}, "topology"),
        ({"topology": "grid", "n": 1, "algorithm": "a", "config": "diag:0"}, "n"),
        ({"topology": "grid", "n": "3", "algorithm": "a", "config": "diag:0"}, "n"),
        ({"topology": "grid", "n": 3, "algorithm": "z", "config": "diag:0"}, "algorithm"),
        ({"topology": "grid", "n": 3, "algorithm": "a", "config": "diag"}, "config"),
        ({"topology": "grid", "n": 3, "algorithm": "a", "config": "diag:0", "steps": -1}, "steps"),
        ({"topology": "grid", "n": 3, "algorithm": "a", "config": "diag:0", "snapshots": "some"}, "snapshots"),
        ({"topology": "grid", "n": 3, "algorithm": "a", "config": "diag:0", "coins": {}}, "coins"),
        ({"topology": "cycle", "n": 3, "algorithm": "a", "config": "explicit:0"}, "algorithm"),
        ({"topology": "cycle", "n": 3, "algorithm": "custom", "config": "explicit:0",
          "coins": {"unmarked": "paulix", "marked": "spin"}}, "coins"),
        ({"topology": "cycle", "n": 3, "algorithm": "custom", "config": "explicit:0",
          "coins": {"unmarked": "paulix", "marked": "hadamard"}, "shift": "grid-flipflop"}, "shift"),
        ({"topology": "grid", "n": 3, "algorithm": "custom", "config": "diag:0",
          "coins": {"unmarked": "paulix", "marked": "hadamard"}}, "coins"),
    ],
)
def test_invalid_experiments_name_the_key(raw, key):
    with pytest.raises(ExperimentError) as info:
        parse_experiment(raw)
    assert info.value.key == key
    assert repr(key) in str(info.value)


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ExperimentError, match="invalid JSON"):
        load_experiment(bad)
    with pytest.raises(ExperimentError, match="cannot read"):
        load_experiment(tmp_path / "missing.json")
    with pytest.raises(ExperimentError, match="JSON object"):
        load_experiment(write_json(tmp_path / "list.json", [1, 2]))


# ---------------------------------------------------------------- CSV


def test_csv_round_trip(tmp_path):
    trace = run(algorithm_b(3, generate(ConfigSpec.diagonal(3, 0))), 40, "none")
    path = write_trace_csv(trace, tmp_path / "sub" / "t.csv")
    back = read_trace_csv(path)
    assert back.steps == 40
    for a, b in ((trace.prob, back.prob), (trace.coherence, back.coherence)):
        assert np.allclose(a, b, rtol=1e-11, atol=0)
    assert np.all(np.abs(back.norm_drift - trace.norm_drift) <= 1e-11 * np.abs(trace.norm_drift) + 1e-300)
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.split(b"\n")[0].decode() == ",".join(CSV_HEADER)


def test_read_rejects_foreign_csv(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="header"):
        read_trace_csv(p)


# ---------------------------------------------------------------- run


def test_run_algorithm_b(tmp_path, capsys):
    exp = grid_exp(tmp_path)
    assert main(["run", str(exp)]) == 0
    out = capsys.readouterr().out
    assert "at step 27" in out
    value = float(out.split("max_prob=")[1].split()[0])
    assert abs(value - 0.5103) <= 1e-3
    rows = (tmp_path / "exp.csv").read_text().splitlines()
    assert len(rows) == 52
    step27 = rows[28].split(",")
    assert step27[0] == "27"
    assert len(step27[1].replace(".", "").lstrip("0")) <= 12


def test_run_algorithm_a_is_flat(tmp_path):
    exp = grid_exp(tmp_path, algorithm="a", n=16, steps=150, output=str(tmp_path / "a16.csv"))
    assert main(["run", str(exp)]) == 0
    trace = read_trace_csv(tmp_path / "a16.csv")
    assert np.max(np.abs(trace.prob - 0.0625)) <= 1e-9


def test_run_is_byte_deterministic(tmp_path):
    exp = grid_exp(tmp_path, algorithm="c", steps=30)
    main(["run", str(exp), "--output", str(tmp_path / "one.csv")])
    main(["run", str(exp), "--output", str(tmp_path / "two.csv")])
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()


def test_run_invalid_file_exit_code(tmp_path, capsys):
    exp = grid_exp(tmp_path, wobble=True)
    assert main(["run", str(exp)]) == 2
    assert "'wobble'" in capsys.readouterr().err


def test_run_requires_steps(tmp_path, capsys):
    exp = write_json(tmp_path / "e.json", {"topology": "grid", "n": 3, "algorithm": "a", "config": "diag:0"})
    assert main(["run", str(exp)]) == 2
    assert "'steps'" in capsys.readouterr().err


def test_snapshot_refusal(tmp_path, capsys):
    exp = grid_exp(tmp_path, algorithm="a", n=501, steps=1, snapshots="all")
    assert main(["run", str(exp)]) == 2
    assert "snapshots refused" in capsys.readouterr().err
    assert main(["classify", str(exp)]) == 2


def test_health_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "NORM_TOLERANCE", 0.0)
    assert main(["run", str(grid_exp(tmp_path, steps=5))]) == 1


# ---------------------------------------------------------------- classify


def test_classify_even_double_diagonal(tmp_path, capsys):
    exp = write_json(tmp_path / "dd6.json", {"topology": "grid", "n": 6, "algorithm": "a", "config": "ddiag:0,3"})
    assert main(["classify", str(exp)]) == 0
    out = capsys.readouterr().out
    assert "label: Exceptional" in out
    assert "horizon: 18" in out
    assert "period: 6" in out
    assert "antiperiod: 3" in out


def test_classify_odd_double_diagonal_reports_computed_period(tmp_path, capsys):
    exp = grid_exp(tmp_path, algorithm="a", n=7, config="ddiag:0,3", steps=60)
    assert main(["classify", str(exp)]) == 0
    out = capsys.readouterr().out
    assert "label: Exceptional" in out
    assert "period: 24" in out


def test_classify_cycle_hadamard(tmp_path, capsys):
    exp = write_json(
        tmp_path / "xh.json",
        {
            "topology": "cycle",
            "n": 8,
            "algorithm": "custom",
            "coins": {"unmarked": "paulix", "marked": "hadamard"},
            "config": "explicit:(0)",
        },
    )
    assert main(["classify", str(exp)]) == 0
    out = capsys.readouterr().out
    assert "label: GeneralizedExceptional" in out
    assert "period" not in out


# ---------------------------------------------------------------- coherence


def test_coherence_hadamard(capsys):
    assert main(["coherence", "--n", "8", "--rho", "0.5", "--theta", "0", "--phi", "0", "--steps", "7"]) == 0
    captured = capsys.readouterr()
    lines = captured.out.strip().splitlines()
    assert lines[0] == "step,simulated,closed_form,abs_error"
    assert len(lines) == 9
    assert float(lines[1].split(",")[2]) == 15
    assert all(float(row.split(",")[3]) < 1e-8 for row in lines[1:])
    assert "max_abs_error" in captured.err


def test_coherence_constant_case(tmp_path, capsys):
    out = tmp_path / "c.csv"
    args = ["coherence", "--n", "4", "--rho", "0", "--theta", "0", "--phi", "0", "--steps", "3"]
    assert main(args + ["--output", str(out)]) == 0
    rows = out.read_text().strip().splitlines()[1:]
    assert [float(r.split(",")[2]) for r in rows] == pytest.approx([7, 7, 7, 7], abs=1e-12)
    assert "max_abs_error" in capsys.readouterr().out


def test_coherence_random_n16(rng, capsys):
    rho, theta, phi = rng.uniform(0, 1), rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)
    args = ["coherence", "--n", "16", "--rho", str(rho), "--theta", str(theta), "--phi", str(phi)]
    assert main(args + ["--steps", "15"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()[1:]
    assert max(float(r.split(",")[3]) for r in rows) < 1e-8


@pytest.mark.parametrize("extra", [["--steps", "8"], ["--steps", "3", "--rho", "1.5"]])
def test_coherence_errors(extra, capsys):
    base = {"--n": "8", "--rho": "0.5", "--theta": "0", "--phi": "0"}
    for k, v in zip(extra[::2], extra[1::2]):
        base[k] = v
    args = ["coherence"] + [x for kv in base.items() for x in kv]
    assert main(args) == 2
    assert capsys.readouterr().err


# ---------------------------------------------------------------- sweep


def test_sweep_sizes_and_algorithms(tmp_path, capsys):
    tpl = grid_exp(tmp_path, name="tpl.json", steps=20)
    out = tmp_path / "out"
    rc = main(["sweep", str(tpl), "--vary", "n=3,16", "--vary", "algorithm=a,b", "--out-dir", str(out)])
    assert rc == 0
    index = json.loads((out / "index.json").read_text())
    assert len(index) == 4
    assert len(list(out.glob("*.csv"))) == 4
    assert {(e["params"]["n"], e["params"]["algorithm"]) for e in index} == {
        ("3", "a"), ("3", "b"), ("16", "a"), ("16", "b")
    }
    for e in index:
        assert (out / e["path"]).exists()


def test_sweep_diagonal_offsets_are_flat(tmp_path):
    tpl = write_json(
        tmp_path / "tpl.json",
        {"topology": "grid", "n": 5, "algorithm": "a", "config": "diag:{alpha}", "steps": 15},
    )
    out = tmp_path / "o"
    assert main(["sweep", str(tpl), "--vary", "alpha=0..4", "--out-dir", str(out)]) == 0
    csvs = sorted(out.glob("*.csv"))
    assert len(csvs) == 5
    for path in csvs:
        assert np.max(np.abs(read_trace_csv(path).prob - 0.2)) <= 1e-9


def test_sweep_double_diagonal_separations(tmp_path):
    # every separation is Exceptional under the literal walk (see the dense check in
    # test_configurations); the sweep must report what the walk does
    tpl = write_json(
        tmp_path / "tpl.json",
        {"topology": "grid", "n": 6, "algorithm": "a", "config": "ddiag:0,{k}", "steps": 24},
    )
    out = tmp_path / "o"
    assert main(["sweep", str(tpl), "--vary", "k=1..3", "--classify", "--jobs", "2", "--out-dir", str(out)]) == 0
    index = json.loads((out / "index.json").read_text())
    assert [e["params"]["k"] for e in index] == ["1", "2", "3"]
    assert all(e["label"] == "Exceptional" for e in index)
    assert index[2]["period"] == 6


def test_sweep_cap(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("WALKBENCH_MAX_SWEEP", "3")
    tpl = grid_exp(tmp_path, name="tpl.json", steps=2)
    assert main(["sweep", str(tpl), "--vary", "n=2..5", "--out-dir", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "4 runs" in err and "cap of 3" in err
    assert not (tmp_path / "o").exists()


def test_sweep_validates_every_point_first(tmp_path, capsys):
    tpl = grid_exp(tmp_path, name="tpl.json", steps=2)
    assert main(["sweep", str(tpl), "--vary", "algorithm=a,q", "--out-dir", str(tmp_path / "o")]) == 2
    assert "'algorithm'" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


@pytest.mark.parametrize("vary", ["n", "n=", "=1,2", "n=5..3"])
def test_sweep_bad_vary(tmp_path, vary):
    tpl = grid_exp(tmp_path, name="tpl.json", steps=2)
    assert main(["sweep", str(tpl), "--vary", vary]) == 2

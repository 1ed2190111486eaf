import json
import subprocess
import sys

import numpy as np
import pytest

from sparse_tucker import dtf
from sparse_tucker.cli import CSV_COLUMNS, bench_sizes, main, read_bench_csv
from sparse_tucker.synthetic import ExperimentSpec, make_instance, save_instance


def generate(tmp_path, name="inst", *extra):
    out = tmp_path / name
    code = main(["generate", "--J", "8,8,8", "--I", "6,6,6", "--k", "5", "--seed", "7",
                 "-o", str(out), *extra])
    assert code == 0
    return out


def test_generate_files(tmp_path):
    out = generate(tmp_path)
    assert sorted(p.name for p in out.iterdir()) == [
        "A1.dtf", "A2.dtf", "A3.dtf", "X.dtf", "Y.dtf", "instance.json"]
    assert dtf.read(out / "Y.dtf").shape == (6, 6, 6)
    assert len(json.loads((out / "instance.json").read_text())["true_support"]) == 5


def test_generate_byte_identical(tmp_path):
    a, b = generate(tmp_path, "a"), generate(tmp_path, "b")
    for p in a.iterdir():
        assert p.read_bytes() == (b / p.name).read_bytes()


def test_generate_rejects_wide(tmp_path, capsys):
    assert main(["generate", "--J", "4", "--I", "6", "-o", str(tmp_path / "x")]) == 2
    assert "I exceeds J" in capsys.readouterr().err


def test_bad_flag_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["recover", str(tmp_path), "--method", "nope"])
    assert exc.value.code == 2


def test_recover_report(tmp_path):
    inst = generate(tmp_path)
    report = tmp_path / "report.json"
    assert main(["recover", str(inst), "--method", "four_stage", "-o", str(report)]) == 0
    data = json.loads(report.read_text())
    assert 0.0 <= data["metrics"]["support_f1"] <= 1.0
    assert set(data["stage_times"]) == {"fista", "augment", "fista_projected", "postprocess"}
    assert data["config"]["lam"] == 500.0 and data["config"]["R"] == 20


def test_config_file_and_override(tmp_path):
    inst = generate(tmp_path)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lambda": 300, "tol": 0.1, "R": "inf"}))
    report = tmp_path / "r.json"
    assert main(["recover", str(inst), "--config", str(cfg), "--tol", "0.2",
                 "-o", str(report)]) == 0
    echo = json.loads(report.read_text())["config"]
    assert echo["lam"] == 300 and echo["tol"] == 0.2 and echo["R"] == "inf"


def test_unknown_config_key(tmp_path):
    inst = generate(tmp_path)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lamda": 300}))
    assert main(["recover", str(inst), "--config", str(cfg)]) == 2


def test_guard_exit_code(tmp_path, capsys):
    # empty noiseless core keeps the instance cheap; P would be 40^3 x 28^3
    spec = ExperimentSpec(J=40, I=28, support_size=0, noise_param=0.0)
    inst = make_instance(spec, 0)
    save_instance(inst, tmp_path / "big")
    assert main(["recover", str(tmp_path / "big"), "--method", "fista_mvpp"]) == 3
    assert "tensor path" in capsys.readouterr().err


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numerical_exit_code(tmp_path):
    # step 1/L = 1000 makes the iteration diverge
    inst = generate(tmp_path)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"L": 1e-3}))
    assert main(["recover", str(inst), "--method", "fista", "--config", str(cfg),
                 "--max-iters", "2000"]) == 4


def test_missing_instance(tmp_path):
    assert main(["recover", str(tmp_path / "nowhere")]) == 1


def test_bench_single_row(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--J-list", "12", "--replicates", "2", "--methods", "fista",
                 "-o", str(out)]) == 0
    rows = read_bench_csv(out)
    assert len(rows) == 1
    row = rows[0]
    assert (row["J"], row["I"], row["method"], row["replicates"]) == (12, 8, "fista", 2)
    assert row["time_mean"] is None and 0 <= row["f1_mean"] <= 1
    assert out.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)


def test_bench_ordering_and_determinism(tmp_path):
    args = ["bench", "--J-list", "10,6", "--replicates", "2", "--methods",
            "four_stage,fista", "--seed", "5", "--k", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["-o", str(a)]) == 0
    assert main(args + ["-o", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    keys = [(r["J"], r["method"]) for r in read_bench_csv(a)]
    assert keys == [(6, "fista"), (6, "four_stage"), (10, "fista"), (10, "four_stage")]


def test_bench_timings(tmp_path):
    out, times = tmp_path / "b.csv", tmp_path / "t.csv"
    assert main(["bench", "--J-list", "6", "--replicates", "2", "--methods", "fista",
                 "--no-deterministic", "-o", str(out), "--timings-out", str(times)]) == 0
    assert read_bench_csv(out)[0]["time_mean"] > 0
    assert len(times.read_text().splitlines()) == 3


def test_bench_partial_flush_before_guard(tmp_path):
    out = tmp_path / "b.csv"
    code = main(["bench", "--J-list", "6,40", "--I", "4,28", "--replicates", "1",
                 "--methods", "fista_mvpp", "--k", "2", "-o", str(out)])
    assert code == 3
    assert [r["J"] for r in read_bench_csv(out)] == [6]


def test_bench_sizes():
    assert bench_sizes([40], 0.68, None) == [(40, 27)]
    assert bench_sizes([40], 0.68, [28]) == [(40, 28)]
    assert bench_sizes([10, 20], 0.7, None) == [(10, 7), (20, 14)]
    with pytest.raises(ValueError):
        bench_sizes([10, 20], 0.7, [7])


def test_console_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "sparse_tucker.cli", "generate", "--J", "3",
                          "--I", "2", "--k", "1", "-o", str(tmp_path / "g")],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert np.isfinite(dtf.read(tmp_path / "g" / "Y.dtf")).all()

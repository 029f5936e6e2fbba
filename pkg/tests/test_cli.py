import io
import json

import numpy as np
import pytest

from randhorizon.bounds.payoffs import quadratic_payoff_function
from randhorizon.cli import load_payoff_table, run
from randhorizon.errors import InputError


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


DIGITAL = ("exact-digital", "--K", "100", "--x", "95", "--sigma2", "0.2", "--T", "0.5")


def test_exact_digital_csv():
    code, out, _ = call(*DIGITAL)
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == "K,x,sigma2,T,value,oracle,abs_err"
    assert row.split(",")[4] == "0.698249"


def test_jsonl_round_trips_inputs():
    code, out, _ = call(*DIGITAL, "--format", "jsonl", "--digits", "10")
    assert code == 0
    rec = json.loads(out)
    assert float(rec["K"]) == 100.0 and float(rec["sigma2"]) == 0.2
    assert float(rec["value"]) == pytest.approx(0.698249, abs=5e-7)


def test_byte_identical_reruns():
    argv = ("sandwich", "--x", "100", "--sigma", "0.2", "--T", "0.5", "--n", "3", "--mc-paths", "5000", "--seed", "4")
    assert call(*argv)[1] == call(*argv)[1]


def test_negative_horizon_is_config_error():
    code, out, err = call("exact-digital", "--K", "100", "--x", "95", "--sigma2", "0.2", "--T", "-1")
    assert code == 2 and out == "" and "T" in err


def test_missing_argument_is_config_error():
    assert call("exact-digital", "--K", "100")[0] == 2


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# digital\nK = 100\nx = 95\nsigma2 = 0.4\nT = 0.5\n")
    a = call("exact-digital", "--config", str(cfg))[1]
    b = call("exact-digital", "--config", str(cfg), "--sigma2", "0.2")[1]
    assert a.splitlines()[1].split(",")[4] == "0.833306"
    assert b.splitlines()[1].split(",")[4] == "0.698249"


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("K = 100\nvolatility = 0.2\n")
    code, _, err = call("exact-digital", "--config", str(cfg))
    assert code == 2 and "volatility" in err


def test_missing_config_file(tmp_path):
    assert call("exact-digital", "--config", str(tmp_path / "nope.cfg"))[0] == 2


def test_output_file(tmp_path):
    dest = tmp_path / "rows.csv"
    code, out, _ = call(*DIGITAL, "--output", str(dest))
    assert code == 0 and out == ""
    assert dest.read_text().startswith("K,x,sigma2,T")


def test_digital_scheme_row():
    code, out, _ = call("digital", "--K", "100", "--x", "95", "--sigma2", "0.2", "--T", "0.5", "--n", "10")
    assert code == 0
    cols = out.splitlines()[1].split(",")
    assert abs(float(cols[5]) - 0.6884) <= 2e-4


def test_put_without_boundary_exits_3():
    code, out, err = call("put", "--x", "100", "--r", "0", "--sigma", "0.2", "--T", "0.5", "--n", "3")
    assert code == 3 and out == "" and "stage 1" in err


def test_put_row():
    code, out, _ = call("put", "--x", "100", "--sigma", "0.2", "--T", "0.5", "--n", "5", "--binomial-steps", "2000")
    assert code == 0
    rec = dict(zip(*[line.split(",") for line in out.splitlines()]))
    assert abs(float(rec["value"]) - float(rec["oracle"])) < 0.2


@pytest.fixture
def payoff_file(tmp_path):
    xs = np.geomspace(1e-3, 1e3, 600)
    path = tmp_path / "quad.txt"
    path.write_text("# x h\n" + "\n".join(f"{float(a)!r}, {float(b)!r}" for a, b in zip(xs, quadratic_payoff_function(xs))))
    return path


def test_payoff_table_loader(payoff_file, tmp_path):
    xs, hs = load_payoff_table(str(payoff_file))
    assert len(xs) == 600 and hs[0] == 0.0
    bad = tmp_path / "bad.txt"
    bad.write_text("1 0\n0.5 1\n2 3\n3 4\n")
    with pytest.raises(InputError):
        load_payoff_table(str(bad))


def test_uvm_subcommand(payoff_file):
    code, out, err = call(
        "uvm", "--payoff", str(payoff_file), "--x0", "0.5", "--b0", "1",
        "--sigma1", "0.1", "--sigma2", "0.3", "--T", "1", "--n", "30", "--x", "1",
    )
    assert code == 0, err
    rec = dict(zip(*[line.split(",") for line in out.splitlines()]))
    assert abs(float(rec["value"]) - float(rec["oracle"])) < 2e-3
    assert 0.5 < float(rec["boundary"]) < 2.0


def test_rate_subcommand():
    code, out, _ = call("rate", "--K", "100", "--x", "95", "--sigma2", "0.2", "--T", "0.5", "--ns", "10,20,40")
    assert code == 0
    last = out.strip().splitlines()[-1].split(",")
    assert last[4] == "order" and float(last[5]) >= 0.8


def test_bad_ns_list():
    assert call("rate", "--K", "100", "--x", "95", "--sigma2", "0.2", "--T", "0.5", "--ns", "10,x")[0] == 2


def test_repro_table2(capsys):
    code, out, err = call("repro", "--table", "2")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 1 + 5
    assert "5.7954e-02" in out
    assert "0.512447" in err

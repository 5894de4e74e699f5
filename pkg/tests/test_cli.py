import io
import json
import subprocess
import sys

import pytest

from ellbinom import __version__
from ellbinom.cli import run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    doc = json.loads(out.getvalue()) if out.getvalue() else None
    return code, doc, err.getvalue()


def test_partitions():
    code, doc, _ = call("partitions", "--k", "4", "--max-parts", "4")
    assert code == 0 and doc["count"] == 5
    assert doc["partitions"][1] == [3, 1]
    assert doc["version"] == __version__
    assert doc["config"]["flags"] == {"k": 4, "max_parts": 4}


def test_jack_trace():
    code, doc, _ = call("jack", "--beta", "2", "--kappa", "1", "--x", "0.3,0.7")
    assert code == 0 and doc["value"] == pytest.approx(1.0, rel=1e-15)


def test_verify_theorem1():
    code, doc, _ = call("verify-theorem1", "--beta", "1", "--a", "3", "--x", "0.1,0.2",
                        "--generator", "gaussian:s=2", "--K", "40")
    rec = doc["record"]
    assert code == 0 and rec["passed"] and doc["ok"]
    assert rec["lhs"] == pytest.approx(2.6791838, rel=1e-7)
    assert rec["rhs"] == pytest.approx(2.6791838, rel=1e-7)
    assert doc["config"]["flags"]["generator"] == {"family": "gaussian", "s": 2.0, "c": 1.0}


def test_verification_failure_exit_code():
    # too few terms to reach the tolerance
    code, doc, _ = call("verify-theorem1", "--beta", "1", "--a", "3", "--x", "0.5,0.5", "--K", "4")
    assert code == 2 and not doc["record"]["passed"]


def test_hgf():
    code, doc, _ = call("hgf", "--p", "1", "--q", "0", "--a", "2", "--x", "0.5", "--K", "60")
    assert code == 0 and doc["result"]["value"] == pytest.approx(4.0, rel=1e-10)
    code, _, err = call("hgf", "--p", "1", "--q", "1", "--a", "2", "--x", "0.5")
    assert code == 1 and "--b" in err


def test_eval():
    code, doc, _ = call("eval", "--fn", "ln_mv_gamma", "--beta", "2", "--m", "2", "--a", "3")
    assert code == 0 and doc["value"] == pytest.approx(1.8378770664093453)
    code, doc, _ = call("eval", "--fn", "gen_pochhammer", "--beta", "1", "--a", "2", "--kappa", "2,1")
    assert doc["value"] == 9.0
    code, doc, _ = call("eval", "--fn", "coeffs", "--generator", "pearson7:p=40", "--m", "2", "--a", "3", "--K", "3")
    assert doc["coeffs"] == pytest.approx([1, -1, 1, -1], rel=1e-12)
    code, doc, _ = call("eval", "--fn", "deriv_moment", "--generator", "gaussian:s=2", "--a", "2", "--k", "1")
    assert doc["value"] == pytest.approx(-8.0)


@pytest.mark.parametrize("argv,needle", [
    (["jack", "--beta", "2", "--kappa", "1", "--x", "0.3", "--bogus"], "unrecognized"),
    (["nope"], "invalid choice"),
    (["jack", "--beta", "2", "--kappa", "1"], "--x"),
    (["jack", "--beta", "3", "--kappa", "1", "--x", "0.3"], "beta"),
    (["eval", "--fn", "ln_mv_gamma", "--beta", "2", "--m", "3", "--a", "1"], "i=2"),
    (["verify-theorem1", "--beta", "1", "--a", "3", "--x", "0.1", "--generator", "zeta:q=1"], "unknown generator"),
    (["verify-theorem1", "--beta", "1", "--a", "3", "--x", "0.1", "--K", "40",
      "--generator", "pearson7:p=20"], "diverges"),
    (["eval", "--fn", "coeffs", "--a", "2"], "--generator"),
])
def test_usage_and_domain_errors(argv, needle):
    code, doc, err = call(*argv)
    assert code == 1 and doc is None
    assert needle in err


MC_ARGS = ["mc-beta", "--beta", "1", "--m", "2", "--n1", "6", "--n2", "8",
           "--generators", "gaussian:s=2,pearson7:p=40,nu=2", "--N", "20000", "--seed", "42"]


def test_mc_beta_byte_identical(tmp_path):
    out = tmp_path / "report.json"
    assert run(MC_ARGS + ["--out", str(out)]) in (0, 2)
    first = out.read_bytes()
    run(MC_ARGS + ["--out", str(out)])
    assert out.read_bytes() == first
    doc = json.loads(first)
    assert doc["config"]["seed"] == 42 and doc["mc_config"]["seed"] == 42
    assert len(doc["config"]["flags"]["generators"]) == 2
    assert {"statistic", "N", "estimate", "reference", "std_error", "passed", "seed"} <= set(doc["reports"][0])


def test_mc_beta_csv(tmp_path):
    csv_path = tmp_path / "raw.csv"
    code, doc, _ = call(*MC_ARGS, "--no-sigma-check", "--csv", str(csv_path))
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "sample,draw,det,trace,lmax,u11,rot_u11"
    assert len(lines) == 1 + 2 * 20000
    assert code == (0 if doc["passed"] else 2)


def test_threads_do_not_change_reports():
    a = call(*MC_ARGS, "--threads", "1")[1]
    b = call(*MC_ARGS, "--threads", "4")[1]
    assert a["reports"] == b["reports"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ellbinom.cli", "jack", "--beta", "1", "--kappa", "2",
                           "--x", "1,1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"] == pytest.approx(8 / 3)

import json

import pytest

from lamexp.cli import main


def run_cli(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_levelset_multinacci_row_count(tmp_path, capsys):
    out = tmp_path / "level.csv"
    code, _, err = run_cli(
        ["levelset", "--multinacci", "2", "--n", "3", "--out", str(out)], capsys
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "index,value"
    assert len(lines) == 1 + 7
    assert "merged=7" in err


def test_levelset_byte_identical_reruns(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    argv = ["levelset", "--lambda", "0.6", "--n", "6", "--format", "json"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_json_schema(tmp_path, capsys):
    out = tmp_path / "o.json"
    code, _, _ = run_cli(
        [
            "proximity",
            "--lambda",
            "0.6",
            "--n",
            "4",
            "--k",
            "1",
            "--r",
            "1",
            "--format",
            "json",
            "--out",
            str(out),
        ],
        capsys,
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert set(payload) == {"config", "rows", "verification"}
    assert payload["config"]["command"] == "proximity"
    assert payload["config"]["n"] == 4
    assert payload["verification"] == {"asserted": [], "failed": []}
    assert payload["rows"][0]["tilde"] >= payload["rows"][0]["restricted"]


def test_perron_prints_mu(capsys):
    code, out, _ = run_cli(["beta", "perron", "--m", "2"], capsys)
    assert code == 0
    assert out.startswith("m,mu,mu_times_root")
    mu = float(out.splitlines()[1].split(",")[1])
    assert abs(mu - 1.6180339887) < 1e-9


def test_verify_proximity_inequality_exit_zero(capsys):
    code, out, _ = run_cli(
        [
            "verify",
            "proximity-inequality",
            "--lambda-grid",
            "5",
            "--n-max",
            "6",
            "--k-max",
            "1",
        ],
        capsys,
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("lambda_fraction,")
    assert all(line.endswith("true") for line in lines[1:])


def test_verify_translation(capsys):
    code, out, _ = run_cli(
        ["verify", "translation", "--trials", "300", "--seed", "5"], capsys
    )
    assert code == 0
    header, row = out.splitlines()
    assert header == "trials,seed,max_ratio,below_two"
    assert float(row.split(",")[2]) <= 4.0


def test_verify_rams(capsys):
    code, out, _ = run_cli(
        ["verify", "rams", "--families", "30", "--seed", "11", "--samples", "500"],
        capsys,
    )
    assert code == 0
    assert all(line.endswith("true") for line in out.splitlines()[1:])


def test_verify_cylinders(capsys):
    code, out, _ = run_cli(
        ["verify", "cylinders", "--trials", "10", "--seed", "3"], capsys
    )
    assert code == 0
    for line in out.splitlines()[1:]:
        assert line.split(",")[2] == "0"


def test_verify_tree(capsys):
    code, out, err = run_cli(
        [
            "verify",
            "tree",
            "--lambda",
            "0.55",
            "--alpha",
            "1.5",
            "--s",
            "0.5",
            "--depth",
            "8",
        ],
        capsys,
    )
    assert code == 0
    assert "completed_q=" in err
    assert out.splitlines()[0] == "n,block_q,nodes,delta,hat_delta,block_end"


def test_beta_digits_and_orbit(capsys):
    code, out, _ = run_cli(
        ["beta", "digits", "--beta", "2.0", "--x", "0.6875", "--n", "6"], capsys
    )
    assert code == 0
    assert out.splitlines()[1].endswith("101100")

    code, out, _ = run_cli(
        [
            "beta",
            "orbit",
            "--multinacci-reciprocal",
            "2",
            "--x",
            "0.0",
            "--kappa",
            "2.0",
            "--depth",
            "5",
        ],
        capsys,
    )
    assert code == 0
    assert len(out.splitlines()) == 1 + 5


def test_dimension_bounds(capsys):
    code, out, _ = run_cli(
        ["dimension", "bounds", "--multinacci", "2", "--alpha", "2.0", "--n", "10"],
        capsys,
    )
    assert code == 0
    row = out.splitlines()[1].split(",")
    lower, upper, inv_alpha = map(float, row)
    assert lower <= upper <= inv_alpha + 1e-12


def test_scan_exceptional(capsys):
    code, out, _ = run_cli(
        [
            "scan-exceptional",
            "--s",
            "0.05",
            "--n-min",
            "2",
            "--n-max",
            "4",
            "--k-max",
            "1",
            "--grid-points",
            "3",
        ],
        capsys,
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("lambda_fraction")
    assert all(line.endswith("false") for line in lines[1:])


def test_gamma_witness_cli(capsys):
    code, out, _ = run_cli(["gamma-witness", "--multinacci", "2"], capsys)
    assert code == 0
    assert out.splitlines()[1].startswith("true,11,2,")


def test_usage_error_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["levelset", "--n", "3"])  # missing lambda source
    assert exc.value.code == 2
    capsys.readouterr()

    # post-parse errors also report usage failures as exit 2
    code, _, err = run_cli(["levelset", "--lambda", "0.4", "--n", "3"], capsys)
    assert code == 2
    assert "error" in err


def test_level_cap_respected(capsys):
    code, _, err = run_cli(["levelset", "--lambda", "0.6", "--n", "29"], capsys)
    assert code == 2
    assert "cap" in err

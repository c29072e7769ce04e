import csv
import io
import subprocess
import sys

import pytest

from crowdship import cli
from crowdship.domain import DvSpec
from crowdship.scenario import GenSpec, generate_instance, save_instance

from builders import instance, line, pdo, spv


def rows(text):
    lines = text.splitlines()
    assert lines[0] == cli.METRICS_VERSION
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "small.json"
    save_instance(generate_instance(GenSpec(rows=5, cols=5, pdos=20, spvs=60, seed=7)), path)
    return str(path)


@pytest.fixture(scope="module")
def tiny_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "tiny.json"
    save_instance(generate_instance(GenSpec(rows=3, cols=5, pdos=5, spvs=4, seed=2)), path)
    return str(path)


def test_generate(tmp_path, capsys):
    out = tmp_path / "inst.json"
    code = cli.main(["generate", "--grid", "10x10", "--pdos", "200", "--spvs", "1200", "--depot", "center",
                     "--seed", "7", "-o", str(out)])
    assert code == 0 and out.exists()
    printed = capsys.readouterr().out.splitlines()
    assert printed[0] == str(out) and "pdos=200 spvs=1200" in printed[1]


def test_generate_explicit_depot(tmp_path, capsys):
    out = tmp_path / "inst.json"
    assert cli.main(["generate", "--planar", "30", "--pdos", "3", "--depot", "node:17", "-o", str(out)]) == 0
    assert "depot=17" in capsys.readouterr().out


def test_generate_requires_pdos(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["generate", "--grid", "3x3", "-o", str(tmp_path / "x.json")])
    assert exc.value.code == 2
    assert "--pdos" in capsys.readouterr().err


def test_generate_bad_grid(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["generate", "--grid", "3by3", "--pdos", "1", "-o", str(tmp_path / "x.json")])
    assert exc.value.code == 2


def test_solve_pure_dv(small, capsys):
    assert cli.main(["solve", small, "--spvs-limit", "0", "--no-timing"]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert row["spv_count"] == "0" and row["pdos_by_spv"] == "0"
    assert float(row["spv_cost"]) == 0.0 and float(row["spv_vmt"]) == 0.0
    assert row["pdos_by_dv"] == "20" and int(row["dv_count"]) >= 1


def test_solve_deterministic(small, capsys, tmp_path):
    sol = tmp_path / "sol.json"
    cli.main(["solve", small, "--no-timing", "--seed", "3", "-o", str(sol)])
    first = capsys.readouterr().out
    cli.main(["solve", small, "--no-timing", "--seed", "3"])
    assert capsys.readouterr().out == first
    assert sol.exists()
    assert list(rows(first)[0]) == cli.COLUMNS


def test_solve_with_oracle(tiny_file, capsys):
    assert cli.main(["solve", tiny_file, "--oracle", "--no-timing"]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert float(row["gap"]) >= -1e-9


def test_solve_oracle_too_large(small, capsys):
    assert cli.main(["solve", small, "--oracle"]) == 1
    assert "oracle" in capsys.readouterr().err


def test_solve_infeasible(tmp_path, capsys):
    path = tmp_path / "bad.json"
    save_instance(instance(line(4), pdos=[pdo(0, 1), pdo(5, 3, early=0, late=2)]), path)
    assert cli.main(["solve", str(path)]) == 3
    err = capsys.readouterr().err
    assert "culprits: 5" in err


def test_missing_file(tmp_path, capsys):
    assert cli.main(["solve", str(tmp_path / "nope.json")]) == 1
    assert capsys.readouterr().out == ""


def test_sweep_spv_counts(small, capsys, tmp_path):
    hist = tmp_path / "hist.csv"
    assert cli.main(["sweep", small, "--spv-counts", "0:60:20", "--no-timing", "--histogram", str(hist)]) == 0
    table = rows(capsys.readouterr().out)
    assert [r["value"] for r in table] == ["0", "20", "40", "60"]
    dvs = [int(r["dv_count"]) for r in table]
    assert dvs == sorted(dvs, reverse=True)
    assert float(table[-1]["total"]) <= float(table[0]["total"])
    h = rows(hist.read_text())
    assert all(int(r["bin_hi"]) - int(r["bin_lo"]) == cli.HISTOGRAM_BIN for r in h)
    assert sum(int(r["count"]) for r in h if r["value"] == "0") == 0


def test_sweep_parallel_keeps_order(small, capsys):
    cli.main(["sweep", small, "--spv-counts", "10,0,30", "--no-timing"])
    serial = capsys.readouterr().out
    cli.main(["sweep", small, "--spv-counts", "10,0,30", "--no-timing", "--jobs", "2"])
    assert capsys.readouterr().out == serial
    assert [r["value"] for r in rows(serial)] == ["10", "0", "30"]


def test_sweep_detour(small, capsys):
    assert cli.main(["sweep", small, "--detour", "20,25,30,35", "--no-timing"]) == 0
    pct = [float(r["feasible_spv_pct"]) for r in rows(capsys.readouterr().out)]
    assert pct == sorted(pct)


def test_sweep_depots_symmetric(tmp_path, capsys):
    # mirror image around node 3: depots at 2 and 4 see identical demand
    net = line(7)
    inst = instance(net, depot=2, pdos=[pdo(0, 0), pdo(1, 6), pdo(2, 3)], spvs=[spv(0, 0, 6), spv(1, 6, 0)],
                    dv_spec=DvSpec())
    path = tmp_path / "sym.json"
    save_instance(inst, path)
    assert cli.main(["sweep", str(path), "--depots", "node:2,node:4", "--no-timing"]) == 0
    a, b = rows(capsys.readouterr().out)
    assert a["total"] == b["total"] and a["dv_count"] == b["dv_count"]


def test_sweep_origins_at_depot(small, capsys):
    assert cli.main(["sweep", small, "--origins-at-depot", "--no-timing"]) == 0
    off, on = rows(capsys.readouterr().out)
    assert (off["value"], on["value"]) == ("0", "1")


def test_sweep_rejects_two_axes(small, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["sweep", small, "--spv-counts", "0:10:5", "--detour", "20"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        cli.main(["sweep", small])


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("CROWDSHIP_SEED", "42")
    assert cli.default_seed() == 42
    assert cli.build_parser().parse_args(["solve", "x"]).seed == 42


def test_module_entry_point(tiny_file):
    done = subprocess.run([sys.executable, "-m", "crowdship.cli", "solve", tiny_file, "--no-timing"],
                          capture_output=True, text=True)
    assert done.returncode == 0 and done.stdout.startswith(cli.METRICS_VERSION)

import csv
import io
import subprocess
import sys

import pytest

from dnapool import cli, corpus, primers


@pytest.fixture(scope="module")
def inputs(tmp_path_factory):
    d = tmp_path_factory.mktemp("inputs")
    c = corpus.acceptance_corpus()
    paths = {}
    for f in c.files[:4]:
        p = d / f.name
        p.write_bytes(f.data)
        paths[f.name] = p
    return paths


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write_pool(pool, inputs, method, capsys):
    return run(["write", "--method", method,
                "--tool", f"deflate-v1={inputs['jane.txt']},{inputs['leo.txt']}",
                "--tool", f"rle-v1={inputs['monalisa.bmp']}",
                inputs["cat.jpg"], "--pool", pool], capsys)


@pytest.mark.parametrize("method,rounds", [("1-1cs", 1), ("m-1ci", 2), ("1-mci", 1)])
def test_write_read(tmp_path, inputs, method, rounds, capsys):
    code, out, _ = write_pool(tmp_path / "pool", inputs, method, capsys)
    assert code == 0 and "total" in out
    assert (tmp_path / "pool" / "pool.dnapool").exists()
    assert (tmp_path / "pool" / "manifest.tsv").exists()
    for name in ("jane.txt", "monalisa.bmp"):
        dest = tmp_path / f"out-{name}"
        code, out, _ = run(["read", name, "--pool", tmp_path / "pool", "--out", dest], capsys)
        assert code == 0
        assert f"rounds={rounds}" in out
        assert dest.read_bytes() == inputs[name].read_bytes()
    code, out, _ = run(["read", "cat.jpg", "--pool", tmp_path / "pool"], capsys)
    assert "rounds=1" in out


def test_rewrite_is_golden(tmp_path, inputs, capsys):
    outs = []
    for d in ("a", "b"):
        write_pool(tmp_path / d, inputs, "1-mci", capsys)
        outs.append(run(["stats", "--pool", tmp_path / d], capsys)[1])
    for name in ("pool.dnapool", "manifest.tsv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert outs[0] == outs[1]
    assert "audit method=1-mci variant=corrected" in outs[0]


def test_pool_from_environment(tmp_path, inputs, capsys, monkeypatch):
    monkeypatch.setenv("DNAPOOL_HOME", str(tmp_path / "home"))
    code, _, _ = run(["write", "--method", "1-1cs", inputs["cat.jpg"]], capsys)
    assert code == 0 and (tmp_path / "home" / "pool.dnapool").exists()
    code, out, _ = run(["read", "1"], capsys)
    assert code == 0 and "rounds=1" in out


def test_usage_errors(tmp_path, inputs, capsys):
    assert run(["write", "--method", "2-2cs", inputs["cat.jpg"], "--pool", tmp_path], capsys)[0] == 2
    assert run(["write", "--method", "1-mci", "--tool", "lzma=x", "--pool", tmp_path], capsys)[0] == 2
    assert run(["cost", "--vary", "n", "--from", "5", "--to", "1"], capsys)[0] == 2
    assert run(["primers", "gen", "--gc-min", "0.9", "--gc-max", "0.1"], capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def test_not_found_and_incomplete(tmp_path, inputs, capsys):
    write_pool(tmp_path, inputs, "1-1cs", capsys)
    code, _, err = run(["read", "99", "--pool", tmp_path], capsys)
    assert code == 3
    code, _, err = run(["read", "jane.txt", "--pool", tmp_path, "--dropout", "0.3", "--seed", "1"], capsys)
    assert code == 4 and "missing addresses" in err


def test_corrupt_pool_exit(tmp_path, inputs, capsys):
    write_pool(tmp_path, inputs, "1-1cs", capsys)
    p = tmp_path / "pool.dnapool"
    p.write_text("#dnapool v0\n" + p.read_text().split("\n", 1)[1])
    assert run(["stats", "--pool", tmp_path], capsys)[0] == 5


def test_empty_pool_stats(tmp_path, capsys):
    (tmp_path / "pool.dnapool").write_text("#dnapool v1 codec=rot3 ls=220 lp=20 method=1-mci\n")
    (tmp_path / "manifest.tsv").write_text("\t".join(cli.poolsim.MANIFEST_COLUMNS) + "\n")
    code, out, _ = run(["stats", "--pool", tmp_path], capsys)
    assert code == 0 and "fragments=0 bases=0" in out


def test_cost_sweeps(capsys):
    code, out, _ = run(["cost", "--vary", "n", "--from", "1", "--to", "10"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 40
    for n in range(2, 11):
        sd = {r["method"]: float(r["sd_bases"]) for r in rows if r["param"] == str(n)}
        assert sd["1-1cs"] > sd["m-1ci"] > sd["1-mci"]
    code, out, _ = run(["cost", "--vary", "ratio", "--from", "5", "--to", "20"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    sd = [float(r["sd_bases"]) for r in rows if r["method"] == "1-1cs"]
    assert all(a > b for a, b in zip(sd, sd[1:]))
    code, out, _ = run(["cost", "--vary", "s_o", "--from", "1MB", "--to", "500MB", "--step", "100MB",
                        "--s-t", "201KB", "--n", "1"], capsys)
    assert code == 0 and out.startswith("param,method,sb_bytes,sd_bases,e_c,d")


def test_primers_commands(tmp_path, capsys):
    code, out, _ = run(["primers", "fixtures"], capsys)
    assert code == 0
    assert out == primers.load_fixture_primers().dumps()
    assert len(out.splitlines()) == 16
    assert "cat forward CGCGTATATGGCCCCCTCTTC" in out
    a = run(["primers", "gen", "--seed", "42"], capsys)[1]
    b = run(["primers", "gen", "--seed", "42"], capsys)[1]
    assert a == b and len(a.splitlines()) == 16
    lib = tmp_path / "lib.txt"
    run(["primers", "gen", "--seed", "3", "--count", "3", "--out", lib], capsys)
    assert run(["primers", "validate", lib], capsys)[0] == 0
    fixtures = tmp_path / "fx.txt"
    fixtures.write_text(out)
    code, report, _ = run(["primers", "validate", fixtures], capsys)
    assert code == 1 and "homopolymer" in report
    code, _, _ = run(["primers", "gen", "--gc-min", "1", "--gc-max", "1", "--max-homopolymer", "1",
                      "--count", "1"], capsys)
    assert code == 6


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "dnapool.cli", "primers", "fixtures"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.startswith("cat forward")

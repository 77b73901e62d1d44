import json
import os

import numpy as np
import pytest

from implosion import cli
from implosion import poly as P
from implosion import verify as V


def _run(tmp_path, *args):
    return cli.main(list(args))


def test_malformed_viewport_exits_2_without_files(tmp_path):
    out = tmp_path / "p.ppm"
    assert cli.main(["param", "--viewport", "1,0,0,1", "--out", str(out)]) == 2
    assert cli.main(["param", "--viewport", "1,2,3", "--out", str(out)]) == 2
    assert cli.main(["param", "--grid", "8x8", "--out", str(out)]) == 2
    assert cli.main(["dyn", "--tau", "0,-1", "--out", str(out)]) == 2
    assert cli.main(["bogus"]) == 2
    assert list(tmp_path.iterdir()) == []


def test_param_scan_outputs(tmp_path):
    out = tmp_path / "p.ppm"
    assert cli.main(["param", "--grid", "40x32", "--out", str(out)]) == 0
    man = json.loads((tmp_path / "p.json").read_text())
    assert set(man) == {"command", "config", "version", "wall_ms", "pixel_counts", "components", "checks"}
    assert sum(man["pixel_counts"].values()) == 40 * 32
    assert man["checks"]["no_double"] is True
    img = cli.read_ppm(str(out))
    assert img.shape == (32, 40, 3)
    assert cli.counts_from_image(img, "esc", 3) == man["pixel_counts"]
    header = (tmp_path / "p.csv").read_text().splitlines()[0]
    assert header == "row,col,re,im,code,omega"
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]


def test_threads_byte_identical(tmp_path):
    a, b = tmp_path / "a.ppm", tmp_path / "b.ppm"
    assert cli.main(["param", "--grid", "48x48", "--threads", "1", "--out", str(a)]) == 0
    assert cli.main(["param", "--grid", "48x48", "--threads", "8", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# dynamical plane\ns = 1.2, 0\ngrid = 20x20\nnmax = 1\ntau = 0.5,0\n")
    cfg = cli.build_config("dyn", cli.read_config_file(str(conf)), {"tau": "0,0.25"})
    assert cfg.width == 20 and cfg.n_max == 1 and cfg.s == 1.2 and cfg.tau == 0.25j
    bad = tmp_path / "bad.conf"
    bad.write_text("grid 20x20\n")
    assert cli.main(["dyn", "--config", str(bad)]) == 2
    assert cli.main(["dyn", "--config", str(tmp_path / "missing.conf")]) == 2


def test_other_commands(tmp_path):
    assert cli.main(["central", "--grid", "24x24", "--out", str(tmp_path / "c.ppm")]) == 0
    man = json.loads((tmp_path / "c.json").read_text())
    assert sum(man["pixel_counts"].values()) == 24 * 24
    img = cli.read_ppm(str(tmp_path / "c.ppm"))
    assert cli.counts_from_image(img, "central", 3) == man["pixel_counts"]
    assert cli.main(["limsup", "--grid", "24x24", "--n", "30", "--out", str(tmp_path / "l.ppm")]) == 0
    assert cli.main(["dyn", "--quadratic", "--grid", "32x32", "--nmax", "1", "--out", str(tmp_path / "q.ppm")]) == 0
    assert cli.main(["misiurewicz", "--n", "1", "--seed", "1.5", "--out", str(tmp_path / "m.csv")]) == 0
    row = (tmp_path / "m.csv").read_text().splitlines()[1].split(",")
    assert abs(float(row[3]) - 3 ** 0.5) < 1e-10
    assert cli.main(["gate", "--a", "0.0353553,0.0353553", "--out", str(tmp_path / "g.csv")]) == 0
    assert json.loads((tmp_path / "g.json").read_text())["checks"]["gate"] == "(*, 2)"


def test_numeric_abort_exit_3(tmp_path):
    # fixed points closer than the matching tolerance: the gate is undecidable
    assert cli.main(["gate", "--a", "0.00002,0.00001", "--out", str(tmp_path / "g.csv")]) == 3
    # 1/s = 10 escapes, so the Fatou coordinate cannot be normalized
    assert cli.main(["dyn", "--s", "0.1", "--grid", "16x16", "--out", str(tmp_path / "d.ppm")]) == 3
    assert list(tmp_path.iterdir()) == []


def test_palette_is_fixed():
    pal = cli.palette("esc", 3)
    assert pal[200] == (0x20, 0x20, 0x20) and pal[255] == (0xFF, 0, 0xFF) and pal[0] == (0xFF, 0xFF, 0xFF)
    warm, cool = [pal[k] for k in (1, 2, 3)], [pal[100 + k] for k in (1, 2, 3)]
    assert all(c[0] > c[2] for c in warm) and all(c[2] > c[0] for c in cool)
    assert len(set(pal.values())) == len(pal)


def test_verify_indices_clean(tmp_path):
    assert cli.main(["verify", "--suite", "indices", "--out", str(tmp_path / "v.csv")]) == 0
    rows = (tmp_path / "v.csv").read_text().splitlines()
    assert rows[0].startswith("criterion,suite") and len(rows) == 3
    assert all(",pass," in r for r in rows[1:])


def test_verify_all_row_count(tmp_path, monkeypatch):
    # bookkeeping only: every criterion gets a row
    monkeypatch.setattr(V, "run_check", lambda k: V.CheckResult(k, V.CHECKS[k][0], "stub", True, 0.0, "stub"))
    assert cli.main(["verify", "--suite", "all", "--out", str(tmp_path / "v.csv")]) == 0
    assert len((tmp_path / "v.csv").read_text().splitlines()) - 1 == len(V.CHECKS) == 10


def test_verify_detects_injected_coefficient_bug(tmp_path, monkeypatch):
    real = P.PolyMap.cubic_a.__func__

    def buggy(cls, a, lam=1.0):
        return real(cls, complex(a) * 1.001, lam)

    monkeypatch.setattr(P.PolyMap, "cubic_a", classmethod(buggy))
    assert cli.main(["verify", "--suite", "indices", "--out", str(tmp_path / "v.csv")]) == 1
    assert ",fail," in (tmp_path / "v.csv").read_text()

import json
import subprocess
import sys

import numpy as np
import pytest

from localmax.cli import run
from localmax.fields import ScalarField
from localmax.geometry import punctured_square
from localmax.io import read_field, read_mask, write_field


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def domain_cfg(tmp_path):
    return write(tmp_path / "dom.json", {"preset": "punctured-square", "cells": 16})


def test_version(capsys):
    assert run(["--version"]) == 0
    assert capsys.readouterr().out.strip() == "0.1.0"


def test_distance_outputs(tmp_path, domain_cfg):
    out = tmp_path / "o"
    assert run(["distance", "--config", domain_cfg, "--out", str(out)]) == 0
    vals, _ = read_field(out / "distance.bin")
    assert vals.max() == 1 - 1 / 16
    for name in ("manifest.json", "distance.json", "distance.csv", "distance.svg"):
        assert (out / name).exists()
    man = json.loads((out / "manifest.json").read_text())
    assert man["verb"] == "distance" and "numpy" in man["versions"]


def test_whitney_and_cloud(tmp_path, domain_cfg, capsys):
    out = tmp_path / "w"
    assert run(["whitney", "--config", domain_cfg, "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["ok"] and summary["t"] == 6
    out = tmp_path / "c"
    assert run(["cloud", "--config", domain_cfg, "--out", str(out), "--center", "9/16,5/16", "--half", "1/32"]) == 0
    assert read_mask(out / "cloud.mask").any()
    assert json.loads((out / "cloud.json").read_text())["stable"]


def test_maximal_with_and_without_config(tmp_path, domain_cfg):
    dom = punctured_square(16)
    rng = np.random.default_rng(0)
    f = tmp_path / "f.bin"
    write_field(f, ScalarField(dom, rng.random(dom.shape)))
    out = tmp_path / "m"
    assert run(["maximal", "--config", domain_cfg, "--field", str(f), "--out", str(out), "--mode", "centered"]) == 0
    vals, _ = read_field(out / "maximal.bin")
    assert vals.shape == (16, 16) and (out / "witness.json").exists() and (out / "maximal.svg").exists()
    out2 = tmp_path / "m2"
    assert run(["maximal", "--field", str(f), "--out", str(out2), "--mode", "weighted", "--sigma", str(f)]) == 0
    assert run(["maximal", "--field", str(f), "--out", str(out2), "--mode", "weighted"]) == 64


def test_weights_and_verify(tmp_path):
    cfgp = write(tmp_path / "e.json", {"domain": {"preset": "punctured-square", "cells": 16},
                                       "weights": {"u": {"kind": "power", "alpha": "1/2"},
                                                   "v": {"kind": "power", "alpha": "1/2"}}})
    out = tmp_path / "wt"
    assert run(["weights", "--config", cfgp, "--out", str(out)]) == 0
    reps = json.loads((out / "weights.json").read_text())["reports"]
    assert reps["doubling_u"]["class"] == "D_beta"
    for exp in ("theorem2", "theorem3", "prop45", "beta", "self-improvement"):
        assert run(["verify", "--config", cfgp, "--out", str(tmp_path / exp), "--experiment", exp]) == 0
        assert (tmp_path / exp / f"report-{exp}.json").exists()


def test_hypothesis_not_met_exit_code(tmp_path):
    cfgp = write(tmp_path / "e.json", {"domain": {"preset": "punctured-square", "cells": 16},
                                       "weights": {"sigma": {"kind": "checkerboard", "low": 1e-6}}})
    assert run(["verify", "--config", cfgp, "--out", str(tmp_path / "o"), "--experiment", "theorem2"]) == 2


def test_error_exit_codes(tmp_path, domain_cfg):
    assert run(["verify", "--config", domain_cfg, "--experiment", "nope"]) == 64
    assert run([]) == 64
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(["distance", "--config", str(bad), "--out", str(tmp_path / "o")]) == 64
    assert run(["distance", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == 74
    assert run(["verify", "--config", write(tmp_path / "u.json", {"bogus": 1}), "--out", str(tmp_path / "o"),
                "--experiment", "theorem2"]) == 64
    assert run(["distance", "--config", domain_cfg, "--out", str(tmp_path / "o"), "--set", "noequals"]) == 64


def test_overrides(tmp_path, domain_cfg):
    out = tmp_path / "o"
    assert run(["distance", "--config", domain_cfg, "--out", str(out), "--set", "cells=8"]) == 0
    vals, _ = read_field(out / "distance.bin")
    assert vals.shape == (8, 8)


def test_sweep_outputs_deterministic(tmp_path):
    spec = write(tmp_path / "s.json", {"presets": ["punctured-square"], "betas": ["1/2"],
                                       "exponents": [["2", "2"], ["2", "3"]], "cells": [16]})
    for tag, workers in (("a", "1"), ("b", "2")):
        assert run(["sweep", "--config", spec, "--out", str(tmp_path / tag), "--workers", workers]) == 0
    for name in ("sweep.csv", "sweep.json", "sweep.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "localmax.cli", "--version"], capture_output=True, text=True)
    if res.returncode != 0:
        res = subprocess.run(["lmax", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "0.1.0"

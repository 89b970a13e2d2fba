import json

import numpy as np
import pytest

from conecraft.cli import main
from conecraft.polyhedra import checkerboard_hrep, read_hrep, read_vrep, write_hrep

TINY = ["--override", "epochs=2", "--override", "box_activation_epoch=1",
        "--override", "data.n_train=120", "--override", "data.n_val=30",
        "--override", "data.n_test=0", "--override", "batch_size=32"]


def test_gen_constraints(tmp_path):
    out = tmp_path / "h.txt"
    assert main(["gen-constraints", "--side", "28", "--tiles", "4", "--out", str(out)]) == 0
    h = read_hrep(out)
    assert (h.m, h.d) == (16, 784)
    assert main(["gen-constraints", "--side", "2", "--tiles", "2", "--out", str(out)]) == 0
    assert (read_hrep(out).m, read_hrep(out).d) == (4, 4)
    assert main(["gen-constraints", "--side", "10", "--tiles", "3", "--out", str(out)]) == 1
    assert main(["gen-constraints", "--kind", "box", "--dim", "3", "--out", str(out)]) == 0


def test_convert_orthant_and_checkerboard(tmp_path, capsys):
    h = tmp_path / "h.txt"
    h.write_text("H 3 3\n-1 0 0\n0 -1 0\n0 0 -1\n")
    assert main(["convert", "--hrep", str(h), "--out", str(tmp_path / "v.txt")]) == 0
    v = read_vrep(tmp_path / "v.txt")
    assert (v.n_pointed, v.n_lin) == (3, 0)
    write_hrep(h, checkerboard_hrep(28, 4))
    assert main(["convert", "--hrep", str(h), "--out", str(tmp_path / "v.txt")]) == 0
    assert "n_r=1552" in capsys.readouterr().out


def test_convert_malformed_header_names_line(tmp_path, capsys):
    h = tmp_path / "h.txt"
    h.write_text("H three 3\n")
    assert main(["convert", "--hrep", str(h), "--out", str(tmp_path / "v.txt")]) == 1
    assert ":1:" in capsys.readouterr().err


def test_usage_errors_exit_1(tmp_path):
    assert main([]) == 1
    assert main(["convert", "--hrep", "x"]) == 1
    assert main(["train", "--task", "vae", "--override", "bogus=1",
                 "--out", str(tmp_path)]) == 1


def test_project_feasible_input_is_unchanged(tmp_path):
    h = tmp_path / "h.txt"
    write_hrep(h, checkerboard_hrep(2, 2))
    inp = tmp_path / "in.txt"
    # 1x1 tiles: pixels 0 and 3 must be <= 0, pixels 1 and 2 >= 0
    y = np.array([[-0.5, 0.25, 0.125, -0.75], [3.0, -1.0, -1.0, 2.0]])
    np.savetxt(inp, y)
    out = tmp_path / "out.txt"
    assert main(["project", "--hrep", str(h), "--in", str(inp), "--out", str(out), "--box"]) == 0
    z = np.loadtxt(out, ndmin=2)
    np.testing.assert_allclose(z[0], y[0], atol=1e-12)
    np.testing.assert_allclose(z[1], [0.0, 0.0, 0.0, 0.0], atol=1e-9)


def test_train_sample_and_bench(tmp_path):
    for variant in ("constrained", "unconstrained"):
        out = tmp_path / variant
        assert main(["--seed", "3", "train", "--task", "projection", "--quiet", *TINY,
                     "--override", f"variant={variant}", "--out", str(out)]) == 0
        echoed = json.loads((out / "config.json").read_text())
        assert echoed["seed"] == 3 and echoed["epochs"] == 2
        recs = [json.loads(line) for line in (out / "metrics.jsonl").read_text().splitlines()]
        assert len(recs) == 3
        assert "gap" in json.loads((out / "summary.json").read_text())
    cfg = tmp_path / "bench.json"
    cfg.write_text(json.dumps({"constrained_ckpt": str(tmp_path / "constrained/checkpoint"),
                               "unconstrained_ckpt": str(tmp_path / "unconstrained/checkpoint"),
                               "n_runs": 2, "batch": 4}))
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "b.json"),
                 "--threads", "1"]) == 0
    assert "ratio" in json.loads((tmp_path / "b.json").read_text())

    vae = tmp_path / "vae"
    assert main(["train", "--task", "vae", "--quiet", *TINY, "--override", "hidden_dim=16",
                 "--out", str(vae)]) == 0
    for name in ("s1", "s2"):
        assert main(["sample", "--ckpt", str(vae / "checkpoint"), "--n", "7", "--seed", "4",
                     "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "s1/samples.bin").read_bytes() == (tmp_path / "s2/samples.bin").read_bytes()
    assert json.loads((tmp_path / "s1/report.json").read_text())["n"] == 7


def test_sample_corrupt_checkpoint_exits_2(tmp_path):
    (tmp_path / "ck").mkdir()
    (tmp_path / "ck/manifest.json").write_text("{not json")
    assert main(["sample", "--ckpt", str(tmp_path / "ck"), "--n", "2",
                 "--out", str(tmp_path / "o")]) == 2


def test_gradcheck_passes(capsys):
    assert main(["gradcheck"]) == 0
    assert "constraint_layer_input" in capsys.readouterr().out

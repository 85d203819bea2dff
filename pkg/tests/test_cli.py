import json

import numpy as np
import pytest

from fiberloc import cli
from fiberloc.polymap import PolynomialMap, hyperbola_map


HYPERBOLA = {
    "n": 2, "k": 1,
    "components": [[{"coeff": [1.0, 0.0], "exps": [1, 1]},
                    {"coeff": [-1.0, 0.0], "exps": [0, 0]}]],
    "base_point": [[1.0, 0.0], [1.0, 0.0]],
}

PARABOLOID = {
    "n": 2, "k": 1,
    "components": [[{"coeff": [1.0, 0.0], "exps": [0, 1]},
                    {"coeff": [-1.0, 0.0], "exps": [2, 0]}]],
    "base_point": [[0.0, 0.0], [0.0, 0.0]],
}

AFFINE = {
    "n": 2, "k": 1,
    "components": [[{"coeff": [1.0, 0.0], "exps": [1, 0]}]],
    "base_point": [[0.0, 0.0], [0.0, 0.0]],
}


def write_config(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def read_stderr_payload(capsys):
    err = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(err)


# ---------------------------------------------------------------------------
# Config parsing and validation

def test_map_description_round_trips_through_json():
    F = hyperbola_map()
    doc = json.loads(json.dumps(F.to_json()))
    G = PolynomialMap.from_json(doc)
    assert G.to_json() == F.to_json()


def test_bad_exponent_length_exits_1_with_schema_path(tmp_path, capsys):
    cfg = {"map": json.loads(json.dumps(HYPERBOLA)),
           "seed": 0, "r_grid": [0.5], "N": 10}
    cfg["map"]["components"][0][0]["exps"] = [1, 1, 1]
    rc = cli.main(["tube", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path)])
    assert rc == 1
    payload = read_stderr_payload(capsys)
    assert "$.map.components[0][0].exps" in payload["message"]


def test_unknown_config_key_exits_1(tmp_path, capsys):
    cfg = {"map": HYPERBOLA, "seed": 0, "r_grid": [0.5], "N": 10, "bogus": 1}
    rc = cli.main(["tube", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path)])
    assert rc == 1
    assert "bogus" in read_stderr_payload(capsys)["message"]


def test_missing_config_file_exits_1(tmp_path, capsys):
    rc = cli.main(["tube", "--config", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path)])
    assert rc == 1


def test_non_increasing_r_grid_exits_1(tmp_path, capsys):
    cfg = {"map": HYPERBOLA, "seed": 0, "r_grid": [1.0, 0.5], "N": 10}
    rc = cli.main(["tube", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path)])
    assert rc == 1


def test_missing_required_keys_exits_1(tmp_path, capsys):
    cfg = {"map": HYPERBOLA, "seed": 0}
    rc = cli.main(["tube", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path)])
    assert rc == 1


def test_config_hash_is_canonical():
    a = cli.config_hash({"b": 1, "a": [1, 2]})
    b = cli.config_hash({"a": [1, 2], "b": 1})
    assert a == b
    assert a != cli.config_hash({"a": [1, 2], "b": 2})


# ---------------------------------------------------------------------------
# localize

def test_localize_outputs(tmp_path):
    cfg = {"map": AFFINE, "seed": 5, "T": 0.5, "h": 5e-3, "n_paths": 2}
    rc = cli.main(["localize", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path / "out")])
    assert rc == 0
    csv0 = (tmp_path / "out" / "path_0000.csv").read_text().splitlines()
    assert csv0[0].startswith("# config_hash=")
    assert csv0[1].startswith("# seed=5")
    assert csv0[2] == "t,fiber_residual,lambda_min_B,lambda_k1_B,trace_B,accum_gap"
    assert len(csv0) > 3
    summary = json.loads((tmp_path / "out" / "localize_summary.json").read_text())
    assert summary["n_aborted"] == 0
    assert summary["invariants"]["max_post_projection_residual"] <= 1e-10
    assert summary["invariants"]["trace_bound_ok"] is True
    assert (tmp_path / "out" / "path_0001.csv").exists()


def test_localize_cli_overrides_config(tmp_path):
    cfg = {"map": AFFINE, "seed": 5, "T": 9.0, "h": 5e-3, "n_paths": 1}
    rc = cli.main(["localize", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path / "o"), "--T", "0.2", "--seed", "7"])
    assert rc == 0
    summary = json.loads((tmp_path / "o" / "localize_summary.json").read_text())
    assert summary["T"] == pytest.approx(0.2)
    assert summary["seed"] == 7


# ---------------------------------------------------------------------------
# tube / baseline

def test_tube_results_schema_and_determinism(tmp_path):
    cfg = {"map": HYPERBOLA, "seed": 3, "r_grid": [0.6, 1.0], "N": 500}
    path = write_config(tmp_path, cfg)
    rc = cli.main(["tube", "--config", path, "--out", str(tmp_path / "a")])
    assert rc == 0
    doc = json.loads((tmp_path / "a" / "tube_results.json").read_text())
    assert doc["experiment"] == "tube"
    assert doc["seed"] == 3
    assert isinstance(doc["optimizer_failures"], int)
    for row in doc["rows"]:
        assert set(row) == {"r", "p_hat", "stderr", "baseline", "margin", "verdict"}
        assert row["verdict"] in ("pass", "fail")
    # byte-identical rerun
    rc = cli.main(["tube", "--config", path, "--out", str(tmp_path / "b")])
    assert rc == 0
    assert ((tmp_path / "a" / "tube_results.json").read_bytes()
            == (tmp_path / "b" / "tube_results.json").read_bytes())
    assert ((tmp_path / "a" / "tube_plot.dat").read_bytes()
            == (tmp_path / "b" / "tube_plot.dat").read_bytes())


def test_tube_circled_norm_rows(tmp_path):
    cfg = {"map": HYPERBOLA, "seed": 3, "r_grid": [0.8], "N": 300,
           "weights": [1.0, 2.0]}
    rc = cli.main(["tube", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path / "w")])
    assert rc == 0
    doc = json.loads((tmp_path / "w" / "tube_results.json").read_text())
    assert doc["rows"][0]["baseline"] is None
    assert doc["rows"][0]["verdict"] == "n/a"


def test_baseline_table_matches_library(tmp_path):
    from fiberloc import affine_tube_measure
    cfg = {"k": 1, "n": 2, "r_grid": [0.5, 1.0], "d_grid": [0.0, 1.0]}
    rc = cli.main(["baseline", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads((tmp_path / "baseline_table.json").read_text())
    assert len(doc["rows"]) == 4
    for row in doc["rows"]:
        assert row["measure"] == pytest.approx(
            affine_tube_measure(2, 1, row["d"], row["r"]))


# ---------------------------------------------------------------------------
# mixture / centerlaw / tilt / selftest

def test_mixture_report(tmp_path):
    cfg = {"map": PARABOLOID, "seed": 1, "T": 1.0, "h": 5e-3, "n_paths": 40,
           "functionals": ["one", "sq_norm"]}
    rc = cli.main(["mixture", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads((tmp_path / "mixture_report.json").read_text())
    assert doc["valid"] is True
    labels = [r["functional"] for r in doc["rows"]]
    assert labels == ["one", "sq_norm"]
    assert doc["rows"][0]["mixture_mean"] == pytest.approx(1.0)


def test_centerlaw_outputs(tmp_path):
    cfg = {"map": AFFINE, "seed": 2, "T": 1.0, "h": 5e-3, "n_paths": 20}
    rc = cli.main(["centerlaw", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "centerlaw_samples.csv").read_text().splitlines()
    assert lines[2] == "re_a0,im_a0,re_a1,im_a1"
    assert len(lines) == 3 + 20
    doc = json.loads((tmp_path / "centerlaw_moments.json").read_text())
    assert doc["n_samples"] == 20
    # the affine fiber pins the first coordinate at zero
    assert doc["coord_abs_sq"][0] == 0.0


def test_tilt_sweep(tmp_path):
    cfg = {"seed": 4, "n_instances": 10}
    rc = cli.main(["tilt", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads((tmp_path / "tilt_sweep.json").read_text())
    assert doc["all_hold"] is True
    assert len(doc["rows"]) == 10
    for row in doc["rows"]:
        assert row["lhs"] >= row["rhs"] - 1e-6


def test_selftest(tmp_path):
    rc = cli.main(["selftest", "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads((tmp_path / "selftest.json").read_text())
    assert doc["all_ok"] is True


def test_unknown_command_exits_1(capsys):
    assert cli.main(["frobnicate"]) == 1

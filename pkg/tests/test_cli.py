import json

import numpy as np
import pytest

from sglmm.cli import CONFIG_KEYS, dispatch
from sglmm.io import read_config, read_table, write_table


def run(args):
    return dispatch([str(a) for a in args])


# ---------------------------------------------------------------------------
# tables and config files
# ---------------------------------------------------------------------------


def test_table_round_trip_17_digits(tmp_path):
    path = tmp_path / "t.csv"
    rng = np.random.default_rng(0)
    cols = {
        "a": rng.standard_normal(50) * 1e-7,
        "b": rng.standard_normal(50) * 1e12,
        "c": np.array([1 / 3] * 50),
    }
    write_table(path, ["a", "b", "c"], cols)
    back = read_table(path)
    for name in ("a", "b", "c"):
        assert np.array_equal(back[name], cols[name])


def test_header_only_csv_is_empty_table(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b\n")
    table = read_table(path)
    assert table.n_rows == 0
    assert table.names == ["a", "b"]


def test_missing_header_rejected(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("")
    with pytest.raises(ValueError, match="header"):
        read_table(path)


def test_malformed_row_reports_line_number(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b\n1,2\n3\n")
    with pytest.raises(ValueError, match=":3"):
        read_table(path)


def test_non_numeric_cell_reports_line(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b\n1,x\n")
    with pytest.raises(ValueError, match=":2.*not numeric"):
        read_table(path)


def test_nan_rejected(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a\nnan\n")
    with pytest.raises(ValueError, match="NaN"):
        read_table(path)


def test_config_parse_and_unknown_key(tmp_path):
    path = tmp_path / "cfg"
    path.write_text("# model\nfamily=bernoulli\nq=50\n")
    cfg = read_config(path, CONFIG_KEYS)
    assert cfg == {"family": "bernoulli", "q": "50"}

    bad = tmp_path / "bad"
    bad.write_text("famly=bernoulli\n")
    with pytest.raises(ValueError, match="unknown key 'famly'"):
        read_config(bad, CONFIG_KEYS)


# ---------------------------------------------------------------------------
# CLI basics
# ---------------------------------------------------------------------------


def test_unknown_flag_exits_1(capsys):
    assert run(["lattice", "--rows", 2, "--cols", 2, "--frobnicate"]) == 1


def test_unknown_subcommand_exits_1():
    assert run(["transmogrify"]) == 1


def test_help_exits_0():
    assert run(["--help"]) == 0


def test_lattice_writes_header(tmp_path):
    out = tmp_path / "g.edges"
    assert run(["lattice", "--rows", 2, "--cols", 2, "--out", out]) == 0
    assert out.read_text().splitlines()[0] == "4 4"


def test_lattice_with_coords(tmp_path):
    out = tmp_path / "g.edges"
    coords = tmp_path / "c.txt"
    assert run(["lattice", "--rows", 3, "--cols", 3, "--out", out, "--coords-out", coords]) == 0
    assert len(coords.read_text().splitlines()) == 9


# ---------------------------------------------------------------------------
# pipeline: simulate -> eigs -> fit -> summarize
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("pipeline")
    code = dispatch(
        [
            "simulate", "--family", "bernoulli", "--rows", "8", "--cols", "8",
            "--q", "12", "--tau", "1.0", "--seed", "5", "--out-prefix", str(d / "toy"),
        ]
    )
    assert code == 0
    return d


def test_simulate_outputs(sim_dir):
    data = read_table(sim_dir / "toy_data.csv")
    assert data.names == ["z", "x", "y"]
    assert data.n_rows == 64
    truth = read_table(sim_dir / "toy_truth.csv")
    assert truth.names == ["x", "y", "eta", "surface"]
    delta = read_table(sim_dir / "toy_delta.csv")
    assert delta.n_rows == 12
    edges = (sim_dir / "toy_graph.edges").read_text().splitlines()
    assert edges[0] == "64 112"
    manifest = json.loads((sim_dir / "toy_manifest.json").read_text())
    assert manifest["settings"]["seed"] == 5
    assert "config_sha256" in manifest


def test_simulate_requires_seed(tmp_path):
    code = dispatch(
        ["simulate", "--preset", "binary", "--out-prefix", str(tmp_path / "x")]
    )
    assert code == 1


def test_eigs_spectrum_and_threshold_basis(sim_dir, tmp_path):
    spec_out = tmp_path / "spectrum.csv"
    basis_out = tmp_path / "basis.csv"
    code = run(
        [
            "eigs", "--graph", sim_dir / "toy_graph.edges",
            "--design", sim_dir / "toy_data.csv", "--covariates", "x,y",
            "--threshold", "0.5", "--spectrum-out", spec_out, "--basis-out", basis_out,
        ]
    )
    assert code == 0
    spectrum = read_table(spec_out)
    assert spectrum.n_rows == 64
    # spectrum columns: index, eigenvalue, standardized_eigenvalue
    assert spectrum.names == ["index", "eigenvalue", "standardized_eigenvalue"]
    std = spectrum["standardized_eigenvalue"]
    assert np.all(np.diff(std) <= 1e-12)
    basis = read_table(basis_out)
    assert basis.n_rows == 64
    assert len(basis.names) == int(np.sum(std > 0.5))


def test_eigs_edgeless_graph_rejected(tmp_path):
    edges = tmp_path / "e.edges"
    edges.write_text("3 0\n")
    write_table(tmp_path / "d.csv", ["x"], {"x": np.array([0.0, 0.5, 1.0])})
    code = run(
        ["eigs", "--graph", edges, "--design", tmp_path / "d.csv",
         "--spectrum-out", tmp_path / "s.csv"]
    )
    assert code == 1


def test_eigs_threshold_50x50_returns_265_columns(tmp_path, capsys):
    # the documented 50x50 workflow: threshold 0.7 keeps 265 eigenvectors
    edges = tmp_path / "g.edges"
    dispatch(["lattice", "--rows", "50", "--cols", "50", "--out", str(edges)])
    from sglmm import build_lattice, lattice_design

    X = lattice_design(build_lattice(50, 50))
    write_table(tmp_path / "d.csv", ["x", "y"], {"x": X.X[:, 0], "y": X.X[:, 1]})
    code = run(
        ["eigs", "--graph", edges, "--design", tmp_path / "d.csv",
         "--threshold", "0.7", "--spectrum-out", tmp_path / "s.csv"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "moran basis: 265 columns" in out
    spectrum = read_table(tmp_path / "s.csv")
    assert spectrum.n_rows == 2500


def test_eigs_map_output(sim_dir, tmp_path):
    map_out = tmp_path / "map.csv"
    code = run(
        [
            "eigs", "--graph", sim_dir / "toy_graph.edges",
            "--design", sim_dir / "toy_data.csv", "--covariates", "x,y",
            "--q", "4", "--spectrum-out", tmp_path / "s.csv",
            "--map-out", map_out, "--map-index", "2",
            "--coords", sim_dir / "toy_coords.txt",
        ]
    )
    assert code == 0
    m = read_table(map_out)
    assert m.names == ["x", "y", "component"]
    assert m.n_rows == 64


def test_fit_sparse_writes_chain_summary_manifest(sim_dir):
    prefix = sim_dir / "fit_sparse"
    code = run(
        [
            "fit", "--model", "sparse", "--family", "bernoulli", "--q", "6",
            "--data", sim_dir / "toy_data.csv", "--graph", sim_dir / "toy_graph.edges",
            "--seed", "7", "--iterations", "3000", "--burn-in", "500", "--thin", "5",
            "--out-prefix", prefix,
        ]
    )
    assert code == 0
    chain = read_table(f"{prefix}_chain.csv")
    assert chain.n_rows == (3000 - 500) // 5
    assert chain.names[:2] == ["beta.x", "beta.y"]
    assert "tau" in chain.names
    summary = json.loads(open(f"{prefix}_summary.json").read())
    assert "beta.x" in summary["params"]
    for key in ("mean", "eqt_lo", "eqt_hi", "hpd_lo", "hpd_hi", "mcse"):
        assert key in summary["params"]["beta.x"]
    manifest = json.loads(open(f"{prefix}_manifest.json").read())
    assert manifest["settings"]["seed"] == 7
    assert "versions" in manifest
    fitted = read_table(f"{prefix}_fitted.csv")
    assert fitted.names == ["x", "y", "fitted"]


def test_fit_reruns_identically_from_same_seed(sim_dir, tmp_path):
    args = [
        "fit", "--model", "sparse", "--family", "bernoulli", "--q", "6",
        "--data", sim_dir / "toy_data.csv", "--graph", sim_dir / "toy_graph.edges",
        "--seed", "21", "--iterations", "2000", "--burn-in", "400", "--thin", "4",
    ]
    assert run(args + ["--out-prefix", tmp_path / "a"]) == 0
    assert run(args + ["--out-prefix", tmp_path / "b"]) == 0
    assert (tmp_path / "a_chain.csv").read_text() == (tmp_path / "b_chain.csv").read_text()


def test_fit_nonspatial_uses_irls(sim_dir):
    prefix = sim_dir / "fit_glm"
    code = run(
        [
            "fit", "--model", "nonspatial", "--family", "bernoulli",
            "--data", sim_dir / "toy_data.csv", "--graph", sim_dir / "toy_graph.edges",
            "--out-prefix", prefix,
        ]
    )
    assert code == 0
    doc = json.loads(open(f"{prefix}_summary.json").read())
    assert doc["model"] == "nonspatial"
    assert doc["converged"]
    assert set(doc["beta_hat"]) == {"x", "y"}


def test_fit_traditional_and_rhz_run(sim_dir):
    for model in ("traditional", "rhz"):
        prefix = sim_dir / f"fit_{model}"
        code = run(
            [
                "fit", "--model", model, "--family", "bernoulli",
                "--data", sim_dir / "toy_data.csv", "--graph", sim_dir / "toy_graph.edges",
                "--seed", "3", "--iterations", "1500", "--burn-in", "300", "--thin", "3",
                "--out-prefix", prefix,
            ]
        )
        assert code == 0
        chain = read_table(f"{prefix}_chain.csv")
        assert chain.n_rows == (1500 - 300) // 3


def test_fit_multiple_chains(sim_dir, tmp_path):
    prefix = tmp_path / "multi"
    code = run(
        [
            "fit", "--model", "sparse", "--family", "bernoulli", "--q", "4",
            "--data", sim_dir / "toy_data.csv", "--graph", sim_dir / "toy_graph.edges",
            "--seed", "9", "--iterations", "1500", "--burn-in", "300", "--thin", "3",
            "--chains", "2", "--out-prefix", prefix,
        ]
    )
    assert code == 0
    c0 = read_table(f"{prefix}_chain_0.csv")
    c1 = read_table(f"{prefix}_chain_1.csv")
    assert c0.n_rows == c1.n_rows == 400
    assert not np.array_equal(c0["tau"], c1["tau"])


def test_fit_with_config_file(sim_dir, tmp_path):
    cfg = tmp_path / "model.cfg"
    cfg.write_text(
        "family=bernoulli\nparameterization=sparse\nq=6\n"
        "iterations=2000\nburn_in=400\nthin=4\nseed=31\n"
    )
    prefix = tmp_path / "cfgfit"
    code = run(
        [
            "fit", "--config", cfg,
            "--data", sim_dir / "toy_data.csv", "--graph", sim_dir / "toy_graph.edges",
            "--out-prefix", prefix,
        ]
    )
    assert code == 0
    assert read_table(f"{prefix}_chain.csv").n_rows == 400


def test_fit_config_bad_family_lists_allowed(sim_dir, tmp_path, capsys):
    cfg = tmp_path / "model.cfg"
    cfg.write_text("family=binomial\nparameterization=sparse\nq=6\nseed=1\n")
    code = run(
        [
            "fit", "--config", cfg,
            "--data", sim_dir / "toy_data.csv", "--graph", sim_dir / "toy_graph.edges",
            "--out-prefix", tmp_path / "x",
        ]
    )
    assert code == 1
    err = capsys.readouterr().err
    assert "bernoulli" in err and "poisson" in err and "gaussian" in err


def test_fit_requires_seed_for_mcmc(sim_dir, tmp_path, capsys):
    code = run(
        [
            "fit", "--model", "sparse", "--family", "bernoulli", "--q", "4",
            "--data", sim_dir / "toy_data.csv", "--graph", sim_dir / "toy_graph.edges",
            "--out-prefix", tmp_path / "x",
        ]
    )
    assert code == 1
    assert "seed" in capsys.readouterr().err


def test_fit_offset_column(tmp_path):
    # poisson with exposure: eta includes log(offset)
    code = dispatch(
        [
            "simulate", "--family", "poisson", "--rows", "6", "--cols", "6",
            "--q", "6", "--tau", "2.0", "--seed", "11",
            "--out-prefix", str(tmp_path / "cnt"),
        ]
    )
    assert code == 0
    data = read_table(tmp_path / "cnt_data.csv")
    rng = np.random.default_rng(0)
    births = rng.uniform(50, 500, 36)
    deaths = rng.poisson(births * 0.05).astype(float)
    write_table(
        tmp_path / "off.csv",
        ["z", "x", "y", "births"],
        {"z": deaths, "x": data["x"], "y": data["y"], "births": births},
    )
    prefix = tmp_path / "offfit"
    code = run(
        [
            "fit", "--model", "sparse", "--family", "poisson", "--q", "4",
            "--data", tmp_path / "off.csv", "--graph", tmp_path / "cnt_graph.edges",
            "--offset-col", "births", "--seed", "13",
            "--iterations", "2000", "--burn-in", "400", "--thin", "4",
            "--out-prefix", prefix,
        ]
    )
    assert code == 0
    chain = read_table(f"{prefix}_chain.csv")
    assert chain.names[:2] == ["beta.x", "beta.y"]


def test_summarize_command(sim_dir, tmp_path):
    out = tmp_path / "s.json"
    code = run(["summarize", "--chain", f"{sim_dir}/fit_sparse_chain.csv", "--out", out])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["level"] == 0.95
    assert "tau" in doc["params"]
    p = doc["params"]["tau"]
    assert p["hpd_hi"] - p["hpd_lo"] <= p["eqt_hi"] - p["eqt_lo"] + 1e-12


def test_summarize_empty_chain_fails(tmp_path):
    chain = tmp_path / "c.csv"
    chain.write_text("beta.x\n")
    assert run(["summarize", "--chain", chain, "--out", tmp_path / "s.json"]) == 1


def test_numerical_failure_exits_2(sim_dir, monkeypatch):
    import sglmm.cli as cli_mod

    def boom(*args, **kwargs):
        raise np.linalg.LinAlgError("synthetic Cholesky breakdown")

    monkeypatch.setattr(cli_mod, "run_mcmc", boom)
    code = run(
        [
            "fit", "--model", "sparse", "--family", "bernoulli", "--q", "4",
            "--data", sim_dir / "toy_data.csv", "--graph", sim_dir / "toy_graph.edges",
            "--seed", "1", "--iterations", "1000", "--burn-in", "100",
            "--out-prefix", sim_dir / "wontexist",
        ]
    )
    assert code == 2


def test_reproduce_emits_report(tmp_path):
    out_dir = tmp_path / "study"
    code = run(
        [
            "reproduce", "--seed", "77", "--out-dir", out_dir,
            "--families", "bernoulli", "--rows", "8", "--cols", "8",
            "--q-true", "12", "--q-fit-large", "8", "--q-fit-small", "4",
            "--iterations", "1200", "--burn-in", "300", "--thin", "3",
        ]
    )
    assert code == 0
    report = (out_dir / "report.csv").read_text().splitlines()
    assert report[0].startswith("family,model,dim")
    # nonspatial + traditional + rhz + two sparse fits
    assert len(report) == 1 + 5
    models = [line.split(",")[1] for line in report[1:]]
    assert models == ["nonspatial", "traditional", "rhz", "sparse-8", "sparse-4"]
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["settings"]["seed"] == 77


def test_fit_validation_errors(sim_dir, tmp_path):
    # graph/data size mismatch
    other = tmp_path / "other.edges"
    dispatch(["lattice", "--rows", "3", "--cols", "3", "--out", str(other)])
    code = run(
        [
            "fit", "--model", "sparse", "--family", "bernoulli", "--q", "4",
            "--data", sim_dir / "toy_data.csv", "--graph", other,
            "--seed", "1", "--out-prefix", tmp_path / "x",
        ]
    )
    assert code == 1

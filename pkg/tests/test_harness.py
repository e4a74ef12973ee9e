import numpy as np
import pytest

from dictinv import harness
from dictinv.grids import GridFunction


@pytest.fixture(scope="module")
def small_cfg():
    return harness.ExperimentConfig(
        test_function="f2", sigma=0.5, n_obs=24, T=10.0, fine_nodes=401,
        p1=3, p2=6, b_step=0.5, replicates=3, base_seed=123, alpha_grid_N=40,
        baseline_k_max=12)


class TestConfig:
    def test_roundtrip(self, tmp_path, small_cfg):
        path = tmp_path / "cell.cfg"
        harness.save_config(small_cfg, path)
        assert harness.parse_config(path) == small_cfg

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# a comment\n\nsigma = 0.25   # inline\nn_obs = 16\n")
        cfg = harness.parse_config(path)
        assert cfg.sigma == 0.25 and cfg.n_obs == 16

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("not_a_key = 3\n")
        with pytest.raises(ValueError, match="unknown config key"):
            harness.parse_config(path)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("sigma 0.25\n")
        with pytest.raises(ValueError, match="expected"):
            harness.parse_config(path)

    def test_validation(self):
        with pytest.raises(ValueError):
            harness.ExperimentConfig(replicates=0)
        with pytest.raises(ValueError):
            harness.ExperimentConfig(methods=("lasso_opt", "bogus"))


class TestRunReplicate:
    def test_determinism(self, small_cfg):
        ws = harness.build_workspace(small_cfg)
        a = harness.run_replicate(small_cfg, 1, ws)
        b = harness.run_replicate(small_cfg, 1, ws)
        for m in small_cfg.methods:
            assert a[m] == b[m]
        assert a["seed"] == small_cfg.base_seed + 1

    def test_replicate_index_permutation(self, small_cfg):
        # replicates are independent: computing them in any order gives the
        # same per-index errors
        ws = harness.build_workspace(small_cfg)
        direct = {r: harness.run_replicate(small_cfg, r, ws)["lasso_opt"] for r in (0, 1, 2)}
        shuffled = {r: harness.run_replicate(small_cfg, r, ws)["lasso_opt"] for r in (2, 0, 1)}
        assert direct == shuffled

    def test_empty_methods_no_computation(self, small_cfg):
        from dataclasses import replace

        cfg = replace(small_cfg, methods=())
        row = harness.run_replicate(cfg, 0)
        assert set(row) == {"replicate", "seed", "failures"}

    def test_noiseless_sparse_recovery(self, small_cfg):
        # sigma = 0 with f equal to a dictionary column: the oracle-penalty
        # estimate reaches the alpha-grid shrinkage floor (the grid bottoms at
        # alpha_max/N, so the error cannot vanish but must be small)
        from dataclasses import replace

        ws = harness.build_workspace(small_cfg)
        cfg = replace(small_cfg, sigma=0.0, methods=("lasso_opt",), alpha_grid_N=400)
        column = ws.dict_.column(7)
        import dictinv.forward as forward

        orig = forward._TEST_SHAPES
        row = None
        try:
            forward._TEST_SHAPES = dict(orig)
            forward._TEST_SHAPES["f2"] = lambda x: np.interp(x, ws.grid.nodes, column.values)
            row = harness.run_replicate(cfg, 0, ws)
        finally:
            forward._TEST_SHAPES = orig
        assert row["lasso_opt"][0] <= 5e-3

    def test_failures_recorded_not_fatal(self, small_cfg):
        # an absurdly tight tolerance cannot converge in one sweep; the row
        # must still come back with the failure recorded
        from dataclasses import replace
        from unittest import mock

        import dictinv.harness as hmod

        cfg = replace(small_cfg, methods=("lasso_opt",))
        ws = harness.build_workspace(small_cfg)
        real_path = hmod.lasso.path

        def strangled_path(gram, beta, nu, N):
            return real_path(gram, beta, nu, N=N, tol=1e-16, max_iter=1)

        with mock.patch.object(hmod.lasso, "path", side_effect=strangled_path):
            row = harness.run_replicate(cfg, 0, ws)
        assert "lasso" in row["failures"]
        assert np.isfinite(row["lasso_opt"][0])


class TestRunCell:
    def test_aggregates(self, small_cfg):
        report = harness.run_cell(small_cfg)
        assert len(report.rows) == 3
        for m in small_cfg.methods:
            errs = [row[m][0] for row in report.rows]
            assert report.mean[m] == pytest.approx(np.mean(errs), rel=1e-12)
            assert report.std[m] == pytest.approx(np.std(errs, ddof=1), rel=1e-12)

    def test_single_replicate_degenerate_std(self, small_cfg):
        from dataclasses import replace

        cfg = replace(small_cfg, replicates=1, methods=("svd",))
        report = harness.run_cell(cfg)
        assert report.degenerate_std
        assert report.std["svd"] == 0.0

    def test_replicates_csv(self, tmp_path, small_cfg):
        from dataclasses import replace

        cfg = replace(small_cfg, replicates=2, methods=("svd", "laguerre"))
        report = harness.run_cell(cfg)
        out = tmp_path / "reps.csv"
        harness.save_replicates_csv(report, out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == ("test_function,sigma,n_obs,replicate,seed,method,"
                            "rms_error,l2_error")
        assert len(lines) == 1 + 2 * 2


class TestRunTable:
    def test_table_rows_and_csv(self, tmp_path, small_cfg):
        from dataclasses import replace

        cfgs = [replace(small_cfg, replicates=2, methods=("svd",)),
                replace(small_cfg, sigma=1.0, replicates=2, methods=("svd",))]
        out = tmp_path / "table.csv"
        table = harness.run_table(cfgs, out_csv=out)
        assert len(table) == 2
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("#")
        assert lines[1] == ",".join(harness.TABLE_HEADER)
        assert len(lines) == 4
        txt = harness.format_table(table)
        assert "f2/sigma=0.5/n=24" in txt

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            harness.run_table([])

    def test_table1_configs_cover_all_cells(self):
        cfgs = harness.table1_configs(replicates=7)
        assert len(cfgs) == 18
        cells = {(c.test_function, c.sigma, c.n_obs) for c in cfgs}
        assert len(cells) == 18
        assert all(c.replicates == 7 for c in cfgs)


class TestEmitPlotData:
    def test_schemas_and_determinism(self, tmp_path, small_cfg):
        from dataclasses import replace

        cfg = replace(small_cfg, replicates=1, methods=("lasso_opt", "svd"))
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        files1 = harness.emit_plot_data(cfg, out1)
        files2 = harness.emit_plot_data(cfg, out2)
        names = sorted(f.name for f in files1)
        assert names == ["data_fine.csv", "data_obs.csv", "estimates.csv"]
        for f1, f2 in zip(files1, files2):
            assert f1.read_bytes() == f2.read_bytes()
        header = (out1 / "estimates.csv").read_text().splitlines()[0]
        assert header == "x,f_true,lasso_opt,svd"
        obs_lines = (out1 / "data_obs.csv").read_text().strip().splitlines()
        assert len(obs_lines) == 1 + cfg.n_obs
        fine_lines = (out1 / "data_fine.csv").read_text().strip().splitlines()
        assert len(fine_lines) == 1 + cfg.fine_nodes


class TestMixtureGate:
    def test_threshold_value(self):
        with pytest.raises(ValueError, match="21.3"):
            harness.mixture_gate(10, tau=1.0, p=400)
        harness.mixture_gate(22, tau=1.0, p=400)   # passes

    def test_replicate_runner_enforces_gate(self):
        from dictinv.dictionary import build_dictionary, gram
        from dictinv.forward import exponential_mixture_kernel, mixture_operator
        from dictinv.grids import make_uniform_grid
        from dictinv.inversion import invert_exact, weights

        kern = exponential_mixture_kernel(
            x_grid=make_uniform_grid(0.5, 3.0, 51),
            y_grid=make_uniform_grid(0.0, 30.0, 601))
        d = build_dictionary(10, 40, 0.1, kern.x_grid)
        Q = mixture_operator(kern)
        inv = invert_exact(Q, d)
        nu = weights(inv, "mixture_sup")
        mix = d.columns[:, 0] + d.columns[:, 5]
        f = GridFunction(kern.x_grid, mix / np.sum(kern.x_grid.weights * mix))
        with pytest.raises(ValueError, match="needs n >="):
            harness.run_mixture_replicate(f, kern, d, gram(d), inv, nu, n=10, seed=0)


def test_tabulated_kernel_config(tmp_path):
    # kernel = csv:<path> builds a Fredholm operator from a tabulated kernel
    import csv as csv_mod

    kpath = tmp_path / "kernel.csv"
    with open(kpath, "w", newline="") as fh:
        writer = csv_mod.writer(fh)
        writer.writerow(["x", "t", "g"])
        for x in np.linspace(0, 10, 21):
            for t in np.linspace(0, 10, 21):
                writer.writerow([x, t, np.exp(-abs(x - t))])
    cfg = harness.ExperimentConfig(fine_nodes=101, p1=2, p2=2, b_step=1.0,
                                   replicates=1, kernel=f"csv:{kpath}")
    ws = harness.build_workspace(cfg)
    assert ws.Q.matrix.shape == (101, 101)
    # a Fredholm kernel is not causal: upper triangle is populated
    assert np.abs(np.triu(ws.Q.matrix, k=1)).max() > 0

    bad = harness.ExperimentConfig(fine_nodes=101, kernel="bogus")
    with pytest.raises(ValueError, match="unknown kernel"):
        harness.build_workspace(bad)


def test_rms_error_convention(small_cfg):
    ws = harness.build_workspace(small_cfg)
    rng = np.random.default_rng(0)
    a = GridFunction(ws.grid, rng.standard_normal(ws.grid.n_nodes))
    b = GridFunction(ws.grid, rng.standard_normal(ws.grid.n_nodes))
    direct = np.linalg.norm(a.values - b.values) / np.sqrt(ws.grid.n_nodes)
    assert harness.rms_error(a, b) == pytest.approx(direct, rel=1e-12)

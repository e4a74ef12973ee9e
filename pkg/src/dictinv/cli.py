"""Command line front end.

Subcommands:
    simulate <config>      run one simulation cell, write replicate + summary CSV
    table1 <config-dir>    run every *.cfg in a directory into one summary table
    solve <data.csv>       estimate f from a single (x, y) dataset
    diagnose <gram.csv>    compatibility report for a Gram matrix
    invert <config>        emit inverse images, weights and residual report

Outputs are CSV files with fixed headers.  Exit code is 0 on success; on
failure a single machine-readable line ``error: <message>`` is printed to
stderr and the exit code is nonzero.  The only environment variable honored is
DICTINV_THREADS (thread count for the numerical kernels).
"""

from __future__ import annotations

import argparse
import os
import sys


def _apply_thread_env() -> None:
    threads = os.environ.get("DICTINV_THREADS")
    if not threads:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMBA_NUM_THREADS"):
        os.environ.setdefault(var, threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dictinv",
        description="Weighted-Lasso solution of ill-posed inverse problems "
                    "over overcomplete dictionaries.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation cell from a config file")
    p.add_argument("config")
    p.add_argument("--out", default=".", help="output directory (default: cwd)")
    p.add_argument("--plots", action="store_true", help="also emit plot-data CSVs")

    p = sub.add_parser("table1", help="run every *.cfg in a directory into one table")
    p.add_argument("config_dir")
    p.add_argument("--out", default=".", help="output directory (default: cwd)")

    p = sub.add_parser("solve", help="estimate f from one dataset CSV with x,y columns")
    p.add_argument("data")
    p.add_argument("--sigma", type=float, required=True,
                   help="noise scale sigma (data convention y = q + n^(-1/2) sigma xi)")
    p.add_argument("--config", default=None,
                   help="optional config file for geometry/dictionary settings")
    p.add_argument("--out", default=".", help="output directory (default: cwd)")

    p = sub.add_parser("diagnose", help="compatibility report for a Gram matrix CSV")
    p.add_argument("gram")
    p.add_argument("--nu", default=None, help="CSV with one weight per line (default: all ones)")
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--mu", type=float, default=3.0)
    p.add_argument("--j-set", default="0", help="comma-separated indices of the candidate support")
    p.add_argument("--n-dirs", type=int, default=0, help="cone directions for the kappa^2 estimate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="also write the report as CSV here")

    p = sub.add_parser("invert", help="emit inverse images and weights for a config")
    p.add_argument("config")
    p.add_argument("--out", default=".", help="output directory (default: cwd)")
    return parser


def cmd_simulate(args) -> int:
    import pathlib

    from . import harness

    cfg = harness.parse_config(args.config)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = pathlib.Path(args.config).stem
    report = harness.run_cell(cfg)
    harness.save_replicates_csv(report, out / f"{stem}_replicates.csv")
    table = [{"test_function": cfg.test_function, "sigma": cfg.sigma, "n_obs": cfg.n_obs,
              "method": m, "mean_rms": report.mean[m], "std_rms": report.std[m],
              "mean_l2": report.mean_l2[m], "std_l2": report.std_l2[m],
              "replicates": cfg.replicates,
              "std_flag": "degenerate" if report.degenerate_std else ""}
             for m in cfg.methods]
    _write_table(table, out / f"{stem}_summary.csv")
    if args.plots:
        harness.emit_plot_data(cfg, out / f"{stem}_plots")
    print(harness.format_table(table))
    return 0


def _write_table(table, path) -> None:
    import csv

    from .harness import TABLE_HEADER

    with open(path, "w", newline="") as fh:
        fh.write("# rms = n_fine^(-1/2) * ||f_hat - f||_2 (sample RMS); "
                 "l2 = quadrature L2 norm\n")
        writer = csv.writer(fh)
        writer.writerow(TABLE_HEADER)
        for row in table:
            writer.writerow([row[k] for k in TABLE_HEADER])


def cmd_table1(args) -> int:
    import pathlib

    from . import harness

    cfg_dir = pathlib.Path(args.config_dir)
    cfg_files = sorted(cfg_dir.glob("*.cfg"))
    if not cfg_files:
        raise ValueError(f"no *.cfg files in {cfg_dir}")
    configs = [harness.parse_config(f) for f in cfg_files]
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(i, n_cfg, r, total):
        if r == total or r % 10 == 0:
            print(f"[{i + 1}/{n_cfg}] replicate {r}/{total}", file=sys.stderr)

    table = harness.run_table(configs, out_csv=out / "table1.csv", progress=progress)
    print(harness.format_table(table))
    return 0


def cmd_solve(args) -> int:
    import csv
    import pathlib

    import numpy as np

    from . import baselines, estimation, harness, inversion, lasso
    from .grids import Grid

    data = np.genfromtxt(args.data, delimiter=",", names=True)
    if data.dtype.names is None or not {"x", "y"} <= set(data.dtype.names):
        raise ValueError("data CSV must have an 'x,y' header row")
    x = np.asarray(data["x"], dtype=float)
    y = np.asarray(data["y"], dtype=float)
    if x.size < 2:
        raise ValueError("need at least two observations")
    order = np.argsort(x)
    x, y = x[order], y[order]

    cfg = harness.parse_config(args.config) if args.config else harness.ExperimentConfig()
    if x[-1] > cfg.T or x[0] < 0:
        raise ValueError(f"observations must lie in the operator domain [0, {cfg.T}]")
    ws = harness.build_workspace(cfg)
    if x[0] > ws.grid.a:
        # pad a left boundary node; it carries zero rectangular weight, so the
        # placeholder observation there never enters the estimate
        x = np.concatenate([[ws.grid.a], x])
        y = np.concatenate([[y[0]], y])
    obs = Grid(a=x[0], b=x[-1], nodes=x, weights=np.full(x.size, (x[-1] - x[0]) / x.size))
    beta = estimation.beta_hat_observational(y, obs, ws.inv, sigma=args.sigma)
    nu = inversion.weights(ws.inv, "observational", obs_grid=obs)
    path = lasso.path(ws.gram, beta.beta_hat, nu, N=cfg.alpha_grid_N)
    q_hat = baselines.project_q_hat(y, obs, cfg.laguerre_a, ws.grid,
                                    K=None, sigma=args.sigma)
    k_cv = lasso.select_alpha_cv(path, ws.Q, q_hat, args.sigma, obs.n_nodes, ws.dict_)
    f_hat = ws.dict_.synthesize(path.solutions[k_cv].t_hat)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "f_hat.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "f_hat"])
        for i in range(ws.grid.n_nodes):
            writer.writerow([repr(float(ws.grid.nodes[i])), repr(float(f_hat.values[i]))])
    lasso.save_path_csv(path, out / "path.csv")
    sol = path.solutions[k_cv]
    print(f"selected k={k_cv + 1} alpha={path.alphas[k_cv]:.6g} "
          f"active={sol.n_active} kkt={sol.kkt_residual:.2e}")
    return 0


def cmd_diagnose(args) -> int:
    import numpy as np

    from . import diagnostics
    from .dictionary import GramMatrix
    from .inversion import WeightVector

    raw = np.genfromtxt(args.gram, delimiter=",")
    if raw.ndim == 2 and np.isnan(raw[0]).any():
        raw = raw[1:]  # tolerate a header row
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
        raise ValueError("gram CSV must be a square numeric matrix")
    phi = GramMatrix(0.5 * (raw + raw.T))
    if args.nu:
        nu_vals = np.genfromtxt(args.nu, delimiter=",")
        nu_vals = np.atleast_1d(nu_vals[~np.isnan(nu_vals)])
    else:
        nu_vals = np.ones(phi.p)
    nu = WeightVector(nu_vals, "white_noise")
    J = [int(tok) for tok in args.j_set.split(",") if tok.strip()]
    report = diagnostics.diagnose(phi, nu, s=args.s, m=args.m, mu=args.mu, J=J,
                                  n_dirs=args.n_dirs, seed=args.seed)
    print(diagnostics.format_report(report))
    if args.out:
        diagnostics.save_report_csv(report, args.out)
    return 0


def cmd_invert(args) -> int:
    import csv
    import pathlib

    from . import harness, inversion

    cfg = harness.parse_config(args.config)
    ws = harness.build_workspace(cfg)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inversion.save_inverse_images_csv(ws.inv, ws.dict_, out / "psi.csv",
                                      out / "residuals.csv")
    nu_wn = inversion.weights(ws.inv, "white_noise")
    nu_obs = ws.weights_for(cfg.n_obs)
    with open(out / "nu.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "l", "b", "nu_white_noise", "nu_observational"])
        for j, (l, b) in enumerate(ws.dict_.labels):
            writer.writerow([j, l, f"{b:g}", repr(float(nu_wn.nu[j])), repr(float(nu_obs.nu[j]))])
    n_bad = ws.inv.bad_columns().size
    print(f"inverted p={ws.dict_.p} columns; max residual "
          f"{ws.inv.residuals.max():.3e}; columns above 1e-6: {n_bad}")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "table1": cmd_table1,
    "solve": cmd_solve,
    "diagnose": cmd_diagnose,
    "invert": cmd_invert,
}


def main(argv=None) -> int:
    _apply_thread_env()
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # surface a single machine-readable error line
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface: analyze CSV data or run named simulation suites.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import correlation_dissimilarity, cut, hclust, save_clustering
from .dataset import Dataset, load_csv, load_feature_csv, standardize_dataset
from .errors import InputError, NumericalError
from .gapstat import estimate_clusters
from .knockoff import run_knockoff_protolasso
from .pipeline import run_protolasso
from .prototest import run_prototest
from . import simulate as sim

SUITES = (
    "fig3_pvalues",
    "fig4_ep",
    "fig5_prototest",
    "fig6_fdr",
    "fig9_knockoff",
    "appendixA_gap",
)


def default_seed() -> int:
    return int(os.environ.get("PROTOSELECT_SEED", "0"))


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, command: str, config: dict, seed: int, inputs: list[str]):
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "input_digests": {p: _digest(p) for p in inputs},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)


def _add_cluster_count_flags(parser):
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--k", type=int, help="fixed number of clusters")
    group.add_argument("--gap", action="store_true", help="choose K by the gap statistic")
    parser.add_argument("--gap-B", type=int, default=100, help="gap Monte Carlo replicates")


def _resolve_k(X, args, seed) -> int:
    if args.gap:
        curve = estimate_clusters(X, B=args.gap_B, linkage=getattr(args, "linkage", "complete"), seed=seed)
        return curve.K_hat
    if not 1 <= args.k <= X.shape[1]:
        raise InputError(f"--k must lie in 1..{X.shape[1]}")
    return args.k


def _load_dataset(args) -> Dataset:
    if args.response is None and args.response_file is None:
        raise InputError("supply --response or --response-file")
    ds = load_csv(args.input, response=args.response, response_path=args.response_file)
    if getattr(args, "sigma", None) is not None:
        ds = Dataset(X=ds.X, y=ds.y, feature_names=ds.feature_names, sigma=args.sigma)
    return standardize_dataset(ds)


def cmd_cluster(args) -> int:
    X, names = load_feature_csv(args.input)
    from .dataset import standardize

    X = standardize(X)
    seed = args.seed
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.gap:
        curve = estimate_clusters(X, B=args.gap_B, linkage=args.linkage, seed=seed)
        curve.to_csv(str(out_dir / "gap_curve.csv"))
        K = curve.K_hat
        print(f"gap statistic selected K = {K}")
    else:
        K = _resolve_k(X, args, seed)
    clustering = cut(hclust(correlation_dissimilarity(X), args.linkage), K)
    save_clustering(str(out_dir / "clustering.csv"), clustering, names)
    write_manifest(out_dir, "cluster", _snapshot(args), seed, [args.input])
    return 0


def cmd_protolasso(args) -> int:
    ds = _load_dataset(args)
    if ds.sigma is None and not args.sigma_ls:
        raise InputError("supply --sigma or --sigma-ls (n > p required for the latter)")
    seed = args.seed
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    K = _resolve_k(ds.X, args, seed)
    clustering = cut(hclust(correlation_dissimilarity(ds.X)), K)
    res = run_protolasso(
        ds,
        clustering,
        lam=args.lam,
        cv=args.cv,
        alpha=args.alpha,
        seed=seed,
    )
    if args.lam is not None and res.selected.size == 0:
        print(
            "warning: no prototype enters at this penalty; the report is empty",
            file=sys.stderr,
        )
    res.report.to_json(str(out_dir / "report.json"))
    res.report.to_csv(str(out_dir / "intervals.csv"))
    inputs = [args.input] + ([args.response_file] if args.response_file else [])
    write_manifest(out_dir, "protolasso", _snapshot(args), seed, inputs)
    return 0


def cmd_prototest(args) -> int:
    ds = _load_dataset(args)
    seed = args.seed
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    K = _resolve_k(ds.X, args, seed)
    clustering = cut(hclust(correlation_dissimilarity(ds.X)), K)
    report = run_prototest(ds, clustering, q=args.q)
    report.to_json(str(out_dir / "prototest.json"))
    qq = report.qq_data()
    np.savetxt(
        out_dir / "qq_data.csv",
        qq,
        delimiter=",",
        header="uniform_quantile,p_value",
        comments="",
    )
    inputs = [args.input] + ([args.response_file] if args.response_file else [])
    write_manifest(out_dir, "prototest", _snapshot(args), seed, inputs)
    return 0


def cmd_knockoff(args) -> int:
    ds = _load_dataset(args)
    seed = args.seed
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    K = _resolve_k(ds.X, args, seed)
    clustering = cut(hclust(correlation_dissimilarity(ds.X)), K)
    run = run_knockoff_protolasso(ds, clustering, q=args.q, seed=seed)
    run.to_json(str(out_dir / "knockoff.json"), ds.feature_names)
    inputs = [args.input] + ([args.response_file] if args.response_file else [])
    write_manifest(out_dir, "knockoff", _snapshot(args), seed, inputs)
    return 0


def cmd_simulate(args) -> int:
    seed = args.seed
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.suite.endswith(".json"):
        with open(args.suite) as fh:
            cfg = json.load(fh)
        suite = cfg.pop("suite", None)
        if suite not in SUITES:
            raise InputError(f"config must name a suite from {SUITES}")
        params = cfg
    else:
        if args.suite not in SUITES:
            raise InputError(f"unknown suite {args.suite!r}; pick from {SUITES}")
        suite = args.suite
        params = {}
    reps = args.reps
    jobs = args.jobs
    if suite == "fig3_pvalues":
        res = sim.fig3_pvalues(reps=reps or 100, seed=seed, **params)
        for key, vals in res.items():
            pv = np.sort(vals)
            u = np.arange(1, pv.size + 1) / (pv.size + 1) if pv.size else np.array([])
            np.savetxt(
                out_dir / f"pvalues_{key}.csv",
                np.column_stack([u, pv]) if pv.size else np.zeros((0, 2)),
                delimiter=",",
                header="uniform_quantile,p_value",
                comments="",
            )
            print(f"{key}: {pv.size} p-values, KS={sim.ks_uniform(pv):.4f}")
    elif suite == "fig4_ep":
        table = sim.fig4_ep_grid(reps=reps or 20, seed=seed, jobs=jobs, **params)
        table.to_csv(str(out_dir / "ep_grid.csv"))
    elif suite in ("fig5_prototest", "fig6_fdr"):
        res = sim.prototest_experiment(reps=reps or 200, seed=seed, **params)
        np.savetxt(out_dir / "null_pvalues.csv", np.sort(res["null_p"]), delimiter=",")
        np.savetxt(out_dir / "nonnull_pvalues.csv", np.sort(res["nonnull_p"]), delimiter=",")
        with open(out_dir / "fdr.json", "w") as fh:
            json.dump({str(k): v for k, v in res["fdr"].items()}, fh, indent=2)
        for q, v in res["fdr"].items():
            print(f"BH level {q}: achieved FDR {v:.4f}")
    elif suite == "fig9_knockoff":
        table = sim.knockoff_experiment(
            seed=seed, jobs=jobs, **({"S1": reps} if reps else {}) | params
        )
        table.to_csv(str(out_dir / "knockoff_fdp_power.csv"))
        for row in table.rows:
            print(
                f"beta*={row['beta_star']}: mean FDP {row['mean_fdp']:.4f}, "
                f"mean power {row['mean_power']:.4f}"
            )
    else:  # appendixA_gap
        res = sim.gap_recovery_experiment(seeds=reps or 50, seed=seed, **params)
        np.savetxt(
            out_dir / "gap_recovery.csv",
            np.column_stack([res["k_hats"], res["aris"]]),
            delimiter=",",
            header="k_hat,ari",
            comments="",
        )
        print(
            f"recovery rate {res['recovery_rate']:.3f}, median ARI {res['median_ari']:.3f}"
        )
    inputs = [args.suite] if args.suite.endswith(".json") else []
    write_manifest(out_dir, f"simulate:{suite}", _snapshot(args), seed, inputs)
    return 0


def _snapshot(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="protoselect",
        description="Prototype selection with exact post-selection inference",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("cluster", help="cluster features of a CSV matrix")
    pc.add_argument("input")
    pc.add_argument("--linkage", choices=("complete", "single", "average"), default="complete")
    _add_cluster_count_flags(pc)
    pc.add_argument("--seed", type=int, default=default_seed())
    pc.add_argument("--out", default="protoselect_out")
    pc.set_defaults(func=cmd_cluster)

    pl = sub.add_parser("protolasso", help="prototype lasso with selective inference")
    pl.add_argument("input")
    pl.add_argument("--response", help="response column name")
    pl.add_argument("--response-file", help="separate single-column response CSV")
    sig = pl.add_mutually_exclusive_group(required=True)
    sig.add_argument("--sigma", type=float, help="known noise standard deviation")
    sig.add_argument("--sigma-ls", action="store_true", help="estimate sigma by least squares")
    _add_cluster_count_flags(pl)
    lam_group = pl.add_mutually_exclusive_group(required=True)
    lam_group.add_argument("--lambda", dest="lam", type=float, help="lasso penalty")
    lam_group.add_argument("--cv", action="store_true", help="10-fold CV for the penalty")
    pl.add_argument("--alpha", type=float, default=0.05)
    pl.add_argument("--seed", type=int, default=default_seed())
    pl.add_argument("--out", default="protoselect_out")
    pl.set_defaults(func=cmd_protolasso)

    pt = sub.add_parser("prototest", help="selective marginal testing with BH control")
    pt.add_argument("input")
    pt.add_argument("--response")
    pt.add_argument("--response-file")
    pt.add_argument("--sigma", type=float, required=True)
    _add_cluster_count_flags(pt)
    pt.add_argument("--q", type=float, default=0.1, help="BH level")
    pt.add_argument("--seed", type=int, default=default_seed())
    pt.add_argument("--out", default="protoselect_out")
    pt.set_defaults(func=cmd_prototest)

    kn = sub.add_parser("knockoff", help="split-sample knockoff FDR screening")
    kn.add_argument("input")
    kn.add_argument("--response")
    kn.add_argument("--response-file")
    _add_cluster_count_flags(kn)
    kn.add_argument("--q", type=float, default=0.2)
    kn.add_argument("--seed", type=int, default=default_seed())
    kn.add_argument("--out", default="protoselect_out")
    kn.set_defaults(func=cmd_knockoff)

    sm = sub.add_parser("simulate", help="run a named simulation suite")
    sm.add_argument("suite", help="suite name or config.json")
    sm.add_argument("--reps", type=int, default=None)
    sm.add_argument("--seed", type=int, default=default_seed())
    sm.add_argument("--jobs", type=int, default=1)
    sm.add_argument("--out", default="protoselect_out")
    sm.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

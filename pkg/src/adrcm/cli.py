"""Command-line experiment runner with CSV/JSON outputs.

Every output CSV starts with comment lines echoing the full configuration and
the artifact version, so result files are self-describing and two runs with
the same config produce byte-identical bodies.  Wall-clock timings go only
into the JSON manifest.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import __version__, oracle, palm, stats
from .config import EXPERIMENT_KINDS, ConfigError, ExperimentConfig
from .geometry import Space
from .graph import export_text
from .growth import derive_seed, simulate
from .heatmap import heatmap_accumulate
from .kernel import ModelParams, parse_profile

__all__ = ["main", "run_experiment"]


def _header_lines(config: ExperimentConfig) -> list[str]:
    lines = [f"# adrcm {__version__}"]
    for key, value in sorted(config.items().items()):
        lines.append(f"# {key} = {value}")
    return lines


def _write_csv(path: Path, config: ExperimentConfig, columns: list[str], rows) -> None:
    with path.open("w") as fh:
        for line in _header_lines(config):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _replicate_graphs(config: ExperimentConfig, params: ModelParams):
    seeds = [derive_seed(config.seed, i) for i in range(config.replicates)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            graphs = list(
                pool.map(_simulate_one, [(params, config.t, s) for s in seeds])
            )
    else:
        graphs = [simulate(params, config.t, s) for s in seeds]
    return seeds, graphs


def _simulate_one(task):
    params, t, seed = task
    return simulate(params, t, seed)


def _pooled_degree_masses(graphs, which: str, k_max: int) -> np.ndarray:
    """Pooled empirical probabilities of the per-vertex degree counts.

    Probabilities are over all observed counts; the vector is reported up to
    ``k_max`` (so it may sum to slightly less than one).
    """
    counts = np.concatenate(
        [
            np.array([len(a) for a in (g.older if which == "out" else g.younger)])
            for g in graphs
        ]
    )
    masses = np.bincount(counts.astype(np.int64), minlength=k_max + 1).astype(float)
    return (masses / masses.sum())[: k_max + 1]


# ---------------------------------------------------------------------------
# experiment implementations


def _run_grow(config, params, outdir):
    seeds, graphs = _replicate_graphs(config, params)
    outputs = []
    per_rep = []
    for i, g in enumerate(graphs):
        path = outdir / f"graph-{i:03d}.txt"
        path.write_text(export_text(g))
        outputs.append(path.name)
        per_rep.append(
            {
                "seed": seeds[i],
                "vertices": g.n_vertices,
                "edges": g.n_edges,
                "edges_per_t": g.n_edges / config.t,
            }
        )
    summary = {
        "replicates": per_rep,
        "mean_edges_per_t": float(np.mean([r["edges_per_t"] for r in per_rep])),
        "limit_edges_per_t": oracle.out_mean(params),
    }
    return seeds, outputs, summary


def _run_degree(config, params, outdir):
    seeds, graphs = _replicate_graphs(config, params)
    k_max = config.k_max
    rows_out = []
    emp_out = _pooled_degree_masses(graphs, "out", k_max)
    emp_in = _pooled_degree_masses(graphs, "in", k_max)
    nu = oracle.outdegree_pmf(np.arange(k_max + 1), params)
    mu = oracle.indegree_pmf_table(k_max, params)
    for k in range(k_max + 1):
        rows_out.append((k, emp_out[k], nu[k], emp_in[k], mu[k]))
    path = outdir / "degree.csv"
    _write_csv(
        path,
        config,
        ["k", "outdegree_empirical", "outdegree_oracle", "indegree_empirical", "indegree_oracle"],
        rows_out,
    )
    summary = {
        "tv_outdegree": stats.total_variation(emp_out, nu),
        "tv_indegree_kmax": 0.5 * float(np.sum(np.abs(emp_in - mu))),
        "mean_outdegree": float(
            np.mean(np.concatenate([[len(a) for a in g.older] for g in graphs]))
        ),
        "oracle_mean": oracle.out_mean(params),
    }
    return seeds, [path.name], summary


def _run_palm(config, params, outdir):
    rng = np.random.default_rng(derive_seed(config.seed, 0))
    rows = []
    mean_older = 0.0
    mean_younger = 0.0
    for _ in range(config.samples):
        sample = palm.sample_neighborhood(
            params, q=config.q, rng=rng, root_age=_root_age(config), s0=config.s0
        )
        mean_older += len(sample.older)
        mean_younger += len(sample.younger)
        for side, pts in (("older", sample.older), ("younger", sample.younger)):
            for age, pos in zip(pts.ages, pts.positions):
                rows.append((sample.root_age, side, age, *pos))
    path = outdir / "samples.csv"
    coords = [f"x{i + 1}" for i in range(params.space.d)]
    _write_csv(path, config, ["root_age", "side", "age", *coords], rows)
    summary = {
        "samples": config.samples,
        "mean_older": mean_older / config.samples,
        "mean_younger": mean_younger / config.samples,
        "oracle_mean_older": palm.older_mass(params, config.q),
    }
    return [config.seed], [path.name], summary


def _root_age(config):
    return "uniform" if config.root_age == "uniform" else float(config.root_age)


def _run_clustering_sweep(config, params, outdir):
    rng = np.random.default_rng(derive_seed(config.seed, 0))
    rows = []
    q_grid = sorted({config.q, 0.999})
    for gamma in config.gammas:
        for ed in config.edge_densities:
            beta = ed * (1.0 - gamma)
            if config.sweep == "width":
                for a in config.widths:
                    p = ModelParams(
                        beta=beta,
                        gamma=gamma,
                        profile=parse_profile(f"indicator(a={a})", d=config.d),
                        space=Space(config.d),
                    )
                    for q in q_grid:
                        est = palm.estimate_average_clustering(
                            p, config.n_roots, config.n_pairs, q=q, rng=rng
                        )
                        rows.append(
                            ("width", gamma, ed, beta, a, q, "", est.value, est.stderr, est.n)
                        )
            else:
                a = config.widths[0]
                p = ModelParams(
                    beta=beta,
                    gamma=gamma,
                    profile=parse_profile(f"indicator(a={a})", d=config.d),
                    space=Space(config.d),
                )
                for u in config.root_ages:
                    for q in q_grid:
                        est = palm.estimate_local_clustering(
                            u, p, config.n_pairs, q=q, rng=rng
                        )
                        rows.append(
                            ("root_age", gamma, ed, beta, a, q, u, est.value, est.stderr, est.n)
                        )
    path = outdir / "clustering.csv"
    _write_csv(
        path,
        config,
        ["sweep", "gamma", "edge_density", "beta", "a", "q", "u", "value", "stderr", "n"],
        rows,
    )
    return [config.seed], [path.name], {"rows": len(rows)}


def _run_edge_length(config, params, outdir):
    seeds, graphs = _replicate_graphs(config, params)
    lengths = np.concatenate([stats.rescaled_edge_lengths(g) for g in graphs])
    if len(lengths) == 0:
        raise RuntimeError("no edges were produced; increase t")
    edges = np.geomspace(max(lengths.min(), 1e-300), lengths.max(), config.bins + 1)
    counts, _ = np.histogram(lengths, bins=edges)
    emp = counts / len(lengths)
    orc = np.array(
        [
            oracle.edge_length_measure(lo, hi, params)
            for lo, hi in zip(edges[:-1], edges[1:])
        ]
    )
    rows = [
        (lo, hi, e, o) for lo, hi, e, o in zip(edges[:-1], edges[1:], emp, orc)
    ]
    path = outdir / "edge_length.csv"
    _write_csv(path, config, ["bin_lo", "bin_hi", "empirical_mass", "oracle_mass"], rows)
    summary = {
        "edges_total": int(len(lengths)),
        "max_bin_deviation": float(np.max(np.abs(emp - orc))),
        "eta": oracle.eta(params),
    }
    return seeds, [path.name], summary


def _run_heatmap(config, params, outdir):
    if params.space.d != 1:
        raise ConfigError("model.d", "heatmaps are defined for dimension 1")
    rng = np.random.default_rng(derive_seed(config.seed, 0))
    outputs = []
    summary = {}
    for u in config.root_ages:
        samples = [
            palm.sample_neighborhood(params, q=config.q, rng=rng, root_age=u)
            for _ in range(config.samples)
        ]
        grid = heatmap_accumulate(samples, nx=config.grid_nx, ns=config.grid_ns)
        tag = f"{u:g}".replace(".", "p")
        grid_path = outdir / f"heatmap_u{tag}.csv"
        rows = []
        for ix in range(grid.nx):
            for isdx in range(grid.ns):
                rows.append(
                    (
                        grid.x_edges[ix],
                        grid.x_edges[ix + 1],
                        grid.s_edges[isdx],
                        grid.s_edges[isdx + 1],
                        int(grid.counts[ix, isdx]),
                    )
                )
        _write_csv(grid_path, config, ["x_lo", "x_hi", "s_lo", "s_hi", "count"], rows)
        sample_rows = []
        for sample in samples:
            for side, pts in (("older", sample.older), ("younger", sample.younger)):
                for age, pos in zip(pts.ages, pts.positions):
                    sample_rows.append((sample.root_age, side, age, pos[0]))
        samples_path = outdir / f"samples_u{tag}.csv"
        _write_csv(samples_path, config, ["root_age", "side", "age", "x1"], sample_rows)
        outputs += [grid_path.name, samples_path.name]
        summary[f"points_u{tag}"] = grid.n_points
    return [config.seed], outputs, summary


def _run_oracle(config, params, outdir):
    k = np.arange(config.k_max + 1)
    nu = oracle.outdegree_pmf(k, params)
    mu = oracle.indegree_pmf_table(config.k_max, params)
    path_deg = outdir / "oracle_degree.csv"
    _write_csv(
        path_deg,
        config,
        ["k", "outdegree_pmf", "indegree_pmf"],
        [(int(kk), nu[kk], mu[kk]) for kk in k],
    )
    lam_grid = np.geomspace(1e-3, 1e3, 61)
    path_mix = outdir / "oracle_mixing.csv"
    _write_csv(
        path_mix,
        config,
        ["lambda", "density"],
        [(x, float(oracle.mixing_density(x, params))) for x in lam_grid],
    )
    u_grid = np.linspace(0.02, 1.0, 50)
    path_lam = outdir / "oracle_lambda_u.csv"
    _write_csv(
        path_lam,
        config,
        ["u", "lambda_u", "pi_density"],
        [
            (float(u), float(oracle.lambda_u(u, params)), float(oracle.pi_density(u, params)))
            for u in u_grid
        ],
    )
    summary = {
        "out_mean": oracle.out_mean(params),
        "eta": oracle.eta(params),
        "normalization": params.profile.normalization,
    }
    return [config.seed], [path_deg.name, path_mix.name, path_lam.name], summary


_RUNNERS = {
    "grow": _run_grow,
    "degree": _run_degree,
    "palm": _run_palm,
    "clustering-sweep": _run_clustering_sweep,
    "edge-length": _run_edge_length,
    "heatmap": _run_heatmap,
    "oracle": _run_oracle,
}


def run_experiment(config: ExperimentConfig) -> dict:
    """Validate, run, write outputs, and return the manifest dictionary."""
    config.validate()
    params = config.model_params()
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    seeds, outputs, summary = _RUNNERS[config.kind](config, params, outdir)
    manifest = {
        "artifact_version": __version__,
        "config": config.items(),
        "seeds": [int(s) for s in seeds],
        "outputs": outputs,
        "runtime_seconds": time.time() - started,
        "summary": summary,
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, default=float))
    return manifest


# ---------------------------------------------------------------------------
# argument parsing


def _add_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="config file to load")
    for f in fields(ExperimentConfig):
        if f.name.startswith("_") or f.name == "kind":
            continue
        flag = "--" + f.name.replace("_", "-")
        parser.add_argument(flag, type=str, default=None, help=f"override {f.name}")
    parser.set_defaults()


def _build_config(kind: str, args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        text = Path(args.config).read_text()
        config = ExperimentConfig.from_text(text)
    else:
        config = ExperimentConfig()
    overrides = {"kind": kind}
    from .config import _parse_value

    for f in fields(ExperimentConfig):
        if f.name.startswith("_") or f.name == "kind":
            continue
        raw = getattr(args, f.name, None)
        if raw is not None:
            overrides[f.name] = _parse_value(ExperimentConfig, f.name, raw, f.name)
    return replace(config, **overrides)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="adrcm",
        description="Experiments on age-based spatial preferential attachment networks.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENT_KINDS:
        _add_flags(sub.add_parser(kind, help=f"run the {kind} experiment"))
    args = parser.parse_args(argv)
    try:
        config = _build_config(args.kind, args)
        config.validate()
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure -> exit 3
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(manifest["summary"], indent=2, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())

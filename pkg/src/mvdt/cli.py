"""Batch command-line front end.

Every subcommand writes plot-ready CSV/JSON files plus a run manifest into
the --out directory. All randomness flows from --seed; --threads is accepted
for interface stability but execution is serial, which trivially satisfies
the parallel/serial equivalence requirement. Exit codes: 0 success, 2 usage
error, 1 runtime error.
"""
from __future__ import annotations

import json
import os
import sys
import tempfile
import time
import warnings
from pathlib import Path

import click
import numpy as np

from mvdt import datasets
from mvdt.cluster import cluster_pipeline
from mvdt.kernels import build_canonical_set, build_view_kernels
from mvdt.learn import SearchConfig, run_variant
from mvdt.methods import (
    METHOD_NAMES,
    embed_report,
    prepare_context,
)
from mvdt.operator_space import enrich_set
from mvdt.quality import PartitionLabels, ami, q_ch
from mvdt.time_select import entropy_curve
from mvdt.trajectory import Trajectory

TREE_GUARD = 100_000

GEN_CHOICES = ("helix-a", "helix-b", "deformed-plane", "noisy-pair")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            cell if isinstance(cell, str) else _fmt(cell) for cell in row
        ))
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_json(path: Path, payload) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_matrix_csv(path: Path, matrix: np.ndarray, prefix: str) -> None:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    header = [f"{prefix}{j}" for j in range(matrix.shape[1])]
    _write_csv(path, header, matrix)


def _write_raw_matrix_csv(path: Path, matrix: np.ndarray) -> None:
    """Headerless matrix CSV, loadable back through the view loader."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    lines = [",".join(_fmt(x) for x in row) for row in matrix]
    _atomic_write(path, "\n".join(lines) + "\n")


class _Run:
    """Collects outputs and warnings and writes the manifest at the end."""

    def __init__(self, command: str, out: Path, config: dict):
        self.command = command
        self.out = out
        self.config = config
        self.outputs = []
        self.warnings = []
        self.started = time.monotonic()

    def path(self, name: str) -> Path:
        p = self.out / name
        self.outputs.append(str(p))
        return p

    def finish(self) -> None:
        _write_json(self.out / "manifest.json", {
            "command": self.command,
            "config": self.config,
            "outputs": self.outputs,
            "timing": time.monotonic() - self.started,
            "warnings": self.warnings,
        })


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_data(views, labels=None):
    if not views:
        raise click.UsageError("at least one --view CSV is required")
    return datasets.load_views(list(views), labels)


def _merge_config(ctx: click.Context, config_path, params: dict) -> dict:
    """JSON config merged under explicit CLI flags (flags win)."""
    merged = dict(params)
    if config_path:
        with open(config_path, encoding="utf-8") as handle:
            file_conf = json.load(handle)
        for key, value in file_conf.items():
            key = key.replace("-", "_")
            if key not in merged:
                merged[key] = value
                continue
            source = ctx.get_parameter_source(key)
            if source in (click.core.ParameterSource.DEFAULT,
                          click.core.ParameterSource.DEFAULT_MAP, None):
                merged[key] = value
    return merged


view_option = click.option("--view", "views", multiple=True,
                           type=click.Path(exists=True, dir_okay=False),
                           help="View CSV, repeat once per view.")
labels_option = click.option("--labels", "labels", default=None,
                             type=click.Path(exists=True, dir_okay=False),
                             help="Single-column ground-truth labels CSV.")
out_option = click.option("--out", required=True,
                          type=click.Path(file_okay=False),
                          help="Output directory.")
seed_option = click.option("--seed", default=0, show_default=True, type=int)
config_option = click.option("--config", "config_path", default=None,
                             type=click.Path(exists=True, dir_okay=False),
                             help="JSON config merged under CLI flags.")


@click.group()
@click.option("--threads", default=1, show_default=True, type=int,
              help="Accepted for interface stability; execution is serial.")
@click.pass_context
def main(ctx, threads):
    """Multi-view diffusion trajectory toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads


@main.command("gen")
@click.argument("generator", type=click.Choice(GEN_CHOICES))
@click.option("--n", default=None, type=int, help="Number of points.")
@click.option("--input", "input_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Base view CSV (noisy-pair only).")
@click.option("--s", default=0.3, show_default=True, type=float,
              help="Noise level for noisy-pair.")
@click.option("--mode", default="gaussian_pair", show_default=True,
              type=click.Choice(["gaussian_pair", "gaussian_dropout"]))
@seed_option
@out_option
@click.pass_context
def cmd_gen(ctx, generator, n, input_path, s, mode, seed, out):
    """Write one CSV per generated view plus meta.json."""
    out = Path(out)
    params = {"generator": generator, "n": n, "s": s, "mode": mode,
              "seed": seed}
    run = _Run("gen", out, params)
    try:
        if generator == "helix-a":
            data = datasets.gen_helix_a(n or datasets.HELIX_DEFAULT_N)
        elif generator == "helix-b":
            data = datasets.gen_helix_b(n or datasets.HELIX_DEFAULT_N)
        elif generator == "deformed-plane":
            data = datasets.gen_deformed_plane(
                n or datasets.DEFORMED_PLANE_DEFAULT_N, seed=seed)
        else:
            if input_path is None:
                raise click.UsageError("noisy-pair requires --input")
            base = datasets.load_views([input_path]).views[0]
            data = datasets.gen_noisy_pair(base, s=s, mode=mode, seed=seed)
    except click.UsageError:
        raise
    except Exception as exc:  # noqa: BLE001 - runtime errors exit with 1
        _fail(str(exc))
    for idx, view in enumerate(data.views):
        _write_raw_matrix_csv(run.path(f"view{idx + 1}.csv"), view.points)
    meta = {"generator": generator, "parameters": params, "seed": seed}
    if data.latent is not None:
        latent = data.latent
        if latent.ndim == 1:
            latent = latent[:, None]
        _write_raw_matrix_csv(run.path("latent.csv"), latent)
        meta["latent_file"] = "latent.csv"
    _write_json(run.path("meta.json"), meta)
    run.finish()


def _method_params(method, t, k, powers, budget, beam_width, iterations,
                   learning_rate):
    config = {"method": method, "t": t, "k": k}
    if powers:
        config["powers"] = list(powers)
    if budget is not None:
        config["budget"] = budget
    config["beam_width"] = beam_width
    config["iterations"] = iterations
    config["learning_rate"] = learning_rate
    return config


@main.command("embed")
@view_option
@labels_option
@click.option("--method", required=True, type=click.Choice(METHOD_NAMES))
@click.option("--t", default=None, type=int, help="Diffusion horizon.")
@click.option("--k", default=3, show_default=True, type=int,
              help="Embedding dimensions.")
@click.option("--powers", multiple=True, type=int,
              help="Per-view powers for method id.")
@click.option("--budget", default=None, type=int)
@click.option("--beam-width", default=5, show_default=True, type=int)
@click.option("--iterations", default=200, show_default=True, type=int)
@click.option("--learning-rate", default=0.05, show_default=True, type=float)
@seed_option
@config_option
@out_option
@click.pass_context
def cmd_embed(ctx, views, labels, method, t, k, powers, budget, beam_width,
              iterations, learning_rate, seed, config_path, out):
    """Embed the views with one method; writes embedding, spectrum, trajectory."""
    out = Path(out)
    config = _merge_config(ctx, config_path, _method_params(
        method, t, k, powers, budget, beam_width, iterations, learning_rate))
    config["seed"] = seed
    run = _Run("embed", out, config)
    try:
        data = _load_data(views, labels)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            mctx = prepare_context(data)
            emb, sv, traj, resolved_t = embed_report(
                mctx, config, int(config["k"]), seed=seed)
        run.warnings.extend(str(w.message) for w in caught)
    except click.UsageError:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))
    _write_matrix_csv(run.path("embedding.csv"), emb, "psi")
    _write_csv(run.path("singular_values.csv"), ["index", "sigma"],
               [(str(i), s) for i, s in enumerate(np.asarray(sv))])
    _write_json(run.path("trajectory.json"), {
        "method": method,
        "resolved_t": int(resolved_t),
        "trajectory": json.loads(traj.to_json()) if traj is not None else None,
    })
    run.finish()


@main.command("entropy")
@view_option
@click.option("--t-max", default=30, show_default=True, type=int)
@seed_option
@out_option
@click.pass_context
def cmd_entropy(ctx, views, t_max, seed, out):
    """Entropy curve of the uniform expected operator, with its elbow."""
    out = Path(out)
    run = _Run("entropy", out, {"t_max": t_max, "seed": seed})
    try:
        data = _load_data(views)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            opset = enrich_set(build_canonical_set(data))
            curve = entropy_curve(opset, t_max=t_max)
        run.warnings.extend(str(w.message) for w in caught)
        if curve.elbow_fallback:
            run.warnings.append("elbow found by curvature fallback")
    except click.UsageError:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))
    rows = [
        (str(int(t)), e, "true" if int(t) == curve.elbow else "false")
        for t, e in zip(curve.times, curve.entropies)
    ]
    _write_csv(run.path("entropy.csv"), ["t", "entropy", "is_elbow"], rows)
    run.finish()


@main.command("learn")
@view_option
@click.option("--strategy", required=True,
              type=click.Choice(["rand", "cvx_rand", "beam", "direct",
                                 "contrastive"]))
@click.option("--t", default=None, type=int)
@click.option("--k", default=3, show_default=True, type=int)
@click.option("--task", default="clustering", show_default=True,
              type=click.Choice(["clustering", "manifold"]))
@click.option("--beam-width", default=5, show_default=True, type=int)
@click.option("--budget", default=200, show_default=True, type=int)
@click.option("--iterations", default=200, show_default=True, type=int)
@click.option("--learning-rate", default=0.05, show_default=True, type=float)
@seed_option
@config_option
@out_option
@click.pass_context
def cmd_learn(ctx, views, strategy, t, k, task, beam_width, budget,
              iterations, learning_rate, seed, config_path, out):
    """Run one trajectory-learning strategy; writes result JSON and embedding."""
    out = Path(out)
    params = _merge_config(ctx, config_path, {
        "strategy": strategy, "t": t, "k": k, "task": task,
        "beam_width": beam_width, "budget": budget,
        "iterations": iterations, "learning_rate": learning_rate,
        "seed": seed,
    })
    run = _Run("learn", out, params)
    try:
        data = _load_data(views)
        config = SearchConfig(
            strategy=params["strategy"], t=params["t"],
            beam_width=int(params["beam_width"]),
            budget=int(params["budget"]), seed=int(params["seed"]),
            learning_rate=float(params["learning_rate"]),
            iterations=int(params["iterations"]),
        )
        result, dm = run_variant(data, config, k=int(params["k"]),
                                 task=params["task"])
    except click.UsageError:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))
    _write_json(run.path("result.json"), {
        "strategy": strategy,
        "trajectory": json.loads(result.trajectory.to_json()),
        "score": None if np.isnan(result.score) else result.score,
        "evaluations": result.evaluations,
        "resolved_t": result.resolved_t,
        "seed": seed,
    })
    _write_matrix_csv(run.path("embedding.csv"), dm.embedding, "psi")
    run.finish()


@main.command("cluster")
@view_option
@labels_option
@click.option("--method", required=True, type=click.Choice(METHOD_NAMES))
@click.option("--k", required=True, type=int)
@click.option("--runs", default=10, show_default=True, type=int)
@click.option("--t", default=None, type=int)
@seed_option
@config_option
@out_option
@click.pass_context
def cmd_cluster(ctx, views, labels, method, k, runs, t, seed, config_path,
                out):
    """Repeated-run clustering report for one method."""
    out = Path(out)
    params = _merge_config(ctx, config_path, {
        "method": method, "k": k, "runs": runs, "t": t, "seed": seed,
    })
    run = _Run("cluster", out, params)
    try:
        data = _load_data(views, labels)
        report = cluster_pipeline(data, {"method": params["method"],
                                         "t": params["t"]},
                                  k=int(params["k"]), runs=int(params["runs"]),
                                  seed_base=int(params["seed"]))
    except click.UsageError:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))
    _write_json(run.path("report.json"), report.to_dict())
    _write_csv(run.path("per_run_ami.csv"), ["run", "ami"],
               [(str(i), a) for i, a in enumerate(report.per_run_ami)])
    run.finish()


@main.command("benchmark")
@view_option
@labels_option
@click.option("--method", "methods", multiple=True,
              type=click.Choice(METHOD_NAMES),
              help="Repeatable; defaults to all methods.")
@click.option("--k", required=True, type=int)
@click.option("--runs", default=10, show_default=True, type=int)
@click.option("--t", default=None, type=int)
@seed_option
@config_option
@out_option
@click.pass_context
def cmd_benchmark(ctx, views, labels, methods, k, runs, t, seed, config_path,
                  out):
    """Clustering table over several methods with PRR against mdt-rand."""
    out = Path(out)
    methods = list(methods) or list(METHOD_NAMES)
    if "mdt-rand" not in methods:
        methods = ["mdt-rand"] + methods
    params = _merge_config(ctx, config_path, {
        "methods": methods, "k": k, "runs": runs, "t": t, "seed": seed,
    })
    run = _Run("benchmark", out, params)
    try:
        data = _load_data(views, labels)
        reports = {}
        for method in params["methods"]:
            reports[method] = cluster_pipeline(
                data, {"method": method, "t": params["t"]},
                k=int(params["k"]), runs=int(params["runs"]),
                seed_base=int(params["seed"]))
        baseline = reports["mdt-rand"].ami_mean
        if baseline <= 0:
            run.warnings.append(
                "mdt-rand AMI is nonpositive; PRR reported as NaN")
        prr = {
            m: (r.ami_mean / baseline if baseline > 0 else float("nan"))
            for m, r in reports.items()
        }
    except click.UsageError:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))
    payload = {
        m: dict(reports[m].to_dict(), prr=prr[m]) for m in params["methods"]
    }
    _write_json(run.path("report.json"), payload)
    _write_csv(
        run.path("table.csv"),
        ["method", "ami_mean", "ami_std", "prr", "resolved_t"],
        [(m, reports[m].ami_mean, reports[m].ami_std, prr[m],
          str(reports[m].resolved_t)) for m in params["methods"]],
    )
    run.finish()


@main.command("tree")
@view_option
@labels_option
@click.option("--depth", required=True, type=int)
@click.option("--k", required=True, type=int)
@seed_option
@out_option
@click.pass_context
def cmd_tree(ctx, views, labels, depth, k, seed, out):
    """Exhaustively score every discrete trajectory up to a depth."""
    out = Path(out)
    run = _Run("tree", out, {"depth": depth, "k": k, "seed": seed})
    try:
        if depth < 1:
            raise click.UsageError("depth must be >= 1")
        data = _load_data(views, labels)
        opset = enrich_set(build_canonical_set(data))
        v = len(opset)
        total = sum(v ** d for d in range(1, depth + 1))
        if total > TREE_GUARD:
            _fail(
                f"tree of {total} trajectories exceeds the {TREE_GUARD} "
                "guard, reduce depth"
            )
        truth = (PartitionLabels.from_labels(data.labels)
                 if data.labels is not None else None)
        from mvdt.cluster import kmeans
        from mvdt.trajectory import compose, diffusion_map
        rows = []
        stack = [(i,) for i in range(v)]
        while stack:
            steps = stack.pop(0)
            traj = Trajectory.discrete(steps)
            score = q_ch(traj, data, opset, k)
            row = ["-".join(str(s) for s in steps), str(len(steps)), score]
            if truth is not None:
                op = compose(opset, traj)
                emb = diffusion_map(op, l=min(k, op.n)).embedding
                row.append(ami(kmeans(emb, k, seed=seed), truth))
            rows.append(row)
            if len(steps) < depth:
                stack.extend(steps + (i,) for i in range(v))
    except click.UsageError:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc))
    header = ["path", "depth", "q_ch"] + (["ami"] if truth is not None else [])
    _write_csv(run.path("tree.csv"), header, rows)
    run.finish()


if __name__ == "__main__":
    main()

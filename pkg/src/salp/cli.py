"""Command-line driver: every stage of the workflow, headless or served.

Stages share the session-archive directory layout, so a run can be inspected
or resumed between commands. Exit codes: 2 bad configuration, 3 data/format
error, 4 runtime failure.
"""

from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import synth
from .data import (load_dataset_full, read_split, stratified_split, write_split,
                   write_features, write_manifest)
from .errors import ConfigError, DataFormatError, SalpError
from .featurize import pca_fit, pca_transform
from .opf import opf_semi_propagate, write_propagation
from .pipeline import (DEFAULT_TAU, RunParams, run_experiment,
                       format_compare_table, format_run_table, report_line,
                       summarize, EvaluationReport, ExperimentSummary)
from .session import (PROTOCOLS, SessionBundle, SessionState, load_archive,
                      parse_user_policy, save_archive)
from .tsne import TsneParams, project_features, read_projection, write_projection

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


def _fail(code: int, message: str) -> None:
    click.echo(f"salp: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    """Map package exceptions onto the documented exit codes."""
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(EXIT_CONFIG, str(exc))
        except DataFormatError as exc:
            _fail(EXIT_DATA, str(exc))
        except (SalpError, ValueError, FloatingPointError) as exc:
            _fail(EXIT_RUNTIME, str(exc))
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _parse_fractions(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"fractions must be three comma-separated reals, got {text!r}")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"seeds must be comma-separated integers, got {text!r}") from None


@click.group()
@click.option("--quiet", is_flag=True, default=False, help="Suppress progress chatter.")
@click.pass_context
def main(ctx, quiet):
    """Semi-automatic label propagation workbench."""
    ctx.ensure_object(dict)
    ctx.obj["quiet"] = quiet


def _say(ctx, message):
    if not ctx.obj.get("quiet"):
        click.echo(message)


@main.command()
@click.option("--kind", type=click.Choice(["blobs", "digits"]), default="blobs")
@click.option("--blobs", "n_blobs", type=int, default=5, help="Number of blob classes.")
@click.option("--dims", type=int, default=10, help="Feature dimensionality (blobs).")
@click.option("--n", "n_samples", type=int, default=1000, help="Total sample count.")
@click.option("--sep", type=float, default=6.0, help="Center separation in sigma units.")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.pass_context
@_guard
def synth_cmd(ctx, kind, n_blobs, dims, n_samples, sep, seed, out):
    """Generate a labeled dataset (Gaussian blobs or derived digits)."""
    if kind == "blobs":
        X, y = synth.make_blobs(n_blobs, dims, n_samples, sep, seed)
        n_classes = n_blobs
    else:
        X, y = synth.make_digits(n_samples, seed)
        n_classes = 10
    manifest = synth.write_dataset(out, X, y, n_classes=n_classes)
    _say(ctx, f"wrote {manifest} ({X.shape[0]} samples x {X.shape[1]} dims)")


main.add_command(synth_cmd, name="synth")


@main.command()
@click.option("--manifest", type=click.Path(path_type=Path), required=True)
@click.option("--k", type=int, required=True, help="Latent dimensionality.")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.pass_context
@_guard
def featurize(ctx, manifest, k, seed, out):
    """Reduce a dataset's features with PCA; writes a new dataset directory."""
    dataset = load_dataset_full(manifest)
    model = pca_fit(dataset.features, k, seed)
    reduced = pca_transform(model, dataset.features)
    out.mkdir(parents=True, exist_ok=True)
    write_features(out / "features.bin", reduced)
    labels_entry = None
    if dataset.has_labels:
        from .data import write_labels
        write_labels(out / "labels.txt", [s.true_label for s in dataset.samples])
        labels_entry = "labels.txt"
    new_manifest = out / "manifest.txt"
    write_manifest(new_manifest, features="features.bin", labels=labels_entry,
                   classes=dataset.n_classes,
                   thumbnails=str(dataset.thumbnail_dir) if dataset.thumbnail_dir else None)
    _say(ctx, f"wrote {new_manifest} ({reduced.shape[0]} samples x {k} dims)")


@main.command()
@click.option("--manifest", type=click.Path(path_type=Path), required=True)
@click.option("--fractions", default="0.03,0.67,0.30", show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(path_type=Path), required=True,
              help="Session archive directory.")
@click.pass_context
@_guard
def split(ctx, manifest, fractions, seed, out):
    """Stratified S/U/T split written into a session archive directory."""
    dataset = load_dataset_full(manifest)
    result = stratified_split(dataset.samples, _parse_fractions(fractions), seed)
    out.mkdir(parents=True, exist_ok=True)
    write_split(out / "split.txt", result)
    _say(ctx, f"split |S|={len(result.s_ids)} |U|={len(result.u_ids)} "
              f"|T|={len(result.t_ids)} -> {out / 'split.txt'}")


@main.command()
@click.option("--manifest", type=click.Path(path_type=Path), required=True)
@click.option("--split", "split_path", type=click.Path(path_type=Path), default=None,
              help="Defaults to <out>/split.txt.")
@click.option("--perplexity", type=float, default=40.0, show_default=True)
@click.option("--iters", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.pass_context
@_guard
def project(ctx, manifest, split_path, perplexity, iters, seed, out):
    """Embed the S+U pool in 2-D with exact t-SNE."""
    dataset = load_dataset_full(manifest)
    out.mkdir(parents=True, exist_ok=True)
    split_path = split_path or out / "split.txt"
    the_split = read_split(split_path)
    pool = sorted(set(the_split.s_ids) | set(the_split.u_ids))
    params = TsneParams(perplexity=perplexity, max_iters=iters)
    projection = project_features(dataset.features[pool], params, seed)
    write_projection(out / "projection.txt", pool, projection)
    _say(ctx, f"projected {len(pool)} points (final KL {projection.kl_history[-1]:.4f}) "
              f"-> {out / 'projection.txt'}")


@main.command()
@click.option("--manifest", type=click.Path(path_type=Path), required=True)
@click.option("--space", type=click.Choice(["2d", "nd"]), default="2d", show_default=True)
@click.option("--tau", type=float, default=DEFAULT_TAU, show_default=True)
@click.option("--protocol", type=click.Choice(list(PROTOCOLS)), default="salp",
              show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.pass_context
@_guard
def propagate(ctx, manifest, space, tau, protocol, seed, out):
    """Propagate labels over the split; completes the session archive."""
    dataset = load_dataset_full(manifest)
    out.mkdir(parents=True, exist_ok=True)
    the_split = read_split(out / "split.txt")
    truth = dataset.labels()
    pool = sorted(set(the_split.s_ids) | set(the_split.u_ids))
    index_of = {sample_id: row for row, sample_id in enumerate(pool)}
    if space == "2d":
        proj_ids, proj_y, _meta = read_projection(out / "projection.txt")
        if proj_ids != pool:
            raise DataFormatError("projection ids do not match the split's S+U pool")
        coords = proj_y
    else:
        proj_ids, proj_y = [], np.zeros((0, 2))
        coords = dataset.features[pool]
    supervised = [(index_of[i], int(truth[i])) for i in the_split.s_ids]
    unsupervised = [index_of[i] for i in the_split.u_ids]
    local = opf_semi_propagate(coords, supervised, unsupervised)
    pool_arr = np.asarray(pool, dtype=np.int64)
    result = replace(local, ids=pool_arr[local.ids])
    write_propagation(out / "propagation.txt", result)
    session = SessionState(split=the_split, projection_ids=proj_ids,
                           projection_y=proj_y, propagation=result, tau=tau,
                           auto_accept=protocol != "ilp", protocol=protocol,
                           seed=seed)
    save_archive(out, SessionBundle(dataset=dataset, session=session))
    _say(ctx, f"propagated {len(unsupervised)} samples "
              f"(auto-accepted {len(session.auto_ids)} at tau={tau}) -> {out}")


@main.command()
@click.option("--manifest", type=click.Path(path_type=Path), required=True)
@click.option("--protocol", type=click.Choice(list(PROTOCOLS)), required=True)
@click.option("--tau", type=float, default=DEFAULT_TAU, show_default=True)
@click.option("--fractions", default="0.03,0.67,0.30", show_default=True)
@click.option("--seeds", default="1,2,3", show_default=True)
@click.option("--perplexity", type=float, default=40.0, show_default=True)
@click.option("--iters", type=int, default=1000, show_default=True)
@click.option("--user", "user_policy", default="oracle_all", show_default=True,
              help="oracle_all | oracle_fraction:<f> | abstain")
@click.option("--space", type=click.Choice(["2d", "nd"]), default="2d", show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.pass_context
@_guard
def run(ctx, manifest, protocol, tau, fractions, seeds, perplexity, iters,
        user_policy, space, out):
    """Run a protocol over all seeds; writes machine lines + aligned table."""
    dataset = load_dataset_full(manifest)
    seed_list = _parse_seeds(seeds)
    if not seed_list:
        raise ConfigError("need at least one seed")
    policy, fraction = parse_user_policy(user_policy)
    params = RunParams(protocol=protocol, fractions=_parse_fractions(fractions),
                       tau=tau, tsne=TsneParams(perplexity=perplexity, max_iters=iters),
                       user_policy=policy, user_fraction=fraction, space=space)
    reports, summary = run_experiment(dataset, protocol, seed_list, params)
    out.mkdir(parents=True, exist_ok=True)
    lines_path = out / f"report_{protocol}.lines"
    with open(lines_path, "w") as fh:
        for report in reports:
            fh.write(report_line(report) + "\n")
    table = format_run_table(reports, summary)
    (out / f"report_{protocol}.txt").write_text(table)
    with open(out / f"run_{protocol}.meta", "w") as fh:
        fh.write(f"manifest={Path(manifest).resolve()}\n")
        fh.write(f"seeds={','.join(str(s) for s in sorted(seed_list))}\n")
        fh.write(f"protocol={protocol}\n")
    _say(ctx, table.rstrip())


@main.command()
@click.argument("run_dirs", nargs=-1, type=click.Path(path_type=Path))
@click.pass_context
@_guard
def compare(ctx, run_dirs):
    """Tabulate >= 2 completed runs of the same dataset and seeds."""
    if len(run_dirs) < 2:
        raise ConfigError("compare needs at least two run directories")
    rows: list[tuple[ExperimentSummary, int]] = []
    datasets, seed_sets = set(), set()
    for run_dir in run_dirs:
        metas = sorted(Path(run_dir).glob("run_*.meta"))
        lines = sorted(Path(run_dir).glob("report_*.lines"))
        if not metas or not lines:
            raise DataFormatError(f"{run_dir} holds no completed run")
        for meta_path, lines_path in zip(metas, lines):
            meta = dict(line.partition("=")[::2] for line in
                        meta_path.read_text().splitlines())
            datasets.add(meta.get("manifest", ""))
            seed_sets.add(meta.get("seeds", ""))
            reports = []
            for line in lines_path.read_text().splitlines():
                f = line.split()
                reports.append(EvaluationReport(
                    protocol=f[0], seed=int(f[1]), kappa=float(f[2]),
                    propagation_accuracy=None if f[3] == "-" else float(f[3]),
                    n_supervised=int(f[4]), n_unsupervised=0,
                    n_auto=int(f[5]), n_manual=int(f[6]), n_test=int(f[7])))
            rows.append((summarize(reports), reports[0].n_supervised))
    if len(datasets) > 1:
        raise ConfigError("runs cover different datasets; nothing to compare")
    if len(seed_sets) > 1:
        raise ConfigError("runs used different seed sets; nothing to compare")
    click.echo(format_compare_table([r[0] for r in rows], rows[0][1]).rstrip())


@main.command()
@click.option("--archive", type=click.Path(path_type=Path), required=True)
@click.option("--bind", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8008, show_default=True)
@click.option("--frontend", type=click.Path(path_type=Path), default=None,
              help="Static UI bundle directory to serve at /.")
@click.pass_context
@_guard
def serve(ctx, archive, bind, port, frontend):
    """Serve a session archive over HTTP until interrupted; saves on shutdown."""
    import uvicorn

    from .service import create_app

    bundle = load_archive(archive)
    app = create_app(bundle, frontend_dir=frontend)
    _say(ctx, f"serving session {archive} on http://{bind}:{port}")
    try:
        uvicorn.run(app, host=bind, port=port, log_level="warning")
    finally:
        save_archive(archive, bundle)
        _say(ctx, f"session state saved to {archive}")


if __name__ == "__main__":
    main()

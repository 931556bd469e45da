"""Command-line surface: operator export, spectra, filtering, localization,
coarsening, dataset generation, training and evaluation.

Exit codes: 0 success, 1 user/config error, 2 numerical failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import data as data_mod
from . import mesh as mesh_mod
from . import network as net
from .coarsen import build_hierarchy
from .errors import NumericalError, SpecmeshError, UserError
from .operators import (
    assemble_graph_laplacian,
    estimate_lambda_max,
    lb_operator,
    write_area,
    write_triplets,
)
from .oracle import eig_decompose
from .poly import FilterCoefficients, eval_poly_recurrence, filter_apply, get_family

OPERATOR_KINDS = ("lb", "graph")


def _load_mesh(spec: str) -> mesh_mod.TriMesh:
    """A mesh argument is an OFF path or 'icosphere:SUBDIVISIONS[:RADIUS]'."""
    if spec.startswith("icosphere:"):
        parts = spec.split(":")
        sub = int(parts[1])
        radius = float(parts[2]) if len(parts) > 2 else 1.0
        return mesh_mod.generate_icosphere(sub, radius)
    path = Path(spec)
    if not path.exists():
        raise UserError(f"mesh file not found: {spec}")
    with open(path) as fh:
        return mesh_mod.load_off(fh)


def _build_operator(mesh: mesh_mod.TriMesh, kind: str):
    if kind == "lb":
        report = mesh_mod.validate(mesh)
        if not report.ok:
            raise UserError(
                f"mesh failed validation: {report.nonmanifold_edges} nonmanifold "
                f"edges, {len(report.degenerate_faces)} degenerate faces, "
                f"connected={report.connected}"
            )
        return lb_operator(mesh)
    if kind == "graph":
        return assemble_graph_laplacian(mesh)
    raise UserError(f"unknown operator kind {kind!r}; choose from {OPERATOR_KINDS}")


@click.group()
def main():
    """Spectral convolutional networks on triangle meshes."""


@main.command()
@click.option("--mesh", "mesh_spec", required=True, help="OFF path or icosphere:N[:R]")
@click.option("--kind", type=click.Choice(OPERATOR_KINDS), default="lb")
@click.option("--out", required=True, help="output file prefix")
def operator(mesh_spec, kind, out):
    """Assemble the operator, estimate lambda_max, export triplets + areas."""
    mesh = _load_mesh(mesh_spec)
    op = _build_operator(mesh, kind)
    lam = estimate_lambda_max(op)
    with open(out + ".triplets", "w") as fh:
        write_triplets(op.C, fh)
    with open(out + ".area", "w") as fh:
        write_area(op.A, fh)
    summary = {"n": op.n, "nnz": int(op.C.nnz), "lambda_max": lam, "kind": op.kind}
    with open(out + ".json", "w") as fh:
        json.dump(summary, fh, indent=2)
    click.echo(json.dumps(summary))


@main.command()
@click.option("--mesh", "mesh_spec", required=True)
@click.option("--kind", type=click.Choice(OPERATOR_KINDS), default="lb")
@click.option("--out", required=True)
def spectrum(mesh_spec, kind, out):
    """Dense generalized eigenvalues as CSV (index, lambda)."""
    mesh = _load_mesh(mesh_spec)
    op = _build_operator(mesh, kind)
    eig = eig_decompose(op)
    with open(out, "w") as fh:
        fh.write("index,lambda\n")
        for j, lam in enumerate(eig.lambdas):
            fh.write(f"{j},{lam:.17g}\n")
    click.echo(f"wrote {len(eig.lambdas)} eigenvalues to {out}")


@main.command("filter")
@click.option("--mesh", "mesh_spec", required=True)
@click.option("--kind", type=click.Choice(OPERATOR_KINDS), default="lb")
@click.option("--family", type=click.Choice(("chebyshev", "laguerre", "hermite")),
              default="chebyshev")
@click.option("--theta", required=True, help="comma-separated coefficients")
@click.option("--signal", "signal_path", default=None,
              help="CSV with one value per vertex; default: impulse at --vertex")
@click.option("--vertex", type=int, default=0)
@click.option("--out", required=True)
def filter_cmd(mesh_spec, kind, family, theta, signal_path, vertex, out):
    """Apply a polynomial spectral filter to a signal."""
    mesh = _load_mesh(mesh_spec)
    op = _build_operator(mesh, kind)
    estimate_lambda_max(op)
    from .operators import normalize

    opn = normalize(op, family)
    coeffs = FilterCoefficients(
        np.array([float(t) for t in theta.split(",")]), family
    )
    if signal_path is not None:
        f = np.loadtxt(signal_path, ndmin=1)
        if len(f) != mesh.n_vertices:
            raise UserError(
                f"signal has {len(f)} values, mesh has {mesh.n_vertices} vertices"
            )
    else:
        if not 0 <= vertex < mesh.n_vertices:
            raise UserError(f"vertex {vertex} out of range")
        f = np.zeros(mesh.n_vertices)
        f[vertex] = 1.0
    h = filter_apply(opn, f, coeffs)
    np.savetxt(out, h, fmt="%.17g")
    click.echo(f"wrote filtered signal to {out}")


@main.command()
@click.option("--mesh", "mesh_spec", required=True)
@click.option("--kind", type=click.Choice(OPERATOR_KINDS), default="lb")
@click.option("--family", type=click.Choice(("chebyshev", "laguerre", "hermite")),
              default="chebyshev")
@click.option("--order", "k_max", type=int, default=5, help="highest order K")
@click.option("--vertex", type=int, required=True)
@click.option("--out", required=True)
def localize(mesh_spec, kind, family, k_max, vertex, out):
    """Per-vertex impulse responses of single-order filters P_k, k = 1..K.

    Each column is zero outside the k-ring of the impulse vertex.
    """
    mesh = _load_mesh(mesh_spec)
    if not 0 <= vertex < mesh.n_vertices:
        raise UserError(f"vertex {vertex} out of range")
    op = _build_operator(mesh, kind)
    estimate_lambda_max(op)
    from .operators import normalize
    from .poly import impulse_response

    opn = normalize(op, family)
    dist = mesh_mod.ring_distances(mesh, vertex)
    columns = []
    for k in range(1, k_max + 1):
        theta = np.zeros(k + 1)
        theta[k] = 1.0
        columns.append(impulse_response(opn, vertex, FilterCoefficients(theta, family)))
    with open(out, "w") as fh:
        header = ",".join(f"p{k}" for k in range(1, k_max + 1))
        fh.write(f"vertex,ring_distance,{header}\n")
        for v in range(mesh.n_vertices):
            vals = ",".join(f"{col[v]:.17g}" for col in columns)
            fh.write(f"{v},{dist[v]},{vals}\n")
    click.echo(f"wrote impulse responses to {out}")


@main.command()
@click.option("--mesh", "mesh_spec", required=True)
@click.option("--kind", type=click.Choice(OPERATOR_KINDS), default="lb")
@click.option("--levels", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True)
def coarsen(mesh_spec, kind, levels, seed, out):
    """Export the coarsening hierarchy as JSON."""
    mesh = _load_mesh(mesh_spec)
    op = _build_operator(mesh, kind)
    h = build_hierarchy(op, levels, seed)
    doc = {"depth": h.depth, "order_seed": seed, "levels": []}
    for lv in h.levels:
        coo = lv.operator.C.tocoo()
        doc["levels"].append(
            {
                "n": lv.n,
                "padded_size": lv.padded_size,
                "parent_map": None if lv.parent_map is None else lv.parent_map.tolist(),
                "permutation": lv.permutation.tolist(),
                "fake_mask": lv.fake_mask.astype(int).tolist(),
                "operator": {
                    "rows": coo.row.tolist(),
                    "cols": coo.col.tolist(),
                    "values": coo.data.tolist(),
                },
                "area": lv.operator.A.tolist(),
            }
        )
    with open(out, "w") as fh:
        json.dump(doc, fh)
    click.echo(f"wrote {len(h.levels)}-level hierarchy to {out}")


@main.command()
@click.option("--family", type=click.Choice(("chebyshev", "laguerre", "hermite")),
              required=True)
@click.option("--order", "k_max", type=int, default=6)
@click.option("--samples", type=int, default=512)
@click.option("--out", required=True)
def polyplot(family, k_max, samples, out):
    """CSV of P_k(lambda), k = 1..K, sampled over the family domain."""
    fam = get_family(family)
    lo, hi = fam.domain
    lam = np.linspace(lo, hi, samples)
    basis = eval_poly_recurrence(family, k_max + 1, lam)
    with open(out, "w") as fh:
        header = ",".join(f"p{k}" for k in range(1, k_max + 1))
        fh.write(f"lambda,{header}\n")
        for i, x in enumerate(lam):
            vals = ",".join(f"{basis[k, i]:.17g}" for k in range(1, k_max + 1))
            fh.write(f"{x:.17g},{vals}\n")
    click.echo(f"wrote polynomial table to {out}")


@main.command("gen-data")
@click.option("--mesh", "mesh_spec", required=True)
@click.option("--n-per-class", type=int, default=100)
@click.option("--noise-sigma", type=float, default=0.3)
@click.option("--bump-width", type=float, default=2.0)
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, help="output file prefix")
def gen_data(mesh_spec, n_per_class, noise_sigma, bump_width, seed, out):
    """Generate the synthetic bump dataset; writes CSV plus a manifest."""
    mesh = _load_mesh(mesh_spec)
    data = data_mod.generate_bump_dataset(
        mesh, n_per_class, noise_sigma, bump_width, seed
    )
    with open(out + ".csv", "w") as fh:
        data_mod.save_signals_csv(data, fh)
    manifest = {
        "mesh": mesh_spec,
        "n_per_class": n_per_class,
        "noise_sigma": noise_sigma,
        "bump_width": bump_width,
        "seed": seed,
        "n_samples": len(data),
        "n_groups": int(len(np.unique(data.group_ids))),
        "class_counts": {
            str(c): int(np.sum(data.labels == c)) for c in np.unique(data.labels)
        },
    }
    with open(out + ".json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    click.echo(json.dumps(manifest))


def _run_config(path: str) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    for key in ("mesh", "operator", "family", "layers"):
        if key not in cfg:
            raise UserError(f"config missing required key {key!r}")
    return cfg


def _build_pipeline(cfg: dict):
    """Shared by train/eval: mesh, hierarchy, dataset splits, model skeleton."""
    mesh = _load_mesh(cfg["mesh"])
    kind = {"lb": "lb", "graph": "graph"}.get(cfg["operator"])
    if kind is None:
        raise UserError(f"operator must be 'lb' or 'graph', got {cfg['operator']!r}")
    op = _build_operator(mesh, kind)

    specs = [
        net.LayerSpec(
            filters_out=layer["filters"], K=layer["K"], pool_p=layer.get("pool_p", 0)
        )
        for layer in cfg["layers"]
    ]
    depth = sum(s.pool_p for s in specs)
    hierarchy = build_hierarchy(op, max(depth, 1), cfg.get("coarsen_seed", 0))

    ds_cfg = cfg.get("dataset", {})
    if "csv" in ds_cfg:
        with open(ds_cfg["csv"]) as fh:
            dataset = data_mod.load_signals_csv(fh, mesh)
    else:
        dataset = data_mod.generate_bump_dataset(
            mesh,
            ds_cfg.get("n_per_class", 100),
            ds_cfg.get("noise_sigma", 0.3),
            ds_cfg.get("bump_width", 2.0),
            ds_cfg.get("seed", 0),
        )
    fractions = cfg.get("split", [0.6, 0.2, 0.2])
    splits = data_mod.split_grouped(dataset, fractions, cfg.get("seed", 0))

    train_kwargs = dict(cfg.get("train", {}))
    train_kwargs.setdefault("seed", cfg.get("seed", 0))
    tc = net.TrainConfig(**train_kwargs)
    model = net.SpectralMeshModel(
        hierarchy,
        cfg["family"],
        specs,
        n_classes=int(np.max(dataset.labels)) + 1,
        hidden=tc.hidden,
        use_bias=tc.use_bias,
    )
    return model, splits, tc


PARAM_ORDER_KEY = "param_order"


def save_checkpoint(model, cfg: dict, out_dir: Path, epoch: int) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    order = sorted(model.params)
    manifest = {
        "config": cfg,
        "epoch": epoch,
        PARAM_ORDER_KEY: [[k, list(model.params[k].shape)] for k in order],
    }
    with open(out_dir / "checkpoint.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    flat = np.concatenate([model.params[k].ravel() for k in order])
    flat.astype("<f8").tofile(out_dir / "params.bin")


def load_checkpoint(ckpt_dir: Path):
    with open(ckpt_dir / "checkpoint.json") as fh:
        manifest = json.load(fh)
    model, splits, tc = _build_pipeline(manifest["config"])
    flat = np.fromfile(ckpt_dir / "params.bin", dtype="<f8")
    params = {}
    pos = 0
    for name, shape in manifest[PARAM_ORDER_KEY]:
        size = int(np.prod(shape)) if shape else 1
        params[name] = flat[pos:pos + size].reshape(shape)
        pos += size
    if pos != len(flat):
        raise UserError("parameter file does not match checkpoint manifest")
    model.params = params
    return model, splits, tc, manifest


@main.command("train")
@click.option("--config", "config_path", required=True, help="run config JSON")
@click.option("--out", required=True, help="output directory")
def train_cmd(config_path, out):
    """End-to-end: data -> hierarchy -> train -> evaluate; writes checkpoint,
    history CSV, and metrics JSON."""
    cfg = _run_config(config_path)
    out_dir = Path(out)
    model, (train_split, val_split, test_split), tc = _build_pipeline(cfg)

    _, history = net.train(model, train_split, val_split, tc)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "history.csv", "w") as fh:
        fh.write("epoch,lr,train_loss,val_loss,val_acc\n")
        for row in history:
            fh.write(
                f"{row['epoch']},{row['lr']:.17g},{row['train_loss']:.17g},"
                f"{row.get('val_loss', float('nan')):.17g},"
                f"{row.get('val_acc', float('nan')):.17g}\n"
            )
    save_checkpoint(model, cfg, out_dir, epoch=tc.epochs)

    metrics = {
        "val": net.evaluate(model, val_split, tc.positive_class).to_dict(),
        "test": net.evaluate(model, test_split, tc.positive_class).to_dict()
        if len(test_split.labels)
        else None,
    }
    with open(out_dir / "metrics.json", "w") as fh:
        json.dump(metrics, fh, indent=2)
    click.echo(json.dumps(metrics))


@main.command("eval")
@click.option("--checkpoint", "ckpt", required=True, help="checkpoint directory")
@click.option("--split", type=click.Choice(("train", "val", "test")), default="val")
@click.option("--signals", "signals_path", default=None,
              help="evaluate an external signals CSV instead of a stored split")
@click.option("--out", default=None, help="metrics JSON output path")
def eval_cmd(ckpt, split, signals_path, out):
    """Evaluate a checkpoint on a stored split or an external signals CSV."""
    model, splits, tc, manifest = load_checkpoint(Path(ckpt))
    if signals_path is not None:
        mesh = _load_mesh(manifest["config"]["mesh"])
        with open(signals_path) as fh:
            data = data_mod.load_signals_csv(fh, mesh)
    else:
        data = splits[("train", "val", "test").index(split)]
    metrics = net.evaluate(model, data, tc.positive_class).to_dict()
    if out:
        with open(out, "w") as fh:
            json.dump(metrics, fh, indent=2)
    click.echo(json.dumps(metrics))


def entry():
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except NumericalError as exc:
        click.echo(f"numerical error: {exc}", err=True)
        sys.exit(2)
    except UserError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except SpecmeshError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    entry()

"""Command-line front door: distribution queries, conditional-sampling
with validation, model fitting, and validation runs.

Exit codes: 0 success, 1 failed check, 2 usage/schema error, 3 runtime
failure. Documented JSON/CSV goes to stdout; logs go to stderr.
"""

import csv
import hashlib
import json
import os
import sys

import click
import numpy as np

from . import __version__
from .augment import brute_force_arrays, sample_conditional_batch
from .diagnostics import geweke_test
from .models.common import McmcConfig, config_hash
from .models.factorization import FactorizationGeweke, FactorizationModel, fit_factorization
from .models.flights import FlightModel, fit_flights
from .models.iid_nb import IidNbGeweke, IidNbModel, fit_iid_nb
from .orderstats import OrderSpec, OrderStatDistribution, estimate_dispersion
from .parents import NegBinParent, PoissonParent


def _emit(payload):
    click.echo(json.dumps(payload, sort_keys=True))


def _log(msg):
    click.echo(msg, err=True)


def parse_parent(text):
    """`pois:MU` or `nb:ALPHA,P`."""
    try:
        family, _, args = text.partition(":")
        if family == "pois":
            return PoissonParent(float(args))
        if family == "nb":
            alpha, p = args.split(",")
            return NegBinParent(float(alpha), float(p))
    except (ValueError, TypeError):
        pass
    raise click.UsageError(f"malformed parent spec {text!r}: expected pois:MU or nb:ALPHA,P")


def _resolve_spec(r, d, named):
    if d is None:
        raise click.UsageError("--d is required")
    try:
        if named == "min":
            return OrderSpec.minimum(d)
        if named == "med":
            return OrderSpec.median(d)
        if named == "max":
            return OrderSpec.maximum(d)
        if r is None:
            raise click.UsageError("provide --r or one of --min/--med/--max")
        return OrderSpec(r, d)
    except ValueError as exc:
        raise click.UsageError(str(exc))


@click.group()
@click.option("--seed", type=int, default=None,
              help="Seed for every random operation in this invocation [default: 0].")
@click.option("--threads", type=int, default=None, envvar="ORDSTAT_THREADS",
              help="Upper bound on worker parallelism.")
@click.version_option(__version__)
@click.pass_context
def main(ctx, seed, threads):
    ctx.obj = {"seed": seed, "threads": threads,
               "rng": np.random.default_rng(np.random.SeedSequence(seed or 0))}


# ---------------------------------------------------------------------------
# dist


@main.command("dist")
@click.argument("parent")
@click.argument("action", type=click.Choice(["pmf", "cdf", "sample", "dispersion"]))
@click.option("--r", type=int, default=None)
@click.option("--d", type=int, default=None)
@click.option("--min", "named", flag_value="min")
@click.option("--med", "named", flag_value="med")
@click.option("--max", "named", flag_value="max")
@click.option("--y", type=int, default=None, help="evaluation point (pmf/cdf)")
@click.option("--n", type=int, default=None,
              help="number of draws (sample) / Monte Carlo size (dispersion)")
@click.pass_context
def dist_cmd(ctx, parent, action, r, d, named, y, n):
    """Evaluate or sample an order-statistic distribution."""
    spec = _resolve_spec(r, d, named)
    dist = OrderStatDistribution(parse_parent(parent), spec)
    if action in ("pmf", "cdf"):
        if y is None:
            raise click.UsageError(f"{action} requires --y")
        _emit({action: float(getattr(dist, action)(y))})
    elif action == "sample":
        if n is None:
            raise click.UsageError("sample requires --n")
        for v in dist.sample(ctx.obj["rng"], size=n):
            click.echo(int(v))
    else:
        est = estimate_dispersion(dist, n if n is not None else 200000,
                                  ctx.obj["rng"])
        _emit({"mean": est.mean, "variance": est.variance, "index": est.index,
               "stderr": est.mc_stderr_index, "n": est.n_samples})


# ---------------------------------------------------------------------------
# augment


@main.command("augment")
@click.option("--parent", "parent_text", required=True)
@click.option("--r", type=int, required=True)
@click.option("--d", type=int, required=True)
@click.option("--y", type=int, required=True)
@click.option("--n", type=int, default=1, show_default=True)
@click.option("--no-breaks", is_flag=True)
@click.option("--validate", "do_validate", is_flag=True,
              help="Also compare the empirical first-coordinate law against the enumeration oracle.")
@click.pass_context
def augment_cmd(ctx, parent_text, r, d, y, n, no_breaks, do_validate):
    """Draw latent vectors conditioned on an observed order statistic;
    one JSON object per line."""
    parent = parse_parent(parent_text)
    try:
        spec = OrderSpec(r, d)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    rng = ctx.obj["rng"]
    values, cats, break_step, _ = sample_conditional_batch(
        np.full(n, y), spec.r, spec.D, parent, rng, use_breaks=not no_breaks
    )
    for i in range(n):
        bs = int(break_step[i])
        _emit({"values": values[i].tolist(),
               "categories": cats[i].tolist(),
               "break_step": None if bs < 0 else bs})
    if do_validate:
        z_max = max(int(parent.quantile_bound(1e-11)), y + 1)
        tuples, probs = brute_force_arrays(y, spec, parent, z_max)
        oracle = np.bincount(tuples[:, 0], weights=probs, minlength=z_max + 1)
        emp = np.bincount(values[:, 0], minlength=z_max + 1)[: z_max + 1] / n
        tv = 0.5 * float(np.abs(oracle - emp).sum())
        _emit({"validate": {"tv_first_coordinate": tv, "n": n,
                            "oracle_support_bound": z_max}})


# ---------------------------------------------------------------------------
# fit


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _read_csv_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _schema_error(path, line_no, msg):
    raise click.UsageError(f"{path}:{line_no}: {msg}")


def _load_counts(path):
    rows = _read_csv_rows(path)
    out = []
    for i, row in enumerate(rows, start=1):
        if not row or (i == 1 and not row[0].strip().lstrip("-").isdigit()):
            continue  # header or blank
        try:
            v = int(row[0])
        except ValueError:
            _schema_error(path, i, f"expected an integer count, got {row[0]!r}")
        if v < 0:
            _schema_error(path, i, "counts must be nonnegative")
        out.append(v)
    if not out:
        _schema_error(path, 1, "no data rows found")
    return np.asarray(out, dtype=np.int64)


def _load_triplets(path):
    rows = _read_csv_rows(path)
    out = []
    for i, row in enumerate(rows, start=1):
        if not row:
            continue
        if i == 1 and not row[0].strip().lstrip("-").isdigit():
            continue
        if len(row) != 3:
            _schema_error(path, i, "expected row,col,count")
        try:
            out.append((int(row[0]), int(row[1]), int(row[2])))
        except ValueError:
            _schema_error(path, i, f"non-integer field in {row!r}")
    if not out:
        _schema_error(path, 1, "no data rows found")
    return out


def _load_pairs(path):
    rows = _read_csv_rows(path)
    out = []
    for i, row in enumerate(rows, start=1):
        if not row:
            continue
        if i == 1 and not row[0].strip().lstrip("-").isdigit():
            continue
        if len(row) != 2:
            _schema_error(path, i, "expected row,col")
        out.append((int(row[0]), int(row[1])))
    return out


def _load_flight_records(path):
    rows = _read_csv_rows(path)
    out = []
    for i, row in enumerate(rows, start=1):
        if not row:
            continue
        if i == 1 and row[-1].strip().lower() in ("minutes", "count", "y"):
            continue
        if len(row) != 4:
            _schema_error(path, i, "expected origin,dest,distance_miles,minutes")
        try:
            out.append((row[0].strip(), row[1].strip(), float(row[2]), int(row[3])))
        except ValueError:
            _schema_error(path, i, f"malformed record {row!r}")
    if not out:
        _schema_error(path, 1, "no data rows found")
    return out


def _load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})")
    if not isinstance(doc, dict):
        raise click.UsageError(f"{path}:1: config must be a JSON object")
    return doc


def _mcmc_config(doc, seed_override):
    block = doc.get("mcmc", {})
    try:
        cfg = McmcConfig(
            n_chains=int(block.get("n_chains", 4)),
            n_warmup=int(block.get("n_warmup", 4000)),
            n_samples=int(block.get("n_samples", 500)),
            thin=int(block.get("thin", 20)),
            seed=int(seed_override if seed_override is not None
                     else block.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise click.UsageError(f"mcmc config: {exc}")
    return cfg


@main.command("fit")
@click.option("--model", "model_kind", required=True,
              type=click.Choice(["iid-nb", "factorization", "flights"]))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", type=click.Path(exists=True), default=None)
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--fixed-d", type=int, default=None,
              help="flights only: fix every route order instead of inferring it")
@click.pass_context
def fit_cmd(ctx, model_kind, data_path, mask_path, config_path, out_dir, fixed_d):
    """Run a Gibbs fit and write posterior samples + manifest to --out."""
    doc = _load_config(config_path)
    cfg = _mcmc_config(doc, ctx.obj["seed"])  # --seed overrides config seed
    mblock = doc.get("model", {})

    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "command": "fit",
        "model": model_kind,
        "config": doc,
        "resolved_mcmc": cfg.to_dict(),
        "seed": cfg.seed,
        "version": __version__,
        "inputs": {os.path.basename(data_path): _sha256(data_path)},
        "outputs": ["meta.json", "*.csv"],
    }
    if mask_path:
        manifest["inputs"][os.path.basename(mask_path)] = _sha256(mask_path)
    manifest["manifest_hash"] = config_hash(manifest)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    try:
        if model_kind == "iid-nb":
            data = _load_counts(data_path)
            if "r" not in mblock or "d" not in mblock:
                raise click.UsageError("config model block needs integer fields r and d")
            model = IidNbModel(
                spec=OrderSpec(int(mblock["r"]), int(mblock["d"])),
                a=float(mblock.get("a", 1.0)), b=float(mblock.get("b", 1.0)),
                e=float(mblock.get("e", 1.0)), f=float(mblock.get("f", 1.0)),
            )
            samples = fit_iid_nb(data, model, cfg)
        elif model_kind == "factorization":
            triplets = _load_triplets(data_path)
            I = max(t[0] for t in triplets) + 1
            J = max(t[1] for t in triplets) + 1
            Y = np.zeros((I, J), dtype=np.int64)
            for r_, c_, v in triplets:
                Y[r_, c_] = v
            mask = np.zeros((I, J), dtype=bool)
            if mask_path:
                for r_, c_ in _load_pairs(mask_path):
                    mask[r_, c_] = True
            if "k" not in mblock or "d" not in mblock:
                raise click.UsageError("config model block needs integer fields k and d")
            model = FactorizationModel(
                K=int(mblock["k"]), D=int(mblock["d"]),
                a_theta=float(mblock.get("a_theta", 1.0)),
                b_theta=float(mblock.get("b_theta", 1.0)),
                a_phi=float(mblock.get("a_phi", 1.0)),
                b_phi=float(mblock.get("b_phi", 1.0)),
            )
            samples = fit_factorization(Y, mask, model, cfg)
        else:
            records = _load_flight_records(data_path)
            model = FlightModel(
                d_max=int(mblock.get("d_max", 9)),
                fixed_d=fixed_d if fixed_d is not None else mblock.get("fixed_d"),
                a0=float(mblock.get("a0", 1.0)), b0=float(mblock.get("b0", 1.0)),
            )
            samples = fit_flights(records, model, cfg)
    except click.UsageError:
        raise
    except ValueError as exc:
        raise click.UsageError(str(exc))
    except Exception as exc:  # numerical failure: dump state, exit 3
        dump = os.path.join(out_dir, "failure_state.json")
        with open(dump, "w") as fh:
            json.dump({"error": repr(exc)}, fh)
        _log(f"runtime failure; state dump at {dump}")
        sys.exit(3)

    samples.save(out_dir)
    _emit({"out": out_dir, "n_samples": samples.n_total,
           "config_hash": samples.meta.get("config_hash")})


# ---------------------------------------------------------------------------
# validate


@main.group()
def validate():
    """Correctness checks with machine-readable reports."""


_SMALL_GRID = [
    ("pois:2", 1, 2), ("pois:2", 2, 3), ("pois:2", 3, 3),
    ("pois:0.5", 1, 3), ("pois:5", 2, 4), ("nb:2,0.5", 2, 3),
]


@validate.command("augment-oracle")
@click.option("--grid", type=click.Choice(["small"]), default=None)
@click.option("--parent", "parent_text", default=None)
@click.option("--r", type=int, default=None)
@click.option("--d", type=int, default=None)
@click.option("--y", type=int, default=None)
@click.option("--n", type=int, default=20000, show_default=True)
@click.pass_context
def validate_augment(ctx, grid, parent_text, r, d, y, n):
    """Compare the conditional sampler against the enumeration oracle."""
    rng = ctx.obj["rng"]
    cells = []
    if parent_text is not None:
        if r is None or d is None:
            raise click.UsageError("--parent requires --r and --d")
        try:
            OrderSpec(r, d)
        except ValueError as exc:
            raise click.UsageError(str(exc))
        cells.append((parent_text, r, d, y))
    else:
        grid = grid or "small"
        cells = [(p, rr, dd, None) for (p, rr, dd) in _SMALL_GRID]

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["parent", "r", "D", "Y", "tv", "bound", "pass"])
    ok = True
    for parent_text_, rr, dd, yy in cells:
        parent = parse_parent(parent_text_)
        spec = OrderSpec(rr, dd)
        dist = OrderStatDistribution(parent, spec)
        ys = [yy] if yy is not None else [
            v for v in range(8) if dist.pmf(v) > 1e-4
        ]
        for y0 in ys:
            z_max = max(int(parent.quantile_bound(1e-11)), y0 + 1)
            tuples, probs = brute_force_arrays(y0, spec, parent, z_max)
            oracle = np.bincount(tuples[:, 0], weights=probs, minlength=z_max + 1)
            values, _, _, _ = sample_conditional_batch(
                np.full(n, y0), rr, dd, parent, rng)
            emp = np.bincount(values[:, 0], minlength=z_max + 1)[: z_max + 1] / n
            tv = 0.5 * float(np.abs(oracle - emp).sum())
            bound = 0.012 * np.sqrt(1e5 / n) + 0.003
            cell_ok = tv < bound
            ok = ok and cell_ok
            writer.writerow([parent_text_, rr, dd, y0, f"{tv:.5f}",
                             f"{bound:.5f}", cell_ok])
    sys.exit(0 if ok else 1)


@validate.command("geweke")
@click.option("--model", "model_kind", required=True,
              type=click.Choice(["iid-nb", "factorization"]))
@click.option("--n", type=int, default=20000, show_default=True)
@click.pass_context
def validate_geweke(ctx, model_kind, n):
    """Joint-distribution test of the model's Gibbs kernels."""
    rng = ctx.obj["rng"]
    if model_kind == "iid-nb":
        adapter = IidNbGeweke(IidNbModel(spec=OrderSpec(2, 3)), n_data=4)
    else:
        adapter = FactorizationGeweke(FactorizationModel(K=2, D=3), I=4, J=4)
    report = geweke_test(adapter, adapter.stats(), n_forward=n, n_chain=n, rng=rng)
    _emit(report.to_json_dict())
    sys.exit(0 if report.passed else 1)


if __name__ == "__main__":
    main()

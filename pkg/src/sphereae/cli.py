"""Command-line entry point: one subcommand per experiment.

Exit codes: 0 success, 2 configuration error, 3 data/parse error,
4 numerical failure (divergence, degenerate latent, failed gradcheck).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .data import load_mnist_dir, synthetic_manifold
from .errors import ConfigError, DataError, DomainError, NumericalError
from .metrics import DEFAULT_PROJECTIONS, mse, sliced_w2
from .nn import Model, Variant, gradcheck
from .rng import RngStream
from .sampling import (PointCloud, Prior, centerize, clt_diagnostic, closed_form_target, draw,
                       mc_chord_stats, random_pair_distances, spherize)
from .spheregeom import SphereSpec, annulus_volume_fraction, chord_stats
from .training import prior_latents, prior_sample_swd, swd_spread, train
from .transport import exact_w2, w2_convergence_experiment

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


# -- helpers -----------------------------------------------------------------------

def int_list(text):
    try:
        values = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    return values


def str_list(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _emit(path, buf.getvalue())


def write_json(path, payload):
    _emit(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _emit(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_pgm(path, image, shape):
    rows, cols = shape
    pixels = np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8).reshape(rows, cols)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def data_spec_from_args(args):
    if args.data == "synthetic":
        return {"source": "synthetic", "n": args.n, "d_x": args.d_x, "k": args.k,
                "seed": args.data_seed if args.data_seed is not None else args.seed}
    if not args.mnist_dir:
        raise ConfigError("--data mnist requires --mnist-dir")
    return {"source": "mnist", "dir": args.mnist_dir, "n": args.n}


def load_data(spec, split="train"):
    if spec["source"] == "synthetic":
        return synthetic_manifold(spec["n"], spec["d_x"], spec["k"], spec["seed"], split=split)
    if spec["source"] == "mnist":
        return load_mnist_dir(spec["dir"], split).subset(spec["n"])
    raise ConfigError(f"unknown data source {spec['source']!r}")


def _override_data(meta_spec, args):
    spec = dict(meta_spec)
    if getattr(args, "data", None):
        spec["source"] = args.data
    if getattr(args, "mnist_dir", None):
        spec["dir"] = args.mnist_dir
    if getattr(args, "n", None):
        spec["n"] = args.n
    return spec


# -- subcommands ----------------------------------------------------------------------

def cmd_geom(args):
    if not args.dims:
        raise ConfigError("--dims must list at least one dimension")
    rows = []
    for d in args.dims:
        st = chord_stats(SphereSpec(d, args.radius))
        rows.append([d, st.mean, st.std, st.asymptotic_mean, st.asymptotic_std,
                     annulus_volume_fraction(d, args.eps)])
    write_csv(args.out, ["d", "mean", "std", "asym_mean", "asym_std", "annulus_fraction"], rows)


def cmd_mc(args):
    prior = Prior.parse(args.prior)
    cloud = draw(prior, RngStream(args.seed, 0), args.n, args.dim)
    if args.center:
        cloud = centerize(cloud)
    if args.spherize:
        cloud = spherize(cloud, args.radius)
    report = {"prior": prior.label, "dim": args.dim, "n": args.n, "pairs": args.pairs,
              "centered": args.center, "spherized": args.spherize, "seed": args.seed}
    if args.spherize:
        res = mc_chord_stats(cloud, args.pairs, RngStream(args.seed, 1))
        target = closed_form_target(cloud)
        report.update(mean=res.mean, std=res.std, ks=res.ks_statistic, reference_dim=res.reference_dim,
                      closed_form_mean=target.mean, closed_form_std=target.std)
    else:
        dist = random_pair_distances(cloud.points, args.pairs, RngStream(args.seed, 1))
        report.update(mean=float(dist.mean()), std=float(dist.std()), ks=None)
    write_json(args.out, report)


def cmd_ot(args):
    header = ["seed", "D", "n", "priorA", "priorB", "w2", "ratio"]
    if args.cloud_a or args.cloud_b:
        if not (args.cloud_a and args.cloud_b):
            raise ConfigError("--cloud-a and --cloud-b must be given together")
        za, zb = PointCloud.from_csv(args.cloud_a), PointCloud.from_csv(args.cloud_b)
        w2, _ = exact_w2(za, zb)
        radius = za.radius or 1.0
        write_csv(args.out, header, [[za.seed if za.seed is not None else "", za.dim, za.n, za.prior, zb.prior,
                                      w2, w2 / (math.sqrt(2.0 * za.n) * radius)]])
        return
    if not args.dims or not args.seeds:
        raise ConfigError("--dims and --seeds must be non-empty")
    pa, pb = Prior.parse(args.prior_a), Prior.parse(args.prior_b)
    rows, summary = w2_convergence_experiment(pa, pb, args.n, args.dims, args.seeds)
    out = [[r.seed, r.dim, r.n, r.prior_a, r.prior_b, r.w2, r.ratio] for r in rows]
    for s in summary:
        out.append(["mean", s.dim, args.n, pa.label, pb.label, "", s.mean_ratio])
        out.append(["std", s.dim, args.n, pa.label, pb.label, "", s.std_ratio])
    write_csv(args.out, header, out)


def build_model(args, input_dim, latent_dim=None, variant=None):
    return Model.build(variant or args.variant, input_dim, latent_dim or args.latent_dim,
                       hidden=tuple(args.hidden), seed=args.seed, beta=args.beta)


def cmd_train(args):
    spec = data_spec_from_args(args)
    data = load_data(spec)
    model = build_model(args, data.dim)
    result = train(model, data.images, epochs=args.epochs, batch_size=args.batch_size, lr=args.lr, seed=args.seed)
    loss_csv = args.loss_csv or args.checkpoint + ".loss.csv"
    write_csv(loss_csv, ["epoch", "train_loss", "recon_mse", "kl"],
              [[h.epoch, h.train_loss, h.recon_mse, h.kl] for h in result.history])
    save_checkpoint(args.checkpoint, model, seed=args.seed, steps=result.steps, epochs=args.epochs,
                    lr=args.lr, batch_size=args.batch_size, hidden=list(args.hidden), data=spec,
                    final_recon_mse=result.final_mse, initial_recon_mse=result.initial_mse)


def cmd_eval(args):
    model, meta = load_checkpoint(args.checkpoint)
    spec = _override_data(meta["data"], args)
    data = load_data(spec, args.split)
    x_rec = model.reconstruct(data.images)
    row = [model.variant.value, f"{spec['source']}-{args.split}", model.latent_dim,
           mse(data.images, x_rec), sliced_w2(data.images, x_rec, args.n_proj, seed=args.seed), args.seed]
    write_csv(args.out, ["model", "dataset", "d_z", "mse", "swd", "seed"], [row])


def cmd_sample(args):
    model, meta = load_checkpoint(args.checkpoint)
    priors = [Prior.parse(p) for p in args.priors]
    os.makedirs(args.out_dir, exist_ok=True)
    center = args.center
    sph = args.spherize
    if args.count == 0:
        write_json(args.report, {})
        return
    data = load_data(_override_data(meta["data"], args), "train")
    if args.count > data.n:
        raise ConfigError(f"--count {args.count} exceeds the {data.n} reference images")
    reference = model.reconstruct(data.images[:args.count])
    shape = data.image_shape
    report = {"checkpoint": os.path.basename(args.checkpoint), "variant": model.variant.value,
              "count": args.count, "seed": args.seed, "n_proj": args.n_proj, "priors": {}}
    native = model.variant is Variant.SAE
    eff_center = native if center is None else center
    eff_sph = native if sph is None else sph
    report.update(centered=eff_center, spherized=eff_sph)
    if model.variant is Variant.SAE and not eff_sph:
        report["warning"] = "SAE decoder fed latents that are not on the unit sphere"
    for prior in priors:
        z = prior_latents(model, prior, args.count, args.seed, eff_center, eff_sph)
        images = model.decode(z)
        for i, img in enumerate(images):
            write_pgm(os.path.join(args.out_dir, f"{prior.kind.value}_{i:04d}.pgm"), img, shape)
        report["priors"][prior.label] = {
            "swd": sliced_w2(images, reference, args.n_proj, seed=args.seed),
            "max_abs_latent_sum": float(np.max(np.abs(z.sum(axis=1)))),
            "max_abs_norm_error": float(np.max(np.abs(np.linalg.norm(z, axis=1) - 1.0))),
        }
    scores = {k: v["swd"] for k, v in report["priors"].items()}
    report["swd_spread"] = swd_spread(scores)
    write_json(args.report, report)


def cmd_dimsweep(args):
    spec = data_spec_from_args(args)
    data = load_data(spec)
    rows = []
    for variant in args.variants:
        for dz in args.latent_dims:
            finals = []
            for seed in args.seeds:
                model = Model.build(variant, data.dim, dz, hidden=tuple(args.hidden), seed=seed, beta=args.beta)
                res = train(model, data.images, epochs=args.epochs, batch_size=args.batch_size, lr=args.lr, seed=seed)
                finals.append(res.final_mse)
                rows.append([Variant(variant).value, dz, seed, res.final_mse])
            rows.append([Variant(variant).value, dz, "mean", float(np.mean(finals))])
    write_csv(args.out, ["variant", "d_z", "seed", "mse"], rows)


def cmd_clt(args):
    prior = Prior.parse(args.prior)
    ks = clt_diagnostic(prior, args.dim, args.n, RngStream(args.seed, 0))
    write_json(args.out, {"prior": prior.label, "dim": args.dim, "n": args.n, "seed": args.seed, "ks": ks})


def cmd_gradcheck(args):
    variants = [v.value for v in Variant] if args.variant == "all" else [args.variant]
    reports = [gradcheck(v, args.seed).as_dict() for v in variants]
    write_json(args.out, {"reports": reports, "passed": all(r["passed"] for r in reports)})
    if not all(r["passed"] for r in reports):
        return EXIT_NUMERIC
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------

def _add_training_flags(p):
    p.add_argument("--data", choices=["synthetic", "mnist"], default="synthetic")
    p.add_argument("--mnist-dir")
    p.add_argument("--n", type=int, default=4000, help="number of training points")
    p.add_argument("--d-x", type=int, default=64, help="synthetic ambient dimension")
    p.add_argument("--k", type=int, default=4, help="synthetic intrinsic dimension")
    p.add_argument("--data-seed", type=int, default=None, help="synthetic manifold seed (default: --seed)")
    p.add_argument("--hidden", type=int_list, default=[64], help="comma-separated hidden widths")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--beta", type=float, default=1.0, help="VAE KL weight")


def build_parser():
    parser = argparse.ArgumentParser(prog="sphereae", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file of flag defaults (explicit flags win)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="-", help="output file ('-' for stdout)")
        return p

    p = add("geom", cmd_geom, "closed-form chord statistics and volume concentration")
    p.add_argument("--dims", type=int_list, default=[2, 3, 8, 16, 32, 64, 128, 256, 512, 1024])
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.009)

    p = add("mc", cmd_mc, "Monte-Carlo chord statistics of a sampled cloud")
    p.add_argument("--prior", default="normal")
    p.add_argument("--dim", type=int, default=512)
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--pairs", type=int, default=100000)
    p.add_argument("--center", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--spherize", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--radius", type=float, default=1.0)

    p = add("ot", cmd_ot, "exact W2 convergence across dimensions")
    p.add_argument("--prior-a", default="normal")
    p.add_argument("--prior-b", default="normal")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--dims", type=int_list, default=[4, 16, 64, 256, 512])
    p.add_argument("--seeds", type=int_list, default=[0, 1, 2, 3, 4])
    p.add_argument("--cloud-a", help="point-cloud CSV (overrides the sampled experiment)")
    p.add_argument("--cloud-b")

    p = add("train", cmd_train, "train an AE/SAE/VAE")
    p.add_argument("--variant", choices=[v.value for v in Variant], default="sae")
    p.add_argument("--latent-dim", type=int, default=16)
    _add_training_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--loss-csv")

    p = add("eval", cmd_eval, "reconstruction MSE and SWD of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--data", choices=["synthetic", "mnist"])
    p.add_argument("--mnist-dir")
    p.add_argument("--n", type=int)
    p.add_argument("--n-proj", type=int, default=DEFAULT_PROJECTIONS)

    p = add("sample", cmd_sample, "decode prior samples to PGM images")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--priors", type=str_list, default=["normal", "uniform", "poisson", "chi2"])
    p.add_argument("--center", action=argparse.BooleanOptionalAction, default=None,
                   help="default: on for SAE, off otherwise")
    p.add_argument("--spherize", action=argparse.BooleanOptionalAction, default=None,
                   help="default: on for SAE, off otherwise")
    p.add_argument("--count", type=int, default=64)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--report", default="-", help="JSON report path ('-' for stdout)")
    p.add_argument("--n-proj", type=int, default=DEFAULT_PROJECTIONS)
    p.add_argument("--data", choices=["synthetic", "mnist"])
    p.add_argument("--mnist-dir")
    p.add_argument("--n", type=int)

    p = add("dimsweep", cmd_dimsweep, "final MSE against latent dimension")
    p.add_argument("--variants", type=str_list, default=["sae", "vae"])
    p.add_argument("--latent-dims", type=int_list, default=[8, 32, 128])
    p.add_argument("--seeds", type=int_list, default=[1, 2, 3])
    _add_training_flags(p)

    p = add("clt", cmd_clt, "KS distance of standardized row means to N(0,1)")
    p.add_argument("--prior", default="poisson")
    p.add_argument("--dim", type=int, default=512)
    p.add_argument("--n", type=int, default=5000)

    p = add("gradcheck", cmd_gradcheck, "finite-difference check of the analytic gradients")
    p.add_argument("--variant", choices=[v.value for v in Variant] + ["all"], default="all")
    return parser


def _load_config(argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    try:
        with open(known.config) as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {known.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def parse_args(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    config = _load_config(argv)
    parser = build_parser()
    if config:
        for action in parser._subparsers._group_actions:
            for sp in action.choices.values():
                known = {a.dest for a in sp._actions}
                sp.set_defaults(**{k: v for k, v in config.items() if k in known})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code = args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())

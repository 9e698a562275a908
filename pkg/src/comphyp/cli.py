"""Command-line front end: ``run``, ``bounds``, ``classify`` and ``presets``."""

import argparse
import datetime as _dt
import logging
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import LOG2E, bound_curves, bounds_report, fano_ceiling_empirical
from .classify import TrainingSet, classify_ks, classify_likelihood, classify_mmd
from .config import config_hash, config_to_dict, load_config, preset_names, preset_text
from .distances import GaussianRBF
from .report import atomic_write, bounds_csv, errors_csv, exponents_csv, write_json
from .simulate import ConfigError, generate_trial, run_experiment
from .textio import SequenceFormatError, read_sequence

log = logging.getLogger("comphyp")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3
WORKERS_ENV = "COMPHYP_WORKERS"
_TRAIN_NAME = re.compile(r"^(\d+)_(\d+)\.[A-Za-z0-9]+$")


def _default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _load(args):
    cfg = load_config(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        changes["trials"] = args.trials
    return cfg.replace(**changes) if changes else cfg


def _asymptotic_ratio(cfg):
    rule = cfg.train_lengths
    if rule.rule == "equal":
        return 1.0
    if rule.rule == "proportional":
        return min(1.0, rule.value)
    return 0.0  # fixed training length: gamma_min / n -> 0


def cmd_run(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    started = _now()
    curves = run_experiment(cfg, workers=args.workers)
    files = {"errors.csv": errors_csv(curves), "exponents.csv": exponents_csv(curves)}
    written = []
    for name, data in files.items():
        atomic_write(out / name, data)
        written.append(name)
    if not args.no_plot:
        from .plotting import plot_error_curves
        plot_error_curves(curves, out / "errors.png", title=cfg.name)
        written.append("errors.png")
    manifest = {
        "config_hash": config_hash(cfg),
        "config": config_to_dict(cfg),
        "seed": cfg.seed,
        "tool_version": __version__,
        "started": started,
        "finished": _now(),
        "workers": args.workers,
        "outputs": written + ["manifest.json"],
    }
    write_json(out / "manifest.json", manifest)
    for test, curve in curves.items():
        est, hw = curve.at(cfg.n_grid[-1])
        bound = ">=" if curve.fit.lower_bound else ""
        print(f"{test:<10s} P_e(n={cfg.n_grid[-1]})={est:.4g} ±{hw:.2g}  "
              f"exponent {bound}{curve.exponent:.4g} bits/sample")
    print(f"wrote {', '.join(written)} to {out}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = _load(args)
    ratio = _asymptotic_ratio(cfg)
    rep = bounds_report(cfg.clusters, cfg.kernel, ratio)
    curves = bound_curves(rep, cfg.n_grid, cfg.train_lengths.length)
    # empirical Fano ceiling: partition KL estimates from generated training data
    n_max = cfg.n_grid[-1]
    fano_emp = float(np.mean([
        fano_ceiling_empirical([x[:, 0] for x in generate_trial(cfg, n_max, t)[0].flat()])
        for t in range(args.fano_trials)])) if cfg.dim == 1 else math.nan

    def sep_line(name, sep):
        if sep is None:
            return f"{name}: not available (vector data)"
        flag = "" if sep.premise_holds else "  PREMISE VIOLATED (D_I >= D_O)"
        return f"{name}: D_I={sep.d_inner:.6g} D_O={sep.d_outer:.6g}{flag}"

    print(f"config {cfg.name}  (length ratio {ratio:.4g}, kernel bound {rep.kernel_bound:.4g})")
    print(sep_line("separation MMD^2", rep.sep_mmd))
    print(sep_line("separation KS", rep.sep_ks))
    def rate_line(name, bits, note=""):
        print(f"{name:<15s} = {bits:.6g} bits/sample ({bits / LOG2E:.6g} nats){note}")

    rate_line("rate_mmd", rep.rate_mmd)
    rate_line("rate_ks", rep.rate_ks)
    rate_line("rate_parametric", rep.rate_parametric, "  min Chernoff information")
    rate_line("fano_ceiling", rep.fano_ceiling, "  known models")
    rate_line("fano_empirical", fano_emp, f"  partition estimate, n={n_max}")
    for w in rep.warnings:
        print(f"warning: {w}")

    if args.out:
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            print(f"error: cannot create {out}: {exc}", file=sys.stderr)
            return EXIT_IO
        sep = lambda s: None if s is None else {
            "d_inner": s.d_inner, "d_outer": s.d_outer, "premise_holds": s.premise_holds}
        write_json(out / "bounds.json", {
            "config_hash": config_hash(cfg),
            "separation_mmd2": sep(rep.sep_mmd),
            "separation_ks": sep(rep.sep_ks),
            "chernoff_min_nats": rep.chernoff_min,
            "rate_mmd": rep.rate_mmd,
            "rate_ks": rep.rate_ks,
            "rate_parametric": rep.rate_parametric,
            "fano_ceiling": rep.fano_ceiling,
            "fano_ceiling_empirical": None if math.isnan(fano_emp) else fano_emp,
            "length_ratio": rep.length_ratio,
            "kernel_bound": rep.kernel_bound,
            "warnings": rep.warnings,
            "units": "bits/sample (chernoff_min in nats)",
        })
        atomic_write(out / "bound_curves.csv", bounds_csv(curves))
        if not args.no_plot and curves:
            from .plotting import plot_bound_curves
            plot_bound_curves(curves, out / "bound_curves.png", title=cfg.name)
        print(f"wrote bounds to {out}")
    return EXIT_OK


def _read_training_dir(path):
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"training directory {path} does not exist")
    found = {}
    for f in sorted(path.iterdir()):
        match = _TRAIN_NAME.match(f.name)
        if match and f.is_file():
            found[(int(match.group(1)), int(match.group(2)))] = f
    if not found:
        raise SequenceFormatError(path, 0, "no training files named <cluster>_<member>.<ext>")
    clusters = sorted({m for m, _ in found})
    if clusters != list(range(1, len(clusters) + 1)):
        raise SequenceFormatError(path, 0, f"cluster numbers must be 1..M, got {clusters}")
    groups = []
    for m in clusters:
        members = sorted(i for c, i in found if c == m)
        if members != list(range(1, len(members) + 1)):
            raise SequenceFormatError(path, 0, f"member numbers of cluster {m} must be 1..M_m, got {members}")
        groups.append([read_sequence(found[(m, i)]) for i in members])
    return groups


def cmd_classify(args) -> int:
    y = read_sequence(args.test_file)
    if args.test == "likelihood":
        if not args.config:
            print("error: likelihood requires model spec (pass --config with singleton clusters)",
                  file=sys.stderr)
            return EXIT_CONFIG
        cfg = load_config(args.config)
        if any(len(c) != 1 for c in cfg.clusters):
            raise ConfigError("clusters", "likelihood requires singleton clusters")
        if cfg.dim != y.shape[1]:
            raise ValueError(f"dimension mismatch: models have {cfg.dim}, test data {y.shape[1]}")
        verdict = classify_likelihood([c[0] for c in cfg.clusters], y)
    else:
        train = TrainingSet(_read_training_dir(args.train_dir))
        if train.dim != y.shape[1]:
            raise ValueError(f"dimension mismatch: training data have {train.dim}, test data {y.shape[1]}")
        if args.test == "mmd":
            verdict = classify_mmd(train, y, GaussianRBF(args.kernel_bandwidth))
        else:
            verdict = classify_ks(train, y)
    print(f"cluster={verdict.cluster_index} member={verdict.member_index} score={verdict.score:.17g}")
    return EXIT_OK


def cmd_presets(args) -> int:
    if args.name:
        sys.stdout.write(preset_text(args.name))
    else:
        print("\n".join(preset_names()))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="comphyp", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo experiment")
    run.add_argument("--config", required=True, help="config file or bundled preset name")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--trials", type=int, help="override the config trial count")
    run.add_argument("--workers", type=int, default=_default_workers(),
                     help=f"worker processes (default ${WORKERS_ENV} or 1)")
    run.add_argument("--no-plot", action="store_true", help="skip errors.png")
    run.set_defaults(func=cmd_run)

    bnd = sub.add_parser("bounds", help="report theoretical rates and bounds")
    bnd.add_argument("--config", required=True, help="config file or bundled preset name")
    bnd.add_argument("--out", help="also write bounds.json and bound_curves.csv here")
    bnd.add_argument("--seed", type=int, help="override the config seed")
    bnd.add_argument("--fano-trials", type=int, default=20,
                     help="generated trials averaged for the empirical Fano estimate")
    bnd.add_argument("--no-plot", action="store_true")
    bnd.set_defaults(func=cmd_bounds)

    cls = sub.add_parser("classify", help="classify a test sequence against training files")
    cls.add_argument("train_dir", help="directory of <cluster>_<member>.txt training files")
    cls.add_argument("test_file")
    cls.add_argument("--test", choices=("mmd", "ks", "likelihood"), default="mmd")
    cls.add_argument("--kernel-bandwidth", type=float, default=1.0)
    cls.add_argument("--config", help="model spec for --test=likelihood")
    cls.set_defaults(func=cmd_classify)

    pre = sub.add_parser("presets", help="list bundled presets, or print one")
    pre.add_argument("name", nargs="?")
    pre.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", 1) is not None and getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SequenceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: `python -m thzvr <command> ...`.

Exit codes: 0 ok, 2 configuration error, 3 any other failure.
"""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from thzvr.engine.config import load_config, with_overrides
from thzvr.engine.episode import run_experiment, simulate
from thzvr.engine.world import pretrain_los_classifier, room_of, scene_factory
from thzvr.errors import ConfigError
from thzvr.nn.gradcheck import standard_suite
from thzvr.plots import emit_plots
from thzvr.predictors.los_cnn import generate_dataset

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_FAILURE = 0, 2, 3


def setup_logging(verbose=False):
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(levelname)s - %(module)s - %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def parse_values(text):
    """'5,10,15' -> [5, 10, 15]."""
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values expects comma-separated integers, got '{text}'") from None


def _overrides(args):
    out = {}
    if getattr(args, "seed", None) is not None:
        out["run__seed"] = args.seed
    if getattr(args, "mode", None):
        out["agent__mode"] = args.mode
    if getattr(args, "predictors", None):
        out["predictors__mode"] = args.predictors
    if getattr(args, "viewpoint", None):
        out["predictors__viewpoint"] = args.viewpoint
    if getattr(args, "out", None):
        out["run__out_dir"] = args.out
    return out


def cmd_simulate(args):
    cfg, defaulted = load_config(args.config)
    cfg = with_overrides(cfg, **_overrides(args))
    _, summary = simulate(cfg, defaulted=defaulted)
    log.info("Data saved to %s", cfg.run.out_dir)
    for key, value in summary.items():
        print(f"{key:>16}: {value:.6g}")
    return EXIT_OK


def cmd_sweep(args):
    cfg, _ = load_config(args.config)
    cfg = with_overrides(cfg, **_overrides(args))
    workers = args.workers if args.workers is not None else cfg.run.workers
    table = run_experiment(cfg, args.axis, parse_values(args.values), workers=workers)
    print(table.to_string(index=False))
    log.info("Data saved to %s", Path(cfg.run.out_dir) / f"sweep_{args.axis}.csv")
    return EXIT_OK


def cmd_pretrain_cnn(args):
    cfg, _ = load_config(args.config)
    cfg = with_overrides(cfg, predictors__cnn_pretrain_scenes=args.scenes,
                         predictors__cnn_checkpoint=args.out)
    rng = np.random.default_rng(cfg.run.seed)
    clf = pretrain_los_classifier(cfg, rng, force=True)
    held_out = max(1, args.scenes // 5)
    images, labels = generate_dataset(scene_factory(cfg), held_out, rng, room_of(cfg),
                                      clf.tall_threshold)
    accuracy = clf.accuracy(images, labels)
    curve_path = Path(f"{args.out}.curve.csv")
    pd.DataFrame({"epoch": np.arange(len(clf.curve)), "loss": clf.curve}).to_csv(
        curve_path, index=False, float_format="%.12g")
    print(f"held-out accuracy: {accuracy:.4f} on {len(labels)} samples")
    log.info("Data saved to %s", curve_path)
    return EXIT_OK


def cmd_grad_check(args):
    reports = standard_suite(np.random.default_rng(args.seed), tol=args.tol)
    for name, report in reports.items():
        status = "PASS" if report.passed else "FAIL"
        print(f"{name:>10}: max rel error {report.max_rel_error:.3e}  {status}")
    return EXIT_OK if all(r.passed for r in reports.values()) else EXIT_FAILURE


def cmd_emit_plots(args):
    written = emit_plots(args.input, args.out)
    print(f"{len(written)} figures written")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="thzvr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="train/evaluate over the configured episodes")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=("cdrl", "exhaustive", "random"))
    p.add_argument("--predictors", choices=("genie", "learned"))
    p.add_argument("--viewpoint", choices=("centralized", "fedavg"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="vary one axis, one aggregate row per value")
    p.add_argument("--config", default=None)
    p.add_argument("--axis", required=True, choices=("users", "ris-elements"))
    p.add_argument("--values", required=True, help="comma-separated, e.g. 5,10,15,20,25")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=("cdrl", "exhaustive", "random"))
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pretrain-cnn", help="train and save the LoS classifier")
    p.add_argument("--config", default=None)
    p.add_argument("--scenes", type=int, default=200)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pretrain_cnn)

    p = sub.add_parser("grad-check", help="finite-difference check of every layer and cell")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("emit-plots", help="per-figure CSVs and PNGs from a run directory")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_emit_plots)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except Exception as exc:
        log.error("%s", exc)
        log.debug("traceback", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

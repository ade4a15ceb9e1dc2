"""Command-line entry point."""

import argparse
import logging
import sys

from inverselab.config import get_settings

settings = get_settings()

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.log_level),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    stream=sys.stderr,
)

from inverselab import __version__
from inverselab.harness.experiments import run_experiment
from inverselab.harness.io import read_config_file
from inverselab.harness.schemas import ExperimentConfig, ExperimentName
from inverselab.harness.selftest import run_selftest

logger = logging.getLogger(__name__)

# argparse destination -> ExperimentConfig field
FLAG_FIELDS = {
    "seed": "seed",
    "out": "output_dir",
    "delta": "delta",
    "alpha": "alpha",
    "n": "n",
    "mu": "mu",
    "method": "method",
    "noise": "noise",
    "max_iter": "max_iter",
    "tau": "tau",
    "k": "k_values",
    "alphas": "alphas",
    "angles": "angles",
    "offsets": "offsets",
    "spikes": "spikes",
    "sigma": "sigma",
    "modes": "modes",
    "samples": "samples",
    "epochs": "epochs",
    "batch_size": "batch_size",
}


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--config", help="flat 'key = value' experiment config file")
    common.add_argument("--delta", type=float, help="noise level")
    common.add_argument("--alpha", type=float, help="regularization weight")
    common.add_argument("--verbose", action="store_true", help="debug logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per experiment."""
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="inverselab", description="Desk-scale inverse problem experiments"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    numdiff = sub.add_parser(
        "numdiff", parents=[common], help="numerical differentiation noise sweep"
    )
    numdiff.add_argument("--n", type=int, help="number of samples")
    numdiff.add_argument("--noise", choices=["sine", "gaussian"])
    numdiff.add_argument("--k", type=int, nargs="+", help="noise frequencies")

    ct = sub.add_parser("ct", parents=[common], help="phantom tomography reconstruction")
    ct.add_argument("--n", type=int, help="image side length")
    ct.add_argument("--method", choices=["pinv", "tikhonov", "gd", "morozov"])
    ct.add_argument("--alphas", type=float, nargs="+", help="Tikhonov weights to sweep")
    ct.add_argument("--mu", type=float, help="discrepancy safety factor")
    ct.add_argument("--angles", type=int)
    ct.add_argument("--offsets", type=int)
    ct.add_argument("--max-iter", dest="max_iter", type=int)

    deconv = sub.add_parser("deconv", parents=[common], help="sparse spike deconvolution")
    deconv.add_argument("--n", type=int, help="image side length")
    deconv.add_argument("--method", choices=["tikhonov", "ista"])
    deconv.add_argument("--ista", dest="method", action="store_const", const="ista")
    deconv.add_argument("--spikes", type=int)
    deconv.add_argument("--sigma", type=float, help="blur width in pixels")
    deconv.add_argument("--max-iter", dest="max_iter", type=int)

    tv = sub.add_parser("tv", parents=[common], help="total variation denoising")
    tv.add_argument("--n", type=int, help="image side length")
    tv.add_argument("--mu", type=float, help="ADMM penalty")
    tv.add_argument("--max-iter", dest="max_iter", type=int)

    learn = sub.add_parser("learn-spectral", parents=[common], help="learned spectral filter")
    learn.add_argument("--modes", type=int)
    learn.add_argument("--samples", type=int)
    learn.add_argument("--epochs", type=int)
    learn.add_argument("--tau", type=float, help="learning rate")
    learn.add_argument("--batch-size", dest="batch_size", type=int)

    sub.add_parser("selftest", parents=[common], help="run the acceptance checks")
    return parser


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge settings, the config file and command-line flags, later sources winning."""
    experiment = ExperimentName(args.command)
    if experiment == ExperimentName.SELFTEST:
        seed = settings.selftest_seed
    else:
        seed = settings.default_seed
    values: dict[str, object] = {"seed": seed, "output_dir": settings.output_dir}
    if args.config:
        values.update(read_config_file(args.config))
    for dest, field in FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            values[field] = value
    return ExperimentConfig(experiment=experiment, **values)


def cli_main(argv: list[str] | None = None) -> int:
    """Run the CLI.

    Returns:
        int: 0 on success, 1 on a runtime failure, 2 on a usage error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code is None else int(e.code)
    if args.verbose and not settings.is_verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        cfg = build_config(args)
        if cfg.experiment == ExperimentName.SELFTEST:
            _, passed = run_selftest(cfg)
            return 0 if passed else 1
        run_experiment(cfg)
    except (ValueError, RuntimeError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    return 0


def run() -> None:
    """Console script entry point."""
    sys.exit(cli_main())


if __name__ == "__main__":
    run()

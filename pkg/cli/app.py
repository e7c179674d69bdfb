import argparse
import sys

from loguru import logger

# Import configuration
import config

# Import handlers
from cli.handlers import (
    cmd_bench,
    cmd_deblur,
    cmd_estimate_kernel,
    cmd_psnr,
    cmd_replay,
    cmd_score,
    cmd_synth,
    exit_code_for,
)

EXIT_USAGE = 1


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_solver_options(parser):
    group = parser.add_argument_group("blind estimation")
    group.add_argument('--kernel-size', type=int, required=True, help="finest kernel side h (odd)")
    group.add_argument('--seed', type=int, default=None, help=f"master seed (default {config.DEFAULT_SEED})")
    group.add_argument('--alpha', type=float, default=None, help="latent data weight")
    group.add_argument('--zeta', type=float, default=None, help="kernel data weight")
    group.add_argument('--step-t', type=float, default=None, help="FISTA step parameter")
    group.add_argument('--fista-iters', type=int, default=None)
    group.add_argument('--irls-outer', type=int, default=None)
    group.add_argument('--cg-inner', type=int, default=None)
    group.add_argument('--em-iters', type=int, default=None, help="alternations per pyramid level")
    group.add_argument('--scale-ratio', type=float, default=None)
    group.add_argument('--min-kernel', type=int, default=None)

    gabor = parser.add_argument_group("Gabor bank")
    gabor.add_argument('--thetas', default=None, help="orientations in degrees, e.g. 0,60,120")
    gabor.add_argument('--gabor-lambda', type=float, default=None)
    gabor.add_argument('--gabor-sigma', type=float, default=None)
    gabor.add_argument('--gabor-psi', type=float, default=None)
    gabor.add_argument('--gabor-gamma', type=float, default=None)
    gabor.add_argument('--gabor-lambda-unit', choices=config.SUPPORTED_LAMBDA_UNITS, default=None)


def _add_nonblind_options(parser):
    group = parser.add_argument_group("non-blind stage")
    group.add_argument('--nonblind', choices=config.SUPPORTED_NONBLIND, default=None)
    group.add_argument('--nb-reg', type=float, default=None)
    group.add_argument('--nb-iters', type=int, default=None)


def setup_cli():
    """Build the command-line parser

    Returns:
        argparse.ArgumentParser: Parser whose subcommands set `handler`
    """
    parser = UsageParser(prog="omnideblur", description="Blind deconvolution with omnidirectional Gabor gradients")
    parser.add_argument('--config', default=None, help="key=value file overriding environment defaults")
    subparsers = parser.add_subparsers(dest='subcommand', required=True, parser_class=UsageParser)

    deblur = subparsers.add_parser('deblur', help="estimate the kernel and deblur an image")
    deblur.add_argument('input')
    deblur.add_argument('--out', default=None, help="output image (default <input>_deblurred.png)")
    deblur.add_argument('--plots', action='store_true', help="also write kernel and level figures")
    _add_solver_options(deblur)
    _add_nonblind_options(deblur)
    deblur.set_defaults(handler=cmd_deblur)

    estimate = subparsers.add_parser('estimate-kernel', help="estimate the blur kernel only")
    estimate.add_argument('input')
    estimate.add_argument('--out', default=None, help="kernel file (default <input>.kernel.txt)")
    estimate.add_argument('--plots', action='store_true')
    _add_solver_options(estimate)
    estimate.set_defaults(handler=cmd_estimate_kernel)

    score = subparsers.add_parser('score', help="defocus score of an image")
    score.add_argument('input')
    score.add_argument('--reference', default=None, help="sharp reference for MSE/PSNR")
    score.add_argument('--defocus-scale', type=float, default=None)
    score.add_argument('--out', default=None, help="also write the report JSON here")
    score.set_defaults(handler=cmd_score)

    psnr = subparsers.add_parser('psnr', help="PSNR between two images")
    psnr.add_argument('first')
    psnr.add_argument('second')
    psnr.add_argument('--max', type=float, choices=[1.0, 255.0], default=1.0, help="peak value MAX_I")
    psnr.add_argument('--out', default=None, help="also write the report JSON here")
    psnr.set_defaults(handler=cmd_psnr)

    synth = subparsers.add_parser('synth', help="blur a sharp image with a known kernel")
    source = synth.add_mutually_exclusive_group(required=True)
    source.add_argument('--input', default=None, help="sharp input image")
    source.add_argument('--pattern', default=None, help="generated test pattern name")
    synth.add_argument('--size', type=int, default=128, help="pattern side in pixels")
    synth.add_argument('--kernel', required=True, help="gaussian:5:1.5 | motion:9:30 | box:3 | walk:15:7")
    synth.add_argument('--noise-sigma', type=float, default=0.0)
    synth.add_argument('--seed', type=int, default=None)
    synth.add_argument('--out', required=True, help="blurred output image")
    synth.set_defaults(handler=cmd_synth)

    bench = subparsers.add_parser('bench', help="compare filter counts over a corpus")
    bench.add_argument('corpus', help="directory of synth outputs or blurred images")
    bench.add_argument('--variants', default=None, help="filter counts, e.g. 3,4,5,6,8")
    bench.add_argument('--out', required=True, help="report directory")
    bench.add_argument('--threads', type=int, default=None, help="worker cap (default OMNIDEBLUR_THREADS)")
    bench.add_argument('--plots', action='store_true')
    _add_solver_options(bench)
    _add_nonblind_options(bench)
    bench.set_defaults(handler=cmd_bench)

    replay = subparsers.add_parser('replay', help="run a deblur or estimate-kernel again from its manifest")
    replay.add_argument('manifest', help="manifest JSON written by the original run")
    replay.add_argument('--out', default=None, help="output path (default: the recorded one)")
    replay.add_argument('--plots', action='store_true')
    replay.set_defaults(handler=cmd_replay)

    return parser


def run(argv=None):
    """Parse arguments and dispatch to a subcommand handler

    Args:
        argv (list, optional): Arguments without the program name

    Returns:
        int: Process exit code
    """
    parser = setup_cli()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except Exception as e:
        code = exit_code_for(e)
        if code is None:
            raise
        logger.error(f"{args.subcommand} failed: {e}")
        return code

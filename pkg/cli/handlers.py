import json
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path

import numpy as np
from dotenv import dotenv_values
from loguru import logger
from tqdm import tqdm

# Import configuration
import config

# Import core modules
from core.blind_deconvolver import BlindDeconvolver
from core.errors import (
    ConfigurationError,
    DegenerateInputError,
    DimensionError,
    ImageIOError,
    NumericDivergenceError,
    OperatorNotPSDError,
    PyramidStateError,
    UndefinedRatioError,
)
from core.gabor_bank import even_thetas
from core.nonblind import deconvolve
from core.pyramid import SeededRng
from core.quality import mse, psnr, quality_report
from core.run_manager import RunManager
from core.synth import make_pattern, parse_kernel_spec, synthesize
from data.image_io import (
    LUMA,
    list_images,
    load_color_channels,
    load_image,
    read_json,
    save_color_channels,
    save_image,
    save_kernel,
    sibling_path,
    write_json,
)
from data.models import (
    GaborParams,
    NoiseSpec,
    NonblindConfig,
    QualityReport,
    RasterImage,
    RunManifest,
    SolverConfig,
)

# Import reporting module
from reporting.report_generator import ReportGenerator
from reporting.visualizations import Visualizer

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

# Settings read from flags or a --config file, with their types
SETTING_TYPES = {
    'seed': int,
    'alpha': float,
    'zeta': float,
    'step_t': float,
    'fista_iters': int,
    'irls_outer': int,
    'cg_inner': int,
    'em_iters': int,
    'scale_ratio': float,
    'min_kernel': int,
    'thetas': str,
    'gabor_lambda': float,
    'gabor_sigma': float,
    'gabor_psi': float,
    'gabor_gamma': float,
    'gabor_lambda_unit': str,
    'nonblind': str,
    'nb_reg': float,
    'nb_iters': int,
    'variants': str,
    'threads': int,
    'defocus_scale': float,
}


def exit_code_for(error):
    """Exit code for an exception raised by a handler, None if it is unexpected"""
    if isinstance(error, (DimensionError, ImageIOError, OSError)):
        return EXIT_IO
    if isinstance(error, ConfigurationError):
        return EXIT_USAGE
    if isinstance(error, (NumericDivergenceError, OperatorNotPSDError, DegenerateInputError,
                          UndefinedRatioError, PyramidStateError)):
        return EXIT_NUMERIC
    return None


def parse_number_list(text, kind=float):
    """Parse '0,60,120' into a list of numbers"""
    try:
        return [kind(item) for item in text.split(',') if item.strip()]
    except ValueError as e:
        raise ConfigurationError(f"malformed list '{text}': {e}") from e


def resolve_settings(args):
    """Merge config.py defaults, an optional --config file and command-line flags

    Returns:
        dict: Setting name -> value for every setting the subcommand accepts;
            None where neither the file nor a flag gave one
    """
    file_values = {}
    if getattr(args, 'config', None):
        if not Path(args.config).is_file():
            raise ImageIOError(args.config, "config file not found")
        file_values = {key.lower().replace('-', '_'): value
                       for key, value in dotenv_values(args.config).items()}
    settings = {}
    for name, kind in SETTING_TYPES.items():
        if not hasattr(args, name):
            continue
        value = getattr(args, name)
        if value is None and file_values.get(name) is not None:
            try:
                value = kind(file_values[name])
            except ValueError as e:
                raise ConfigurationError(f"config file: bad value for {name}: {e}") from e
        settings[name] = value
    if 'seed' in settings and settings['seed'] is None:
        settings['seed'] = config.DEFAULT_SEED
    return settings


def build_deblurrer(settings, thetas=None):
    """BlindDeconvolver from resolved settings

    Args:
        settings (dict): Output of resolve_settings
        thetas (list, optional): Orientations overriding the settings

    Returns:
        BlindDeconvolver: Configured deblurrer
    """
    solver = SolverConfig.from_config(
        alpha=settings.get('alpha'),
        zeta=settings.get('zeta'),
        step_t=settings.get('step_t'),
        fista_iters=settings.get('fista_iters'),
        irls_outer=settings.get('irls_outer'),
        cg_inner=settings.get('cg_inner'),
        outer_em_iters=settings.get('em_iters'),
    )
    gabor = GaborParams.from_config(
        wavelength=settings.get('gabor_lambda'),
        sigma=settings.get('gabor_sigma'),
        psi=settings.get('gabor_psi'),
        gamma=settings.get('gabor_gamma'),
        wavelength_unit=settings.get('gabor_lambda_unit'),
    )
    nonblind = NonblindConfig.from_config(
        method=settings.get('nonblind'),
        reg_weight=settings.get('nb_reg'),
        inner_iters=settings.get('nb_iters'),
    )
    if thetas is None:
        thetas = config.DEFAULT_THETAS
        if settings.get('thetas'):
            thetas = parse_number_list(settings['thetas'])
    thetas = sorted(t % 180.0 for t in thetas)
    return BlindDeconvolver(
        solver=solver,
        gabor=gabor,
        thetas=thetas,
        nonblind=nonblind,
        scale_ratio=settings.get('scale_ratio'),
        min_kernel=settings.get('min_kernel'),
    )


def _resolved_config(seed, deblurrer, kernel_size):
    """Every parameter actually used, for the manifest"""
    return {
        "kernel_size": kernel_size,
        "solver": deblurrer.solver.to_dict(),
        "gabor": deblurrer.gabor.to_dict(),
        "thetas": deblurrer.thetas,
        "nonblind": deblurrer.nonblind.to_dict(),
        "scale_ratio": deblurrer.scale_ratio,
        "min_kernel": deblurrer.min_kernel,
        "seed": seed,
    }


def _luminance(channels):
    if len(channels) == 1:
        return channels[0]
    stacked = np.stack([c.data for c in channels], axis=2)
    return RasterImage(stacked @ LUMA)


def _run_deblur(deblurrer, kernel_size, seed, input_path, out_path, plots):
    schedule = deblurrer.schedule_for(kernel_size)
    manager = RunManager('deblur', _resolved_config(seed, deblurrer, kernel_size), seed)
    manager.add_input('image', input_path)

    channels = load_color_channels(input_path)
    gray = load_image(input_path)
    with manager.timed('estimate_kernel'):
        kernel, run = deblurrer.estimate_kernel(gray, schedule, SeededRng(seed))
    manager.record_timing('levels', run.level_seconds)
    with manager.timed('nonblind'):
        restored = [deconvolve(channel, kernel, deblurrer.nonblind) for channel in channels]
    run.final_image = _luminance(restored)

    report = ReportGenerator()
    kernel_path = sibling_path(out_path, '.kernel.txt')
    trace_path = sibling_path(out_path, '.trace.json')
    save_color_channels(restored, out_path)
    save_kernel(kernel, kernel_path)
    report.write_trace(run, trace_path)
    manager.add_output('image', out_path)
    manager.add_output('kernel', kernel_path)
    manager.add_output('trace', trace_path)

    if plots:
        _write_run_plots(manager, out_path, kernel, run)

    manager.finish(sibling_path(out_path, '.manifest.json'))
    logger.info(f"Deblurred image written to {out_path}")
    return EXIT_OK


def _run_estimate(deblurrer, kernel_size, seed, input_path, kernel_path, plots):
    schedule = deblurrer.schedule_for(kernel_size)
    manager = RunManager('estimate-kernel', _resolved_config(seed, deblurrer, kernel_size), seed)
    manager.add_input('image', input_path)
    gray = load_image(input_path)
    with manager.timed('estimate_kernel'):
        kernel, run = deblurrer.estimate_kernel(gray, schedule, SeededRng(seed))
    manager.record_timing('levels', run.level_seconds)

    trace_path = sibling_path(kernel_path, '.trace.json')
    save_kernel(kernel, kernel_path)
    ReportGenerator().write_trace(run, trace_path)
    manager.add_output('kernel', kernel_path)
    manager.add_output('trace', trace_path)
    if plots:
        _write_run_plots(manager, kernel_path, kernel, run)
    manager.finish(sibling_path(kernel_path, '.manifest.json'))
    return EXIT_OK


def cmd_deblur(args):
    """Estimate the kernel of an image and deblur it

    Writes <out>, <out>.kernel.txt, <out>.trace.json and <out>.manifest.json.

    Returns:
        int: Exit code
    """
    settings = resolve_settings(args)
    deblurrer = build_deblurrer(settings)
    input_path = Path(args.input)
    out_path = Path(args.out) if args.out else input_path.with_name(f"{input_path.stem}_deblurred.png")
    return _run_deblur(deblurrer, args.kernel_size, settings['seed'], input_path, out_path, args.plots)


def cmd_estimate_kernel(args):
    """Estimate the blur kernel of an image without deblurring it

    Returns:
        int: Exit code
    """
    settings = resolve_settings(args)
    deblurrer = build_deblurrer(settings)
    input_path = Path(args.input)
    kernel_path = Path(args.out) if args.out else input_path.with_name(f"{input_path.stem}.kernel.txt")
    return _run_estimate(deblurrer, args.kernel_size, settings['seed'], input_path, kernel_path, args.plots)


# Subcommands whose manifest carries everything needed to run them again
REPLAYABLE = {'deblur': _run_deblur, 'estimate-kernel': _run_estimate}


def cmd_replay(args):
    """Run a deblur or estimate-kernel again from its manifest

    The recorded configuration and seed are used as they are; only the
    output path may change. Output goes to --out, or over the recorded one.

    Returns:
        int: Exit code
    """
    try:
        manifest = RunManifest.from_dict(read_json(args.manifest))
    except TypeError as e:
        raise ConfigurationError(f"{args.manifest} is not a run manifest: {e}") from e
    if manifest.subcommand not in REPLAYABLE:
        raise ConfigurationError(f"cannot replay a '{manifest.subcommand}' manifest")

    recorded = manifest.config
    try:
        deblurrer = BlindDeconvolver(
            solver=SolverConfig.from_dict(recorded['solver']),
            gabor=GaborParams.from_dict(recorded['gabor']),
            thetas=recorded['thetas'],
            nonblind=NonblindConfig.from_dict(recorded['nonblind']),
            scale_ratio=recorded['scale_ratio'],
            min_kernel=recorded['min_kernel'],
        )
        kernel_size = recorded['kernel_size']
        input_path = Path(manifest.inputs['image'])
        out_key = 'image' if manifest.subcommand == 'deblur' else 'kernel'
        out_path = Path(args.out) if args.out else Path(manifest.outputs[out_key])
    except (KeyError, TypeError) as e:
        raise ConfigurationError(f"{args.manifest}: incomplete configuration ({e})") from e

    logger.info(f"Replaying {manifest.subcommand} of {input_path} with seed {manifest.seed}")
    return REPLAYABLE[manifest.subcommand](deblurrer, kernel_size, manifest.seed,
                                           input_path, out_path, args.plots)


def _write_run_plots(manager, out_path, kernel, run):
    visualizer = Visualizer(out_path.parent)
    for name, path in (
        ('kernel_plot', visualizer.plot_kernel(kernel, f"{out_path.stem}.kernel")),
        ('levels_plot', visualizer.plot_level_trace(run, f"{out_path.stem}.levels")),
    ):
        if path:
            manager.add_output(name, path)


def _emit_report(document, out, subcommand, inputs, settings=None):
    """Print a report to stdout and, with --out, write it plus a manifest"""
    print(json.dumps(document, indent=2, sort_keys=True))
    if not out:
        return
    manager = RunManager(subcommand, settings or {})
    for name, path in inputs.items():
        manager.add_input(name, path)
    write_json(document, out)
    manager.add_output('report', out)
    manager.finish(sibling_path(out, '.manifest.json'))


def cmd_score(args):
    """Print the defocus score (and MSE/PSNR with --reference) as JSON

    Returns:
        int: Exit code
    """
    settings = resolve_settings(args)
    image = load_image(args.input)
    reference = load_image(args.reference) if args.reference else None
    report = quality_report(image, reference, scale=settings.get('defocus_scale'))
    inputs = {'image': args.input}
    if args.reference:
        inputs['reference'] = args.reference
    scale = settings.get('defocus_scale') or config.DEFOCUS_SCALE
    document = ReportGenerator().quality_document(report, defocus_scale=scale)
    _emit_report(document, args.out, 'score', inputs, {'defocus_scale': scale})
    return EXIT_OK


def cmd_psnr(args):
    """Print the PSNR between two equally sized images as JSON

    Returns:
        int: Exit code
    """
    # Images load in [0, 1]; MAX_I = 255 reads them in 8-bit units
    first = load_image(args.first)
    second = load_image(args.second)
    first = RasterImage(first.data * args.max)
    second = RasterImage(second.data * args.max)
    report = QualityReport(defocus_score=None, sigma_d=None,
                           mse=mse(first, second), psnr_db=psnr(first, second, args.max))
    document = {"mse": report.mse, "psnr_db": report.to_dict()["psnr_db"], "max_i": args.max}
    _emit_report(document, args.out, 'psnr', {'first': args.first, 'second': args.second},
                 {'max_i': args.max})
    return EXIT_OK


def cmd_synth(args):
    """Blur a sharp image (or generated pattern) with a known kernel plus noise

    Writes <out>, <out>.sharp.png, <out>.kernel.txt and <out>.manifest.json.

    Returns:
        int: Exit code
    """
    settings = resolve_settings(args)
    kernel = parse_kernel_spec(args.kernel)
    noise = NoiseSpec(sigma=args.noise_sigma, seed=settings['seed'])
    out_path = Path(args.out)

    manager = RunManager('synth', {
        'kernel': args.kernel,
        'noise': noise.to_dict(),
        'pattern': args.pattern,
        'size': args.size if args.pattern else None,
    }, settings['seed'])
    if args.pattern:
        sharp = make_pattern(args.pattern, args.size, settings['seed'])
    else:
        manager.add_input('sharp', args.input)
        sharp = load_image(args.input)

    blurred = synthesize(sharp, kernel, noise)
    sharp_path = sibling_path(out_path, '.sharp.png')
    kernel_path = sibling_path(out_path, '.kernel.txt')
    save_image(blurred, out_path)
    save_image(sharp, sharp_path)
    save_kernel(kernel, kernel_path)
    manager.add_output('blurred', out_path)
    manager.add_output('sharp', sharp_path)
    manager.add_output('kernel', kernel_path)
    manager.finish(sibling_path(out_path, '.manifest.json'))
    logger.info(f"Synthetic pair written: {sharp_path} -> {out_path}")
    return EXIT_OK


def collect_corpus(directory):
    """Bench entries of a directory: synth pairs first, then remaining bare images

    Returns:
        list: Dicts with 'name', 'blurred' and 'sharp' (None without ground truth)
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ImageIOError(directory, "corpus directory not found")
    entries = []
    claimed = set()
    for manifest_path in sorted(directory.glob('*.manifest.json')):
        manifest = read_json(manifest_path)
        outputs = manifest.get('outputs', {})
        if manifest.get('subcommand') != 'synth' or 'blurred' not in outputs:
            continue
        blurred = Path(outputs['blurred'])
        sharp = Path(outputs['sharp']) if 'sharp' in outputs else None
        # Paths are stored as written; resolve relative ones against the corpus
        if not blurred.is_file():
            blurred = directory / blurred.name
        if sharp is not None and not sharp.is_file():
            sharp = directory / sharp.name
        entries.append({'name': blurred.stem, 'blurred': blurred, 'sharp': sharp})
        claimed.update({blurred.resolve(), sharp.resolve() if sharp else None})
    for path in list_images(directory):
        if path.resolve() in claimed or path.name.endswith('.sharp.png'):
            continue
        entries.append({'name': path.stem, 'blurred': path, 'sharp': None})
    return entries


def _bench_job(entry, index, variant, settings, kernel_size, out_dir):
    blurred = load_image(entry['blurred'])
    sharp = load_image(entry['sharp']) if entry['sharp'] else None
    deblurrer = build_deblurrer(settings, thetas=even_thetas(variant))
    rng = SeededRng(settings['seed']).spawn(index).spawn(variant)
    image, _, _ = deblurrer.deblur(blurred, deblurrer.schedule_for(kernel_size), rng)
    save_image(image, out_dir / f"{entry['name']}.n{variant}.png")
    return quality_report(image, sharp)


def cmd_bench(args):
    """Deblur a corpus with several Gabor filter counts and tabulate the scores

    Returns:
        int: Exit code
    """
    settings = resolve_settings(args)
    variants = parse_number_list(settings['variants'], int) if settings.get('variants') else config.BENCH_VARIANTS
    threads = max(1, min(settings.get('threads') or config.THREADS, config.THREADS))
    entries = collect_corpus(args.corpus)
    if not entries:
        raise ConfigurationError(f"corpus {args.corpus} contains no images")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    # Validate the shared configuration once before fanning out
    shared = build_deblurrer(settings)
    shared.schedule_for(args.kernel_size)
    manager = RunManager('bench', {**_resolved_config(settings['seed'], shared, args.kernel_size),
                                   'variants': variants, 'threads': threads}, settings['seed'])
    for entry in entries:
        manager.add_input(entry['name'], entry['blurred'])

    results = {}
    with manager.timed('deblur'):
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {
                pool.submit(_bench_job, entry, i, n, settings, args.kernel_size, out_dir): (i, n)
                for i, entry in enumerate(entries) for n in variants
            }
            for future in tqdm(as_completed(futures), total=len(futures), desc="bench", unit="run"):
                results[futures[future]] = future.result()

    rows = []
    for i, entry in enumerate(entries):
        sharp = load_image(entry['sharp']) if entry['sharp'] else None
        row = {'image': entry['name'], 'blur': quality_report(load_image(entry['blurred']), sharp)}
        row.update({n: results[(i, n)] for n in variants})
        rows.append(row)

    report = ReportGenerator()
    table = report.bench_table(rows, variants)
    json_path, text_path = out_dir / 'bench.json', out_dir / 'bench.txt'
    report.write_bench(table, json_path, text_path, config={'variants': variants, 'kernel_size': args.kernel_size})
    manager.add_output('bench_json', json_path)
    manager.add_output('bench_table', text_path)
    if args.plots:
        plot = Visualizer(out_dir).plot_bench(table)
        if plot:
            manager.add_output('bench_plot', plot)
    manager.finish(out_dir / 'bench.manifest.json')
    print(report.format_table(table))
    return EXIT_OK

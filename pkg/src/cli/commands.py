"""
Command handlers for the copuladep command line
"""

import argparse
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Dict, List, Optional

from loguru import logger
from pydantic import ValidationError

from ..config import EXIT_OK, settings
from ..exceptions import CopulaDepError, InputError, ParameterError, ParseError
from ..models import (
    CopulaGrid,
    GaussianModel,
    KModel,
    Normalization,
    ReturnKind,
    ReturnMatrix,
    RngSpec,
    RunConfig,
    SkewedTModel,
)
from ..services import (
    AnalyticCopulaService,
    CopulaFitService,
    CopulaSampler,
    EmpiricalCopulaService,
    MarketDataService,
    StorageService,
)
from .parser import build_parser


# Flag destinations that map one-to-one onto RunConfig fields
RUN_CONFIG_FLAGS = (
    "input",
    "output_dir",
    "normalization",
    "window",
    "include_current",
    "bins",
    "seed",
    "models",
    "loss_convention",
    "n_range",
    "nu_range",
    "gamma_range",
    "asymmetry_bin_width",
    "correlation_bin_width",
)

KIND_SUFFIX = {ReturnKind.ORIGINAL: "original", ReturnKind.LOCALLY_NORMALIZED: "local"}


def _validation_message(e: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
    )


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """
    RunConfig from an optional TOML file overridden by explicit flags

    Args:
        args: Parsed command line

    Returns:
        Validated RunConfig
    """
    data: Dict[str, object] = {}
    config_path = getattr(args, "config", None)
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise ParseError("config file not found", path=str(path))
        try:
            with open(path, "rb") as f:
                data.update(tomllib.load(f))
        except tomllib.TOMLDecodeError as e:
            raise ParseError(f"invalid TOML: {e}", path=str(path))
        logger.debug(f"Loaded run config from {path}: {sorted(data)}")

    for name in RUN_CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value

    try:
        return RunConfig(**data)
    except ValidationError as e:
        raise ParameterError(_validation_message(e))


def _kinds(config: RunConfig) -> List[ReturnKind]:
    if config.normalization == Normalization.ORIGINAL:
        return [ReturnKind.ORIGINAL]
    if config.normalization == Normalization.LOCAL:
        return [ReturnKind.LOCALLY_NORMALIZED]
    return [ReturnKind.ORIGINAL, ReturnKind.LOCALLY_NORMALIZED]


def return_matrices(config: RunConfig) -> Dict[ReturnKind, ReturnMatrix]:
    """Load, align and transform the input prices for every requested kind"""
    if config.input is None:
        raise ParameterError("an input price file is required (--input or 'input' in the config)")
    series = MarketDataService.load_prices(config.input)
    dates, prices, tickers = MarketDataService.align_prices(series)
    return {
        kind: MarketDataService.build_return_matrix(
            prices,
            tickers,
            kind=kind,
            window=config.window,
            include_current=config.include_current,
            dates=dates,
        )
        for kind in _kinds(config)
    }


def _output_dir(config: RunConfig, kind: ReturnKind) -> Path:
    """Outputs go straight into output_dir unless both kinds are produced"""
    if config.normalization == Normalization.BOTH:
        return config.output_dir / KIND_SUFFIX[kind]
    return config.output_dir


def cmd_returns(config: RunConfig) -> List[Path]:
    """Write returns_original.csv and/or returns_local.csv"""
    written = []
    for kind, matrix in return_matrices(config).items():
        path = config.output_dir / f"returns_{KIND_SUFFIX[kind]}.csv"
        written.append(StorageService.write_return_matrix(path, matrix))
    return written


def _write_asymmetry(out: Path, matrix: ReturnMatrix, config: RunConfig) -> List[Path]:
    report = EmpiricalCopulaService.asymmetry_histograms(matrix, config.bins, config.asymmetry_bin_width)
    return [
        StorageService.write_asymmetry(out / "asymmetry.csv", report),
        StorageService.write_value_histogram(out / "asymmetry_hist_p.csv", report.hist_p),
        StorageService.write_value_histogram(out / "asymmetry_hist_q.csv", report.hist_q),
    ]


def cmd_empcop(config: RunConfig) -> List[Path]:
    """Averaged empirical copula, asymmetries and correlations per return kind"""
    written = []
    for kind, matrix in return_matrices(config).items():
        out = _output_dir(config, kind)
        hist = EmpiricalCopulaService.averaged_copula(matrix, config.bins)
        written.append(StorageService.write_grid(out / "empcop.csv", hist))
        written.extend(_write_asymmetry(out, matrix, config))
        corrs = MarketDataService.correlation_set(matrix)
        written.append(StorageService.write_correlations(out / "correlations.csv", corrs))
    return written


def cmd_asym(config: RunConfig) -> List[Path]:
    """Tail dependence asymmetry outputs only"""
    written = []
    for kind, matrix in return_matrices(config).items():
        written.extend(_write_asymmetry(_output_dir(config, kind), matrix, config))
    return written


def cmd_fit(config: RunConfig) -> List[Path]:
    """Comparison table, analytic grids, difference grids and fit traces"""
    written = []
    for kind, matrix in return_matrices(config).items():
        out = _output_dir(config, kind)
        hist = EmpiricalCopulaService.averaged_copula(matrix, config.bins)
        corrs = MarketDataService.correlation_set(matrix)
        table = CopulaFitService.model_comparison(
            hist,
            corrs,
            models=config.models,
            n_range=config.n_range,
            nu_range=config.nu_range,
            gamma_range=config.gamma_range,
            correlation_bin_width=config.correlation_bin_width,
        )
        written.append(
            StorageService.write_comparison(
                out / "comparison.csv", out / "comparison.json", table, config.loss_convention
            )
        )
        for row in table.rows:
            written.append(StorageService.write_grid(out / f"grid_{row.name}.csv", table.grids[row.name]))
            written.append(StorageService.write_grid(out / f"diff_{row.name}.csv", table.difference_grids[row.name]))
            if row.fit is not None:
                written.append(StorageService.write_trace(out / f"trace_{row.name}.csv", row.fit))
        ranking = ", ".join(table.ranking())
        logger.info(f"{KIND_SUFFIX[kind]} returns ranked by loss: {ranking}")
    return written


def model_from_args(args: argparse.Namespace):
    """Copula model from --model, --c, --n, --nu and --gamma"""
    if args.model == "gaussian":
        return GaussianModel(c=args.c)
    if args.model == "k":
        if args.n is None:
            raise ParameterError("--n is required for the K-copula")
        return KModel(c=args.c, n=args.n)
    if args.model == "skewed_t":
        if args.nu is None:
            raise ParameterError("--nu is required for the skewed t copula")
        return SkewedTModel(c=args.c, nu=args.nu, gamma=args.gamma)
    raise ParameterError(f"unsupported model {args.model!r}")


def cmd_sample(args: argparse.Namespace) -> List[Path]:
    """Wide CSV of synthetic prices readable by the other commands"""
    # --seed, then seed from the config file, then the settings default
    seed = load_run_config(args).seed if args.config else args.seed
    rng = RngSpec(seed=settings.default_seed if seed is None else seed, algorithm=args.algorithm)
    tickers, prices = CopulaSampler.sample_columns(model_from_args(args), args.columns, args.length, rng, args.method)
    return [StorageService.write_prices(args.output, tickers, prices)]


def cmd_grid(args: argparse.Namespace) -> List[Path]:
    """Analytic copula density grid with its sidecar"""
    bins = settings.default_bins if args.bins is None else args.bins
    grid = AnalyticCopulaService.evaluate_grid(model_from_args(args), bins)
    return [StorageService.write_grid(args.output, grid)]


def cmd_diff(args: argparse.Namespace) -> List[Path]:
    """Grid of left minus right"""
    left = StorageService.read_grid(args.left)
    right = StorageService.read_grid(args.right)
    if left.bins != right.bins:
        raise ParameterError(f"grids differ in bins: {left.bins} vs {right.bins}")
    diff = CopulaGrid(
        bins=left.bins,
        density=left.density - right.density,
        model=getattr(right, "model", None),
        kind="difference",
        sample_count=left.sample_count,
    )
    return [StorageService.write_grid(args.output, diff)]


PIPELINE_COMMANDS = {
    "returns": cmd_returns,
    "empcop": cmd_empcop,
    "asym": cmd_asym,
    "fit": cmd_fit,
}

STANDALONE_COMMANDS = {
    "sample": cmd_sample,
    "grid": cmd_grid,
    "diff": cmd_diff,
}


def report_error(error: CopulaDepError) -> int:
    """Print the error as one JSON line on stderr and return its exit code"""
    print(json.dumps(error.to_dict()), file=sys.stderr)
    return error.exit_code


def run(argv: Optional[List[str]] = None, args: Optional[argparse.Namespace] = None) -> int:
    """
    Parse arguments and run one subcommand

    Args:
        argv: Command line without the program name
        args: Already parsed arguments (takes precedence over argv)

    Returns:
        Process exit code
    """
    if args is None:
        args = build_parser().parse_args(argv)
    try:
        if args.command in PIPELINE_COMMANDS:
            written = PIPELINE_COMMANDS[args.command](load_run_config(args))
        else:
            written = STANDALONE_COMMANDS[args.command](args)
    except CopulaDepError as e:
        logger.error(f"{args.command} failed: {e}")
        return report_error(e)
    except ValidationError as e:
        logger.error(f"{args.command} failed: {e}")
        return report_error(ParameterError(_validation_message(e)))
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        return report_error(InputError(str(e)))

    for path in written:
        logger.debug(f"Wrote {path}")
    logger.info(f"{args.command} finished, {len(written)} files written")
    return EXIT_OK

"""
Argument parser for the copuladep command line

Pipeline flags default to None so that only flags given explicitly
override values from a --config TOML file.
"""

import argparse

from ..config import APP_DESCRIPTION, APP_NAME, APP_VERSION
from ..models import MODEL_NAMES
from ..services.sampling import K_METHODS


SAMPLE_MODELS = ("gaussian", "k", "skewed_t")


def _pipeline_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="TOML file with run settings")
    common.add_argument("--input", type=str, help="Price CSV (long or wide form)")
    common.add_argument("--output-dir", type=str, help="Directory for output files")
    common.add_argument(
        "--normalization",
        choices=["original", "local", "both"],
        help="Original returns, locally normalized returns, or both",
    )
    common.add_argument("--window", type=int, help="Local normalization window (default 13)")
    common.add_argument(
        "--strict-window",
        dest="include_current",
        action="store_const",
        const=False,
        help="Normalize by the strictly preceding window instead of one ending at t",
    )
    common.add_argument("--bins", type=int, help="Copula histogram bins per axis (divisible by 5)")
    return common


def _model_options(parser: argparse.ArgumentParser, choices) -> None:
    parser.add_argument("--model", required=True, choices=choices, help="Copula family")
    parser.add_argument("--c", type=float, required=True, help="Correlation")
    parser.add_argument("--n", type=float, help="K-copula fluctuation parameter N")
    parser.add_argument("--nu", type=float, help="Skewed t degrees of freedom")
    parser.add_argument("--gamma", type=float, default=0.0, help="Skewed t skewness")


def _range(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'low,high', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per pipeline stage"""
    parser = argparse.ArgumentParser(prog=APP_NAME, description=APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    parser.add_argument("--log-level", type=str, help="Log level (default from COPULADEP_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _pipeline_options()

    sub.add_parser("returns", parents=[common], help="Write original and/or locally normalized returns")

    for name, text in (
        ("empcop", "Averaged empirical copula, tail asymmetries and correlations"),
        ("asym", "Tail dependence asymmetries only"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--asymmetry-bin-width", type=float, help="Bin width of the p and q histograms")
        p.add_argument("--correlation-bin-width", type=float, help="Bin width of the correlation histogram")

    fit = sub.add_parser("fit", parents=[common], help="Fit and compare the analytic copula families")
    fit.add_argument("--models", type=lambda s: [m.strip() for m in s.split(",") if m.strip()],
                     help=f"Comma separated subset of {','.join(MODEL_NAMES)}")
    fit.add_argument("--loss-convention", choices=["sum", "mean"], help="Loss used to rank models")
    fit.add_argument("--n-range", type=_range, help="Search interval for N as low,high")
    fit.add_argument("--nu-range", type=_range, help="Search interval for nu as low,high")
    fit.add_argument("--gamma-range", type=_range, help="Search interval for gamma as low,high")
    fit.add_argument("--correlation-bin-width", type=float, help="Bin width of the CWG correlation histogram")

    sample = sub.add_parser("sample", help="Write synthetic prices from a generative model")
    _model_options(sample, SAMPLE_MODELS)
    sample.add_argument("--columns", type=int, default=2, help="Number of synthetic tickers")
    sample.add_argument("--length", type=int, required=True, help="Number of sampled returns per ticker")
    sample.add_argument("--method", choices=list(K_METHODS), default="gamma_mixture", help="K sampler")
    sample.add_argument("--seed", type=int, help="Random seed (overrides seed in --config)")
    sample.add_argument("--config", type=str, help="TOML run settings; only seed is used")
    sample.add_argument("--algorithm", choices=["pcg64", "philox"], default="pcg64", help="Bit generator")
    sample.add_argument("--output", type=str, required=True, help="Output CSV path")

    grid = sub.add_parser("grid", help="Write an analytic copula density grid")
    _model_options(grid, [m for m in MODEL_NAMES if m != "cwg"])
    grid.add_argument("--bins", type=int, help="Bins per axis")
    grid.add_argument("--output", type=str, required=True, help="Output CSV path")

    diff = sub.add_parser("diff", help="Difference of two grids sharing the grid schema")
    diff.add_argument("left", type=str, help="Minuend grid CSV")
    diff.add_argument("right", type=str, help="Subtrahend grid CSV")
    diff.add_argument("--output", type=str, required=True, help="Output CSV path")

    return parser

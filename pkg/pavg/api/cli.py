import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from pavg.enums.constants import (
    DEFAULT_TOL,
    DEFAULT_TRIALS,
    DEFAULT_VERIFY_TOL,
    EXIT_FAILED,
    EXIT_OK,
    EXIT_USAGE,
)
from pavg.services.helpers.artifacts import dumps_report, stamp, write_report_atomic
from pavg.services.run_config import RunConfig, build_run_config
from pavg.services.run_service import RunService

logger = logging.getLogger("pavg.cli")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging() -> None:
    level = os.getenv("PAVG_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT, stream=sys.stderr)


def _exponent(text: str) -> float:
    value = float(text)
    if not value > 1:
        raise argparse.ArgumentTypeError(f"p must lie in (1, inf], got {text}")
    return value


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--report", dest="report_path", help="write the report here (atomically) as well as to stdout")
    sub.add_argument("--format", choices=("json", "csv"), default="json", help="file format of --report")
    sub.add_argument("--seed", type=int, help="random seed (default: PAVG_SEED or 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pavg",
        description="Discrete p-averages, p-averaging sets and game p-Laplacian Dirichlet solver.",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    compute = subparsers.add_parser("compute", help="p-average of a weighted sample", formatter_class=fmt)
    compute.add_argument("--values", dest="values_path", required=True, help="CSV file, one value[,weight] per line")
    compute.add_argument("--p", type=_exponent, default=2.0, help="exponent in (1, inf]; 'inf' gives the midrange")
    compute.add_argument("--tol", type=_positive, default=DEFAULT_TOL, help="root bracket tolerance, in data units")
    _add_common(compute)

    gamma = subparsers.add_parser("gamma-median", help="gamma-median of an even sorted sample", formatter_class=fmt)
    source = gamma.add_mutually_exclusive_group(required=True)
    source.add_argument("--values", nargs="+", type=float, help="strictly increasing values, even count")
    source.add_argument("--values-file", dest="values_path", help="CSV file with the values")
    gamma.add_argument("--p-seq", dest="p_sequence", nargs="+", type=float, help="decreasing exponents in (1, 2]")
    _add_common(gamma)

    verify = subparsers.add_parser("verify-set", help="check the p-averaging set identity", formatter_class=fmt)
    verify.add_argument(
        "--set", required=True, help="<name|polygon:k=K[,rot=R]|cross-cube:n=N|p6-2d>, rotation in radians"
    )
    verify.add_argument("--p", type=_exponent, help="even exponent (default: the set's own)")
    verify.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="number of random probes")
    verify.add_argument("--tol", type=_positive, default=DEFAULT_VERIFY_TOL, help="identity residual tolerance")
    verify.add_argument("--normalize", action="store_true", help="rescale the vectors to unit length first")
    verify.add_argument("--exact", action="store_true", help="also check the identity in exact Q[sqrt 5] arithmetic")
    verify.add_argument("--export", dest="export_path", help="write the vectors and weights as CSV")
    _add_common(verify)

    amvp = subparsers.add_parser("amvp", help="epsilon sweep of the discrete AMVP estimate", formatter_class=fmt)
    amvp.add_argument("--set", required=True, help="direction set, same grammar as verify-set")
    amvp.add_argument("--p", type=_exponent, help="exponent (default: the set's own)")
    amvp.add_argument("--probe", dest="probe_path", required=True, help="JSON probe: gradient/hessian or field/point")
    amvp.add_argument("--eps", type=_positive, default=0.1, help="largest epsilon (length units of the probe)")
    amvp.add_argument("--halvings", type=int, default=6, help="number of epsilons, each half the previous")
    amvp.add_argument("--tol", type=_positive, default=1e-6, help="allowed |limit - reference|")
    amvp.add_argument("--normalize", action="store_true", help="rescale the vectors to unit length first")
    amvp.add_argument("--out", dest="out_path", help="CSV of (epsilon, estimate)")
    _add_common(amvp)

    solve = subparsers.add_parser("solve", help="Dirichlet problem on a tessellating lattice", formatter_class=fmt)
    solve.add_argument("--config", dest="config_path", required=True, help="problem JSON file")
    solve.add_argument("--out", dest="out_path", help="CSV of node coordinates, value and node class")
    _add_common(solve)

    walsh = subparsers.add_parser("verify-walsh", help="polygon mean value of complex polynomials", formatter_class=fmt)
    walsh.add_argument("--degree", type=int, default=8, help="maximum polynomial degree")
    walsh.add_argument("--trials", type=int, default=200, help="random polynomials to test")
    _add_common(walsh)

    trig = subparsers.add_parser("verify-trig", help="cosine power sums over regular polygons", formatter_class=fmt)
    trig.add_argument("--kmax", type=int, default=12, help="largest k; every 1 <= r <= k <= kmax is checked")
    _add_common(trig)

    quintic = subparsers.add_parser("quintic-check", help="six-average quintic and resolvent root test", formatter_class=fmt)
    quintic.add_argument("--values", nargs="+", type=float, help="integer data set (default: 1 6 11 13 19)")
    _add_common(quintic)

    serve = subparsers.add_parser("serve", help="run the HTTP service", formatter_class=fmt)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _config_payload(args: argparse.Namespace) -> Dict[str, Any]:
    fields = RunConfig.model_fields
    return {key: value for key, value in vars(args).items() if key in fields and value is not None}


def run(config: RunConfig, report_path: Optional[str] = None) -> int:
    """Ejecuta un subcomando y escribe el informe JSON."""
    report = RunService().dispatch(config)
    if "error" in report:
        print(f"error: {report['error']}", file=sys.stderr)
        return EXIT_USAGE
    stamped = stamp(report)
    if report_path:
        write_report_atomic(report_path, stamped, config.format)
    sys.stdout.write(dumps_report(stamped))
    return EXIT_OK if report.get("pass", True) else EXIT_FAILED


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    configure_logging()
    args = build_parser().parse_args(argv)

    if args.subcommand == "serve":
        import uvicorn

        uvicorn.run("pavg.main:app", host=args.host, port=args.port)
        return EXIT_OK

    try:
        config = build_run_config(_config_payload(args))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(config, args.report_path)


if __name__ == "__main__":
    raise SystemExit(main())

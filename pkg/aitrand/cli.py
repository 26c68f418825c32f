"""
Command-line entry point.

    aitrand analyze --config cfg.json --out DIR [--jobs N]
    aitrand gen --kind prng|weak|champernowne|biased --seed S [--p P] --bits N --out FILE [--vn-normalize]
    aitrand test <book-stack|borel|walk|entropy|ss> --input FILE [test flags]
    aitrand carmichael --bound B --out FILE
    aitrand schema

Exit codes: 0 on success, 1 on configuration or usage errors, 2 on data errors.
One-shot commands print a single JSON line on stdout; logs go to stderr.
"""
import argparse
import json
import sys

from pydantic import ValidationError

from aitrand.core.config import get_settings
from aitrand.core.exceptions import AitrandError, ConfigError, ParameterError
from aitrand.core.logging import get_logger, setup_logging
from aitrand.models.requests import BatteryConfig, SourceDescriptor, TestParameters
from aitrand.orchestrator import load_carmichael_set, run_battery, run_single_test
from aitrand.services import number_theory
from aitrand.services.bitstream import load_raw_file, write_raw_file
from aitrand.services.report_writer import emit_report
from aitrand.services.sources import build_source
from aitrand.utils.hashing import hash_file
from aitrand.utils.test_names import SUPPORTED_TESTS, normalize_test_name

logger = get_logger("aitrand")

_GEN_KINDS = {
    "prng": "prng",
    "weak": "weak_prng",
    "weak_prng": "weak_prng",
    "champernowne": "champernowne",
    "biased": "biased",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(record: dict | str):
    print(record if isinstance(record, str) else json.dumps(record), flush=True)


def parse_args(argv: list[str] | None = None, default_jobs: int = 1) -> argparse.Namespace:
    parser = _Parser(prog="aitrand", description="Algorithmic-information randomness test battery.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    analyze = sub.add_parser("analyze", help="run the battery described by a config file")
    analyze.add_argument("--config", required=True, help="battery config JSON")
    analyze.add_argument("--out", help="output directory (overrides the config's output)")
    analyze.add_argument("--jobs", type=int, default=default_jobs, help="concurrent strings (default: AITRAND_JOBS)")

    gen = sub.add_parser("gen", help="write a generated source as a raw bit file")
    gen.add_argument("--kind", required=True, choices=sorted(_GEN_KINDS))
    gen.add_argument("--seed", type=int)
    gen.add_argument("--p", type=float, dest="bias_p", help="probability of a 1 for biased sources")
    gen.add_argument("--bits", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--vn-normalize", action="store_true")

    test = sub.add_parser("test", help="run one test on a raw bit file")
    test.add_argument("name", type=normalize_test_name, choices=SUPPORTED_TESTS, metavar="TEST")
    test.add_argument("--input", required=True)
    test.add_argument("--bits", type=int, help="truncate the input to this many bits")
    test.add_argument("--bit-order", choices=["msb", "lsb"], default="msb")
    test.add_argument("--window", type=int, default=4096, help="entropy window length")
    test.add_argument("--t", type=int, default=4096, help="entropy sample positions")
    test.add_argument("--m-limit", type=int, help="largest Borel block length")
    test.add_argument("--carmichael-bound", type=int, default=10**7)
    test.add_argument("--carmichael-list", help="file of Carmichael numbers to use instead of enumerating")

    carmichael = sub.add_parser("carmichael", help="enumerate Carmichael numbers up to a bound")
    carmichael.add_argument("--bound", type=int, required=True)
    carmichael.add_argument("--out", required=True)

    sub.add_parser("schema", help="print the battery config JSON schema")
    return parser.parse_args(argv)


def _analyze(args: argparse.Namespace) -> int:
    config = BatteryConfig.load(args.config)
    out = args.out or config.output
    if not out:
        raise ConfigError("no output directory: pass --out or set output in the config")
    if out != config.output:
        config = BatteryConfig.parse({**config.model_dump(), "output": out})
    if args.jobs < 1:
        raise ParameterError("--jobs must be at least 1")

    report = run_battery(config, jobs=args.jobs)
    written = emit_report(report, config.formats, out)
    for section in report.tests.values():
        for failure in section.failures:
            logger.warning(f"{section.test}: {failure.group}[{failure.index}] {failure.error}: {failure.message}")
    _emit({"out": out, "files": [str(p) for p in written]})
    return 0


def _gen(args: argparse.Namespace) -> int:
    try:
        descriptor = SourceDescriptor(
            kind=_GEN_KINDS[args.kind],
            seed=args.seed,
            bias_p=args.bias_p,
            bit_len=args.bits,
            vn_normalize=args.vn_normalize,
        )
    except ValidationError as e:
        raise ParameterError(f"invalid generator parameters: {e}") from e
    x = build_source(descriptor)
    path = write_raw_file(x, args.out)
    _emit({"path": str(path), "bit_len": x.bit_len, "sha256": hash_file(path)})
    return 0


def _test(args: argparse.Namespace) -> int:
    try:
        parameters = TestParameters(
            entropy_window=args.window,
            entropy_t=args.t,
            carmichael_bound=args.carmichael_bound,
            carmichael_list=args.carmichael_list,
            borel_m_limit=args.m_limit,
        )
    except ValidationError as e:
        raise ParameterError(f"invalid test parameters: {e}") from e
    x = load_raw_file(args.input, args.bits, args.bit_order)
    carmichael = load_carmichael_set(parameters) if args.name == "ss_carmichael" else None
    _emit(run_single_test(args.name, x, parameters, carmichael).model_dump_json())
    return 0


def _carmichael(args: argparse.Namespace) -> int:
    cs = number_theory.enumerate_carmichael(args.bound)
    path = number_theory.write_carmichael_file(cs, args.out)
    _emit({"bound": cs.bound, "count": len(cs), "path": str(path)})
    return 0


def _schema(args: argparse.Namespace) -> int:
    _emit(json.dumps(BatteryConfig.model_json_schema()))
    return 0


_COMMANDS = {
    "analyze": _analyze,
    "gen": _gen,
    "test": _test,
    "carmichael": _carmichael,
    "schema": _schema,
}


def main(argv: list[str] | None = None) -> int:
    try:
        settings = get_settings()
    except ConfigError as e:
        setup_logging()
        logger.error(str(e))
        return e.exit_code
    setup_logging(settings.log_level)

    args = parse_args(argv, default_jobs=settings.jobs)
    try:
        return _COMMANDS[args.command](args)
    except AitrandError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())

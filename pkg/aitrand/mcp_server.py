"""
aitrand MCP server.

Exposes the randomness battery to MCP clients (Cursor, Claude Desktop and the
like): run a single test on a raw bit file, run a whole battery from a config,
or list Carmichael numbers.

Run with `python -m aitrand.mcp_server` or run_mcp_server.sh.
"""
import json
from typing import Any, Dict, Optional

from mcp.server.fastmcp import FastMCP
from starlette.concurrency import run_in_threadpool

from aitrand import __version__
from aitrand.core.exceptions import AitrandError
from aitrand.core.config import get_settings
from aitrand.core.logging import get_logger, setup_logging
from aitrand.models.requests import BatteryConfig, TestParameters
from aitrand.orchestrator import METRICS, BatteryOrchestrator, load_carmichael_set, run_single_test
from aitrand.services import number_theory
from aitrand.services.bitstream import load_raw_file
from aitrand.services.report_writer import emit_report
from aitrand.utils.test_names import SUPPORTED_TESTS, normalize_test_name

logger = get_logger("MCPServer")

mcp = FastMCP(
    "aitrand",
    instructions="Algorithmic-information randomness tests over raw bit files and built-in sources",
)

_TEST_INFO = {
    "book_stack": "move-to-front byte coding; metric is the number of 1 bits after transformation",
    "borel": "Borel normality over m-bit blocks; metric is the largest count deviation",
    "ss_carmichael": "Solovay-Strassen rounds over Carmichael numbers; metric is bits consumed until all are declared composite",
    "entropy": "sliding-window match-length entropy estimate; metric is h_hat in [0, 1]",
    "walk": "random-walk excursion; metric is max minus min of the partial sums",
}


def _failure(e: Exception, **context) -> Dict[str, Any]:
    return {"error": type(e).__name__, "message": str(e), "success": False, **context}


@mcp.resource("aitrand://tests")
def get_tests() -> str:
    """
    Describe the tests in the battery and the scalar metric each one reports.

    Returns:
        JSON string keyed by test name
    """
    info = {
        "version": __version__,
        "tests": {name: {"metric": METRICS[name], "description": _TEST_INFO[name]} for name in SUPPORTED_TESTS},
        "bit_order": "MSB-first within bytes unless bit_order='lsb'",
        "comparison": ["two-sample Kolmogorov-Smirnov", "Shapiro-Wilk", "Welch t"],
    }
    return json.dumps(info, indent=2)


@mcp.tool()
async def run_test(
    test_name: str,
    path: str,
    bits: Optional[int] = None,
    bit_order: str = "msb",
    entropy_window: int = 4096,
    entropy_t: int = 4096,
    borel_m_limit: Optional[int] = None,
    carmichael_bound: int = 10**7,
) -> Dict[str, Any]:
    """
    Run one test on a raw bit file.

    Args:
        test_name: book_stack, borel, ss_carmichael (or ss), entropy, walk
        path: headerless raw file of packed bits
        bits: truncate the input to this many bits (default: whole file)
        bit_order: 'msb' or 'lsb' bit order within each byte
        entropy_window: window length for the entropy estimate
        entropy_t: number of sampled positions for the entropy estimate
        borel_m_limit: largest block length for Borel normality
        carmichael_bound: enumerate Carmichael numbers up to this bound

    Returns:
        Dictionary with the outcome and its scalar metric
    """
    name = normalize_test_name(test_name)
    logger.info(f"MCP run_test: {name} on {path}")
    try:
        parameters = TestParameters(
            entropy_window=entropy_window,
            entropy_t=entropy_t,
            carmichael_bound=carmichael_bound,
            borel_m_limit=borel_m_limit,
        )
        x = load_raw_file(path, bits, bit_order)
        carmichael = None
        if name == "ss_carmichael":
            carmichael = await run_in_threadpool(load_carmichael_set, parameters)
        outcome = await run_in_threadpool(run_single_test, name, x, parameters, carmichael)
    except (AitrandError, ValueError) as e:
        logger.error(f"MCP run_test failed: {e}")
        return _failure(e, test=name, path=path)

    return {
        "test": name,
        "bit_len": x.bit_len,
        "metric": getattr(outcome, METRICS[name]) if name in METRICS else None,
        "outcome": outcome.model_dump(mode="json"),
        "success": True,
    }


@mcp.tool()
async def analyze_battery(config: Dict[str, Any], output_dir: Optional[str] = None) -> Dict[str, Any]:
    """
    Run a full battery from a config document (same schema as `aitrand analyze`).

    Args:
        config: battery config as a JSON object
        output_dir: when given, the JSON and CSV reports are written there too

    Returns:
        Dictionary with the report and the list of files written
    """
    try:
        battery = BatteryConfig.parse(config)
        report = await BatteryOrchestrator().run(battery)
        files = []
        if output_dir:
            files = [str(p) for p in emit_report(report, battery.formats, output_dir)]
    except AitrandError as e:
        logger.error(f"MCP analyze_battery failed: {e}")
        return _failure(e)

    logger.info(f"MCP battery complete: {len(report.groups)} groups, tests {', '.join(report.tests)}")
    return {"report": report.model_dump(mode="json"), "files": files, "success": True}


@mcp.tool()
async def list_carmichael(bound: int) -> Dict[str, Any]:
    """
    List all Carmichael numbers up to a bound.

    Args:
        bound: inclusive upper bound (limited by AITRAND_CARMICHAEL_MAX_BOUND)

    Returns:
        Dictionary with the bound, the count and the numbers in ascending order
    """
    try:
        cs = await run_in_threadpool(number_theory.enumerate_carmichael, bound)
    except AitrandError as e:
        return _failure(e, bound=bound)
    return {"bound": cs.bound, "count": len(cs), "numbers": list(cs.numbers), "success": True}


if __name__ == "__main__":
    setup_logging(get_settings().log_level)
    logger.info("Starting aitrand MCP server")
    logger.info("Available tools: run_test, analyze_battery, list_carmichael")
    logger.info("Available resources: aitrand://tests")
    mcp.run()

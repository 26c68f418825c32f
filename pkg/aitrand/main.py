import json
from functools import lru_cache
from typing import Literal

from fastapi import FastAPI, HTTPException, Query, Request, WebSocket, WebSocketDisconnect
from starlette.concurrency import run_in_threadpool

from aitrand import __version__
from aitrand.core.config import get_settings
from aitrand.core.exceptions import AitrandError, DataError
from aitrand.core.logging import get_logger, setup_logging
from aitrand.models.requests import BatteryConfig, TestParameters
from aitrand.orchestrator import BatteryOrchestrator, run_single_test
from aitrand.services import number_theory
from aitrand.services.bitstream import from_packed_bytes
from aitrand.utils.hashing import hash_bytes
from aitrand.utils.test_names import SUPPORTED_TESTS, is_supported_test, normalize_test_name

setup_logging(get_settings().log_level)
logger = get_logger("API")

app = FastAPI(title="aitrand", version=__version__)


@lru_cache(maxsize=4)
def _carmichael(bound: int) -> number_theory.CarmichaelSet:
    return number_theory.enumerate_carmichael(bound)


def _http_error(e: AitrandError) -> HTTPException:
    status = 422 if isinstance(e, DataError) else 400
    return HTTPException(status_code=status, detail={"error": type(e).__name__, "message": str(e)})


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__, "tests": list(SUPPORTED_TESTS)}


@app.post("/tests/{test_name}")
async def run_test(
    test_name: str,
    request: Request,
    bits: int | None = Query(default=None, ge=1),
    bit_order: Literal["msb", "lsb"] = "msb",
    window: int = Query(default=4096, ge=2),
    t: int = Query(default=4096, ge=1),
    m_limit: int | None = Query(default=None, ge=1),
    carmichael_bound: int = Query(default=10**7, ge=3),
):
    """Run one test on the raw packed bytes sent as the request body."""
    if not is_supported_test(test_name):
        raise HTTPException(status_code=404, detail=f"unknown test {test_name!r}")
    name = normalize_test_name(test_name)
    body = await request.body()
    parameters = TestParameters(
        entropy_window=window, entropy_t=t, carmichael_bound=carmichael_bound, borel_m_limit=m_limit
    )
    try:
        x = from_packed_bytes(body, 8 * len(body) if bits is None else bits, bit_order)
        carmichael = await run_in_threadpool(_carmichael, carmichael_bound) if name == "ss_carmichael" else None
        outcome = await run_in_threadpool(run_single_test, name, x, parameters, carmichael)
    except AitrandError as e:
        raise _http_error(e) from e
    return {
        "test": name,
        "bit_len": x.bit_len,
        "sha256": hash_bytes(body),
        "outcome": outcome.model_dump(mode="json"),
    }


@app.websocket("/ws/analyze")
async def analyze_ws(websocket: WebSocket):
    await websocket.accept()
    try:
        # Single message: the battery config
        payload = json.loads(await websocket.receive_text())
        config = BatteryConfig.parse(payload)

        async def progress_callback(progress: int):
            await websocket.send_json({"type": "progress", "value": progress})

        report = await BatteryOrchestrator().run(config, progress_callback)
        await websocket.send_json({"type": "report", "report": report.model_dump(mode="json")})
    except WebSocketDisconnect:
        logger.info("client disconnected")
    except json.JSONDecodeError as e:
        await websocket.send_json({"type": "error", "error": "ConfigError", "message": f"invalid JSON: {e}"})
    except AitrandError as e:
        logger.error(f"analysis failed: {e}")
        await websocket.send_json({"type": "error", "error": type(e).__name__, "message": str(e)})

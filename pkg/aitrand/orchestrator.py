import asyncio
from concurrent.futures import Executor, ProcessPoolExecutor
from datetime import datetime, timezone
from typing import Awaitable, Callable

from pydantic import BaseModel

from aitrand import __version__
from aitrand.core.config import get_settings
from aitrand.core.exceptions import AitrandError, ConfigError, ParameterError
from aitrand.core.logging import get_logger
from aitrand.models.requests import BatteryConfig, SourceDescriptor, TestParameters
from aitrand.models.responses import BatteryReport, MetricSection, StringFailure, TestOutcome
from aitrand.services import ait_tests, number_theory, stats
from aitrand.services.bitstream import BitString
from aitrand.services.comparison import compare_sources
from aitrand.services.number_theory import CarmichaelSet
from aitrand.services.sources import build_source
from aitrand.utils.hashing import hash_file
from aitrand.utils.test_names import normalize_test_name
from aitrand.utils.tracing import generate_trace_id, timed

logger = get_logger("BatteryOrchestrator")

# scalar metric collected per string for each test
METRICS = {
    "book_stack": "ones_after",
    "borel": "aggregate_metric",
    "ss_carmichael": "bits_consumed",
    "entropy": "h_hat",
    "walk": "range",
}

ProgressCallback = Callable[[int], Awaitable[None]]


def load_carmichael_set(parameters: TestParameters) -> CarmichaelSet:
    if parameters.carmichael_list:
        return number_theory.load_carmichael_file(parameters.carmichael_list)
    return number_theory.enumerate_carmichael(parameters.carmichael_bound)


def run_single_test(
    name: str,
    x: BitString,
    parameters: TestParameters | None = None,
    carmichael: CarmichaelSet | None = None,
) -> BaseModel:
    """Run one named test on one string and return its outcome model."""
    parameters = parameters or TestParameters()
    test = normalize_test_name(name)
    if test == "book_stack":
        return ait_tests.book_stack_metric(x)
    if test == "borel":
        return ait_tests.borel_normality(x, parameters.borel_m_limit)
    if test == "entropy":
        return ait_tests.entropy_sliding(x, parameters.entropy_window, parameters.entropy_t)
    if test == "walk":
        return ait_tests.random_walk_range(x)
    if test == "ss_carmichael":
        return number_theory.ss_carmichael_metric(x, carmichael or load_carmichael_set(parameters))
    raise ParameterError(f"unknown test {name!r}")


def _evaluate_string(
    descriptor: SourceDescriptor,
    tests: list[str],
    parameters: TestParameters,
    carmichael: CarmichaelSet | None,
) -> tuple[int | None, list[TestOutcome]]:
    """Materialize one source string and run every selected test on it."""
    try:
        x = build_source(descriptor)
    except AitrandError as e:
        return None, [TestOutcome(test=t, error=type(e).__name__, message=str(e)) for t in tests]

    outcomes = []
    for test in tests:
        try:
            outcome = run_single_test(test, x, parameters, carmichael)
        except AitrandError as e:
            outcomes.append(TestOutcome(test=test, error=type(e).__name__, message=str(e)))
            continue
        outcomes.append(
            TestOutcome(
                test=test,
                metric=float(getattr(outcome, METRICS[test])),
                outcome=outcome.model_dump(exclude={"match_lengths"}),
            )
        )
    return x.bit_len, outcomes


class BatteryOrchestrator:
    def __init__(self, max_concurrency: int | None = None):
        self.jobs = max(1, max_concurrency or get_settings().jobs)
        # Bounds how many strings are in flight at once
        self.semaphore = asyncio.Semaphore(self.jobs)

        self._completed = 0
        self._total = 0
        self._progress_lock = asyncio.Lock()

    async def run(
        self,
        config: BatteryConfig,
        progress_callback: ProgressCallback | None = None,
    ) -> BatteryReport:
        trace = generate_trace_id()
        strings = [
            (group.name, index, descriptor)
            for group in config.sources
            for index, descriptor in enumerate(group.strings)
        ]
        self._completed = 0
        self._total = len(strings)
        logger.info(
            f"[{trace}] battery: {len(config.sources)} groups, {len(strings)} strings, "
            f"tests {', '.join(config.tests)}, jobs {self.jobs}"
        )

        carmichael = None
        if "ss_carmichael" in config.tests:
            with timed(logger, f"[{trace}] Carmichael set preparation"):
                carmichael = load_carmichael_set(config.parameters)
            if len(carmichael) == 0:
                raise ConfigError("the Carmichael set is empty; raise carmichael_bound above 560")

        executor: Executor | None = ProcessPoolExecutor(max_workers=self.jobs) if self.jobs > 1 else None
        try:
            with timed(logger, f"[{trace}] battery evaluation"):
                results = await asyncio.gather(
                    *[
                        self._run_string(executor, descriptor, config, carmichael, progress_callback)
                        for _, _, descriptor in strings
                    ]
                )
        finally:
            if executor is not None:
                executor.shutdown()

        report = self._assemble(config, strings, results, carmichael)
        if progress_callback:
            await progress_callback(100)
        return report

    async def _run_string(
        self,
        executor: Executor | None,
        descriptor: SourceDescriptor,
        config: BatteryConfig,
        carmichael: CarmichaelSet | None,
        progress_callback: ProgressCallback | None,
    ) -> tuple[int | None, list[TestOutcome]]:
        loop = asyncio.get_running_loop()
        async with self.semaphore:
            result = await loop.run_in_executor(
                executor, _evaluate_string, descriptor, config.tests, config.parameters, carmichael
            )

        async with self._progress_lock:
            self._completed += 1
            if progress_callback:
                await progress_callback(int(99 * self._completed / self._total))
        return result

    def _assemble(
        self,
        config: BatteryConfig,
        strings: list[tuple[str, int, SourceDescriptor]],
        results: list[tuple[int | None, list[TestOutcome]]],
        carmichael: CarmichaelSet | None,
    ) -> BatteryReport:
        group_names = [g.name for g in config.sources]
        sections: dict[str, MetricSection] = {}
        for position, test in enumerate(config.tests):
            values: dict[str, list[float | None]] = {name: [] for name in group_names}
            failures: list[StringFailure] = []
            for (group, index, _), (_, outcomes) in zip(strings, results):
                outcome = outcomes[position]
                values[group].append(outcome.metric)
                if outcome.error:
                    failures.append(
                        StringFailure(group=group, index=index, error=outcome.error, message=outcome.message or "")
                    )

            warnings: list[str] = []
            summaries = {}
            usable: dict[str, list[float]] = {}
            for group, vector in values.items():
                kept = [v for v in vector if v is not None]
                usable[group] = kept
                if len(kept) >= 2:
                    summaries[group] = stats.five_number_summary(kept)
                else:
                    summaries[group] = None
                    warnings.append(
                        f"group {group!r} has {len(kept)} usable strings for {test}; statistics skipped"
                    )
            for w in warnings:
                logger.warning(w)

            sections[test] = MetricSection(
                test=test,
                metric=METRICS[test],
                values=values,
                summaries=summaries,
                comparison=compare_sources(usable, config.significance),
                failures=failures,
                warnings=warnings,
            )

        return BatteryReport(
            version=__version__,
            generated_at=datetime.now(timezone.utc).isoformat(),
            significance=config.significance,
            groups=group_names,
            tests=sections,
            provenance=self._provenance(config, strings, results, carmichael),
        )

    def _provenance(
        self,
        config: BatteryConfig,
        strings: list[tuple[str, int, SourceDescriptor]],
        results: list[tuple[int | None, list[TestOutcome]]],
        carmichael: CarmichaelSet | None,
    ) -> dict:
        settings = get_settings()
        digests = {}
        for _, _, descriptor in strings:
            if descriptor.kind == "file" and descriptor.path not in digests:
                try:
                    digests[descriptor.path] = hash_file(descriptor.path)
                except OSError:
                    digests[descriptor.path] = None

        bit_lengths: dict[str, list[int | None]] = {g.name: [] for g in config.sources}
        long_runs = []
        for (group, index, descriptor), (bit_len, _) in zip(strings, results):
            bit_lengths[group].append(bit_len)
            if bit_len is not None and bit_len > settings.long_run_bits:
                long_runs.append(f"{group}[{index}] {descriptor.label()}")

        p = config.parameters
        return {
            "config": config.model_dump(mode="json"),
            "decisions": {
                "bit_order": "MSB-first within bytes",
                "metrics": METRICS,
                "borel_m_max": "min(floor(log2 log2 |x|), m_limit or 5, 16), at least 1",
                "borel_threshold": "sqrt(log2 |x| / |x|)",
                "borel_aggregate_metric": "max over m, j of |N_j^m - |x|_m 2^-m|",
                "entropy_window": p.entropy_window,
                "entropy_t": p.entropy_t,
                "entropy_cap": ait_tests.entropy_cap(p.entropy_window),
                "entropy_positions": "evenly spaced in [window, bit_len - cap]",
                "entropy_clamp": "[0, 1]",
                "witness_encoding": number_theory.WITNESS_ENCODING,
                "witness_range": "[2, n-2]",
                "carmichael_source": p.carmichael_list or f"enumerated up to {p.carmichael_bound}",
                "carmichael_count": len(carmichael) if carmichael is not None else None,
                "quartile_convention": stats.QUARTILE_CONVENTION,
                "ks_exact_max_product": stats.KS_EXACT_MAX_PRODUCT,
                "shapiro_wilk": "AS R94 approximation",
                "significance": config.significance,
            },
            "file_digests": digests,
            "bit_lengths": bit_lengths,
            "long_run_bits": settings.long_run_bits,
            "long_runs": long_runs,
        }


def run_battery(
    config: BatteryConfig,
    jobs: int | None = None,
    progress_callback: ProgressCallback | None = None,
) -> BatteryReport:
    return asyncio.run(BatteryOrchestrator(jobs).run(config, progress_callback))

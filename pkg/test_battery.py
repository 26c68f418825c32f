import asyncio
import csv
import json
import time
from math import comb

import pytest

from aitrand.core.exceptions import ConfigError, SourceIOError
from aitrand.models.requests import BatteryConfig
from aitrand.models.responses import BatteryReport
from aitrand.orchestrator import BatteryOrchestrator, run_battery
from aitrand.services.comparison import compare_sources
from aitrand.services.report_writer import emit_report


def prng_vs_biased(bit_len=1 << 20, count=10, tests=("borel", "walk"), **extra) -> BatteryConfig:
    return BatteryConfig.parse(
        {
            "sources": [
                {"name": "prng", "template": {"kind": "prng", "seed": 1, "bit_len": bit_len}, "count": count},
                {
                    "name": "biased",
                    "template": {"kind": "biased", "seed": 1, "bias_p": 0.6, "bit_len": bit_len},
                    "count": count,
                },
            ],
            "tests": list(tests),
            **extra,
        }
    )


def without_timestamp(report: BatteryReport) -> str:
    return report.model_dump_json(exclude={"generated_at"})


# configuration


def test_config_rejects_empty_group():
    with pytest.raises(ConfigError):
        BatteryConfig.parse({"sources": [{"name": "g"}]})


def test_config_rejects_unknown_test():
    with pytest.raises(ConfigError):
        prng_vs_biased(tests=["borel", "diehard"])


def test_config_normalizes_test_names():
    config = prng_vs_biased(bit_len=64, tests=["Book-Stack", "ss", "random_walk", "borel", "book_stack"])
    assert config.tests == ["book_stack", "ss_carmichael", "walk", "borel"]


def test_config_rejects_duplicate_names():
    group = {"name": "g", "strings": [{"kind": "champernowne", "bit_len": 64}]}
    with pytest.raises(ConfigError):
        BatteryConfig.parse({"sources": [group, group]})


def test_config_rejects_output_over_input(tmp_path):
    data = tmp_path / "raw.bin"
    payload = {
        "sources": [{"name": "f", "strings": [{"kind": "file", "path": str(data)}]}],
        "output": str(data),
    }
    with pytest.raises(ConfigError):
        BatteryConfig.parse(payload)


def test_config_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        BatteryConfig.load(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        BatteryConfig.load(broken)


def test_config_schema_lists_sources():
    schema = BatteryConfig.model_json_schema()
    assert "sources" in schema["properties"]
    assert "sources" in schema["required"]


# comparison


def test_identical_vectors_are_not_significant():
    values = [float(v) for v in range(1, 11)]
    result = compare_sources({"a": values, "b": values, "c": values})
    assert len(result.ks) == 3
    assert all(cell.result.p_value == 1.0 for cell in result.ks)
    assert not any(cell.result.significant for cell in result.ks)
    assert result.welch is not None
    assert all(cell.result.p_value == pytest.approx(1.0) for cell in result.welch)


def test_separated_vectors_are_significant():
    result = compare_sources({"low": list(range(1, 11)), "high": list(range(101, 111))})
    (cell,) = result.ks
    assert (cell.source_a, cell.source_b) == ("low", "high")
    assert cell.result.method == "ks_exact"
    assert cell.result.p_value == pytest.approx(2 / comb(20, 10), rel=1e-12)
    assert cell.result.significant


def test_zero_variance_group_suppresses_welch():
    result = compare_sources({"flat": [5.0] * 10, "spread": list(range(10))})
    assert result.shapiro_wilk["flat"] is None
    assert result.welch is None
    assert any("Welch" in w for w in result.warnings)
    assert len(result.ks) == 1


def test_short_groups_are_excluded():
    result = compare_sources({"one": [1.0], "a": [1.0, 2.0, 3.0], "b": [4.0, 5.0, 7.0]})
    assert result.excluded == ["one"]
    assert result.groups == ["a", "b"]
    assert [(c.source_a, c.source_b) for c in result.ks] == [("a", "b")]


def test_single_group_has_empty_matrices():
    result = compare_sources({"only": [1.0, 2.0, 4.0, 8.0]})
    assert result.ks == []
    assert result.welch == []
    assert result.warnings


# orchestration


def test_battery_separates_biased_source():
    report = run_battery(prng_vs_biased())
    borel = report.tests["borel"]
    assert borel.metric == "aggregate_metric"
    assert len(borel.values["biased"]) == 10
    assert not borel.failures
    (ks,) = borel.comparison.ks
    assert ks.result.p_value < 0.05
    assert "walk" in report.tests
    assert report.tests["walk"].comparison.ks[0].result.p_value <= 1.0


def test_full_scale_battery_within_two_minutes(tmp_path):
    tests = ("borel", "book_stack", "walk", "entropy")
    config = prng_vs_biased(tests=tests)
    start = time.perf_counter()
    report = run_battery(config)
    written = emit_report(report, ["json", "csv"], tmp_path / "out")
    elapsed = time.perf_counter() - start
    assert elapsed < 120
    assert set(report.tests) == set(tests)
    for name in tests:
        section = report.tests[name]
        assert not section.failures
        assert all(len(section.values[g]) == 10 for g in ("prng", "biased"))
        assert tmp_path / "out" / f"{name}_summary.csv" in written
        assert tmp_path / "out" / f"{name}_ks.csv" in written
    assert tmp_path / "out" / "report.json" in written
    assert report.tests["borel"].comparison.ks[0].result.p_value < 0.05
    assert report.provenance["bit_lengths"]["prng"] == [1 << 20] * 10


def test_biased_strings_fail_borel_individually():
    config = prng_vs_biased(count=3, tests=["borel"])
    orchestrator = BatteryOrchestrator(1)
    report = asyncio.run(orchestrator.run(config))
    for value in report.tests["borel"].values["biased"]:
        assert value > 0.05 * (1 << 20)


def test_battery_is_deterministic():
    config = prng_vs_biased(bit_len=1 << 14, count=4, tests=["borel", "book_stack", "walk", "entropy"],
                            parameters={"entropy_window": 256, "entropy_t": 256})
    first = run_battery(config)
    second = run_battery(config)
    assert without_timestamp(first) == without_timestamp(second)


def test_parallel_run_matches_sequential():
    config = prng_vs_biased(bit_len=1 << 14, count=4, tests=["borel", "walk"])
    assert without_timestamp(run_battery(config, jobs=2)) == without_timestamp(run_battery(config, jobs=1))


def test_failed_strings_are_recorded(tmp_path):
    good = tmp_path / "good.bin"
    good.write_bytes(bytes(range(256)) * 4)
    config = BatteryConfig.parse(
        {
            "sources": [
                {"name": "prng", "template": {"kind": "prng", "seed": 3, "bit_len": 8192}, "count": 3},
                {
                    "name": "files",
                    "strings": [
                        {"kind": "file", "path": str(good)},
                        {"kind": "file", "path": str(tmp_path / "missing.bin")},
                    ],
                },
            ],
            "tests": ["walk"],
        }
    )
    report = run_battery(config)
    walk = report.tests["walk"]
    assert walk.values["files"][1] is None
    (failure,) = walk.failures
    assert (failure.group, failure.index, failure.error) == ("files", 1, "SourceIOError")
    assert walk.summaries["files"] is None
    assert walk.summaries["prng"] is not None
    assert any("files" in w for w in walk.warnings)
    assert walk.comparison.excluded == ["files"]
    assert report.provenance["file_digests"][str(tmp_path / "missing.bin")] is None
    assert report.provenance["file_digests"][str(good)]


def test_single_group_report():
    config = BatteryConfig.parse(
        {"sources": [{"name": "only", "template": {"kind": "prng", "seed": 5, "bit_len": 4096}, "count": 3}],
         "tests": ["walk", "book_stack"]}
    )
    report = run_battery(config)
    for section in report.tests.values():
        assert section.summaries["only"] is not None
        assert section.comparison.ks == []
        assert section.comparison.welch == []


def test_ss_carmichael_in_battery():
    config = prng_vs_biased(bit_len=1 << 16, count=3, tests=["ss_carmichael"],
                            parameters={"carmichael_bound": 10**4})
    report = run_battery(config)
    section = report.tests["ss_carmichael"]
    assert section.metric == "bits_consumed"
    assert all(v is not None and v > 0 for v in section.values["prng"])
    assert report.provenance["decisions"]["carmichael_count"] == 7


def test_empty_carmichael_set_is_a_config_error():
    config = prng_vs_biased(bit_len=1 << 12, count=2, tests=["ss_carmichael"],
                            parameters={"carmichael_bound": 500})
    with pytest.raises(ConfigError):
        run_battery(config)


def test_provenance_records_decisions():
    config = prng_vs_biased(bit_len=1 << 13, count=2, tests=["entropy"],
                            parameters={"entropy_window": 128, "entropy_t": 64})
    report = run_battery(config)
    decisions = report.provenance["decisions"]
    assert decisions["entropy_window"] == 128
    assert decisions["entropy_t"] == 64
    assert decisions["entropy_cap"] == 14
    assert decisions["significance"] == 0.05
    assert "ceil(log2(n-3))" in decisions["witness_encoding"]
    assert "linear" in decisions["quartile_convention"]
    assert report.provenance["config"]["sources"][0]["strings"][1]["seed"] == 2
    assert report.provenance["bit_lengths"]["prng"] == [1 << 13, 1 << 13]


def test_progress_reaches_completion():
    seen = []

    async def progress(value):
        seen.append(value)

    config = prng_vs_biased(bit_len=1 << 12, count=3, tests=["walk"])
    asyncio.run(BatteryOrchestrator(2).run(config, progress))
    assert seen[-1] == 100
    assert seen == sorted(seen)
    assert len(seen) == 7


# report files


@pytest.fixture(scope="module")
def small_report() -> BatteryReport:
    config = prng_vs_biased(bit_len=1 << 14, count=5, tests=["borel", "walk"])
    return run_battery(config)


def test_json_round_trip(tmp_path, small_report):
    files = emit_report(small_report, "json", tmp_path)
    assert [f.name for f in files] == ["report.json"]
    parsed = BatteryReport.model_validate_json(files[0].read_text())
    assert parsed == small_report


def test_json_floats_use_17_significant_digits(tmp_path, small_report):
    text = emit_report(small_report, "json", tmp_path)[0].read_text()
    literals: list[str] = []
    json.loads(text, parse_float=lambda s: literals.append(s) or float(s))
    assert '"significance": 0.050000000000000003' in text
    assert literals
    for literal in literals:
        value = float(literal)
        assert literal in (f"{value:.17g}", f"{value:.17g}.0")


def test_summary_csv_shape(tmp_path, small_report):
    emit_report(small_report, ["csv"], tmp_path)
    lines = (tmp_path / "borel_summary.csv").read_text().splitlines()
    assert lines[0] == "source,min,q1,median,q3,max,mean,sd"
    assert len(lines) == 1 + len(small_report.groups)
    assert (tmp_path / "walk_ks.csv").exists()
    assert (tmp_path / "walk_shapiro.csv").exists()


def test_boxplot_csv_is_exact(tmp_path, small_report):
    emit_report(small_report, ["json", "csv"], tmp_path)
    data = json.loads((tmp_path / "report.json").read_text())
    for test in ("borel", "walk"):
        with (tmp_path / f"{test}_boxplot.csv").open() as f:
            for row in csv.DictReader(f):
                summary = data["tests"][test]["summaries"][row["source"]]
                for column in ("min", "q1", "median", "q3", "max", "mean", "sd"):
                    assert float(row[column]) == summary[column]


def test_summary_csv_numbers_appear_in_json(tmp_path, small_report):
    emit_report(small_report, ["csv"], tmp_path)
    with (tmp_path / "walk_summary.csv").open() as f:
        for row in csv.DictReader(f):
            summary = small_report.tests["walk"].summaries[row["source"]]
            assert float(row["median"]) == pytest.approx(summary.median, rel=1e-5)


def test_welch_file_only_when_computed(tmp_path, small_report):
    emit_report(small_report, ["csv"], tmp_path)
    for test, section in small_report.tests.items():
        assert (tmp_path / f"{test}_welch.csv").exists() == (section.comparison.welch is not None)


def test_unwritable_output(tmp_path, small_report):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(SourceIOError):
        emit_report(small_report, ["json"], blocker / "out")

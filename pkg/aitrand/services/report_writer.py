import csv
import json
from abc import ABC, abstractmethod
from pathlib import Path

from aitrand.core.exceptions import ParameterError, SourceIOError
from aitrand.core.logging import get_logger
from aitrand.models.responses import BatteryReport, PairwiseCell

logger = get_logger("ReportWriter")

SUMMARY_COLUMNS = ["source", "min", "q1", "median", "q3", "max", "mean", "sd"]


def _g6(value: float) -> str:
    return f"{value:.6g}"


def _g17(value: float) -> str:
    text = f"{value:.17g}"
    return text if any(c in text for c in ".en") else text + ".0"


def _dumps17(value, level: int = 0) -> str:
    """Indented JSON text with every float written at 17 significant digits."""
    if isinstance(value, float):
        return _g17(value)
    inner = "  " * (level + 1)
    if isinstance(value, dict) and value:
        items = [f"{inner}{json.dumps(str(k))}: {_dumps17(v, level + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * level + "}"
    if isinstance(value, list) and value:
        items = [inner + _dumps17(v, level + 1) for v in value]
        return "[\n" + ",\n".join(items) + "\n" + "  " * level + "]"
    return json.dumps(value)


class Writer(ABC):
    @abstractmethod
    def write(self, report: BatteryReport, out_dir: Path) -> list[Path]:
        pass


class JsonWriter(Writer):
    def write(self, report: BatteryReport, out_dir: Path) -> list[Path]:
        path = out_dir / "report.json"
        path.write_text(_dumps17(report.model_dump(mode="json")) + "\n", encoding="utf-8")
        return [path]


class CsvWriter(Writer):
    """
    Table-shaped CSVs, one set per test:

      <test>_summary.csv   five-number summary per group, 6 significant digits
      <test>_boxplot.csv   the same summary at full precision
      <test>_ks.csv        pairwise two-sample KS p-values
      <test>_shapiro.csv   per-group Shapiro-Wilk results
      <test>_welch.csv     pairwise Welch t results, only when they were run
    """

    def write(self, report: BatteryReport, out_dir: Path) -> list[Path]:
        written = []
        for test, section in report.tests.items():
            summary_rows, boxplot_rows = [], []
            for group, s in section.summaries.items():
                if s is None:
                    continue
                numbers = [s.min, s.q1, s.median, s.q3, s.max, s.mean, s.sd]
                summary_rows.append([group, *map(_g6, numbers)])
                boxplot_rows.append([group, *map(repr, numbers)])

            written.append(self._table(out_dir / f"{test}_summary.csv", SUMMARY_COLUMNS, summary_rows))
            written.append(self._table(out_dir / f"{test}_boxplot.csv", SUMMARY_COLUMNS, boxplot_rows))

            comparison = section.comparison
            written.append(self._pairwise(out_dir / f"{test}_ks.csv", comparison.ks))
            written.append(
                self._table(
                    out_dir / f"{test}_shapiro.csv",
                    ["source", "w", "p_value", "significant"],
                    [
                        [group, _g6(r.statistic), _g6(r.p_value), str(r.significant).lower()]
                        for group, r in comparison.shapiro_wilk.items()
                        if r is not None
                    ],
                )
            )
            if comparison.welch is not None:
                written.append(self._pairwise(out_dir / f"{test}_welch.csv", comparison.welch))
        return written

    def _pairwise(self, path: Path, cells: list[PairwiseCell]) -> Path:
        rows = [
            [
                c.source_a,
                c.source_b,
                c.result.method,
                _g6(c.result.statistic),
                _g6(c.result.p_value),
                "" if c.result.df is None else _g6(c.result.df),
                str(c.result.significant).lower(),
                str(c.result.ties).lower(),
            ]
            for c in cells
        ]
        header = ["source_a", "source_b", "method", "statistic", "p_value", "df", "significant", "ties"]
        return self._table(path, header, rows)

    @staticmethod
    def _table(path: Path, header: list[str], rows: list[list[str]]) -> Path:
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        return path


class WriterFactory:
    @staticmethod
    def get_writer(output_format: str) -> Writer:
        fmt = output_format.lower()
        if fmt == "json":
            return JsonWriter()
        if fmt == "csv":
            return CsvWriter()
        raise ParameterError(f"unsupported report format {output_format!r}")


def emit_report(report: BatteryReport, formats: list[str] | str, out_dir: str | Path) -> list[Path]:
    """Write the report in each requested format under out_dir; returns the files written."""
    if isinstance(formats, str):
        formats = [formats]
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for fmt in formats:
            written.extend(WriterFactory.get_writer(fmt).write(report, out))
    except OSError as e:
        raise SourceIOError(f"cannot write report to {out}: {e}") from e
    logger.info(f"wrote {len(written)} report files to {out}")
    return written

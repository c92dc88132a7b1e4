"""Comparison tables: an aligned text table and a tab-separated file."""

from pathlib import Path

from ..errors import ValidationError
from ..models import Metrics, MetricsReport, SystemResult

COLUMNS = ("System", "Accuracy", "Precision", "Recall", "F1-score", "Time")

DISPLAY_NAMES = {
    "mnb": "MNB",
    "bow_svm": "BoW+SVM",
    "nbsvm": "NBSVM",
    "textcnn": "TextCNN",
    "tbcnn": "TB-CNN",
}


def _cells(result: SystemResult) -> list[str]:
    m = result.metrics
    return [
        DISPLAY_NAMES.get(result.system, result.system),
        f"{m.accuracy:.2f}",
        f"{m.precision:.2f}",
        f"{m.recall:.2f}",
        f"{m.f1:.2f}",
        f"{result.seconds:.1f}",
    ]


def format_table(report: MetricsReport) -> str:
    rows = [list(COLUMNS)] + [_cells(result) for result in report.results]
    widths = [max(len(row[i]) for row in rows) for i in range(len(COLUMNS))]
    lines = []
    for row in rows:
        first = row[0].ljust(widths[0])
        rest = [cell.rjust(width) for cell, width in zip(row[1:], widths[1:])]
        lines.append("  ".join([first, *rest]))
    return "\n".join(lines) + "\n"


def emit_report(report: MetricsReport, path: Path, stem: str = "report") -> tuple[Path, Path]:
    """Write ``<stem>.txt`` and ``<stem>.tsv`` into the directory ``path``."""
    if not report.results:
        raise ValidationError("report has no systems", field="report")
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    text_path = directory / f"{stem}.txt"
    tsv_path = directory / f"{stem}.tsv"
    text_path.write_text(format_table(report), encoding="utf-8")

    lines = ["system\taccuracy\tprecision\trecall\tf1\tseconds"]
    for result in report.results:
        m = result.metrics
        lines.append(
            "\t".join(
                [result.system]
                + [repr(float(v)) for v in (m.accuracy, m.precision, m.recall, m.f1, result.seconds)]
            )
        )
    tsv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return text_path, tsv_path


def read_report_tsv(path: Path) -> MetricsReport:
    report = MetricsReport()
    with open(path, encoding="utf-8") as handle:
        next(handle)
        for line in handle:
            if not line.strip():
                continue
            system, accuracy, precision, recall, f1, seconds = line.rstrip("\n").split("\t")
            report.results.append(
                SystemResult(
                    system=system,
                    metrics=Metrics(float(accuracy), float(precision), float(recall), float(f1)),
                    seconds=float(seconds),
                )
            )
    return report

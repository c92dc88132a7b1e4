"""Tests for report tables and the artifact store."""

import pytest

from tbcnn.errors import DatasetError, ValidationError
from tbcnn.harness.artifacts import ArtifactStore
from tbcnn.harness.report import emit_report, format_table, read_report_tsv
from tbcnn.models import Metrics, MetricsReport, SystemResult


def result(system: str, accuracy: float, seconds: float = 1.5) -> SystemResult:
    return SystemResult(
        system=system,
        metrics=Metrics(accuracy=accuracy, precision=90.125, recall=88.0, f1=89.05),
        seconds=seconds,
    )


class TestFormatTable:
    """Tests for the aligned text table."""

    def test_single_system(self):
        """Test that one system gives a header and one row."""
        text = format_table(MetricsReport(results=[result("mnb", 86.59)]))
        lines = text.splitlines()
        assert len(lines) == 2
        assert lines[0].split() == ["System", "Accuracy", "Precision", "Recall", "F1-score", "Time"]
        assert lines[1].split() == ["MNB", "86.59", "90.12", "88.00", "89.05", "1.5"]

    def test_display_names_and_order(self):
        """Test that systems keep config order and use display names."""
        report = MetricsReport(
            results=[result(s, 80.0) for s in ("mnb", "bow_svm", "nbsvm", "textcnn", "tbcnn")]
        )
        names = [line.split()[0] for line in format_table(report).splitlines()[1:]]
        assert names == ["MNB", "BoW+SVM", "NBSVM", "TextCNN", "TB-CNN"]

    def test_columns_aligned(self):
        """Test that every line has the same width."""
        report = MetricsReport(results=[result("mnb", 86.59), result("tbcnn", 100.0, 1234.5)])
        assert len({len(line) for line in format_table(report).splitlines()}) == 1


class TestEmitReport:
    """Tests for report files."""

    def test_round_trip(self, tmp_path):
        """Test that the delimited file reparses to the same values."""
        report = MetricsReport(results=[result("nbsvm", 91.22, 0.1 + 0.2), result("mnb", 86.59)])
        text_path, tsv_path = emit_report(report, tmp_path / "out")
        assert text_path.read_text(encoding="utf-8") == format_table(report)
        assert tsv_path.read_text(encoding="utf-8").splitlines()[0] == (
            "system\taccuracy\tprecision\trecall\tf1\tseconds"
        )
        parsed = read_report_tsv(tsv_path)
        assert parsed.systems == ["nbsvm", "mnb"]
        for original, loaded in zip(report.results, parsed.results):
            assert loaded.metrics == original.metrics
            assert loaded.seconds == original.seconds

    def test_empty_report(self, tmp_path):
        """Test that an empty report is rejected."""
        with pytest.raises(ValidationError):
            emit_report(MetricsReport(), tmp_path)

    def test_get(self):
        """Test looking up a system's row."""
        report = MetricsReport(results=[result("mnb", 86.59)])
        assert report.get("mnb").metrics.accuracy == 86.59
        with pytest.raises(KeyError):
            report.get("tbcnn")


class TestArtifactStore:
    """Tests for ArtifactStore."""

    def test_layout(self, tmp_path):
        """Test the file names of a run."""
        store = ArtifactStore(tmp_path).ensure()
        assert (tmp_path / "models").is_dir()
        assert (tmp_path / "metrics").is_dir()
        assert store.model("nbsvm") == tmp_path / "models" / "nbsvm.npz"
        assert store.training_log("tbcnn") == tmp_path / "training_log.tsv"
        assert store.training_log("textcnn") == tmp_path / "training_log_textcnn.tsv"
        assert store.metrics("mnb") == tmp_path / "metrics" / "mnb.json"

    def test_result_round_trip(self, tmp_path):
        """Test that metric records reload with warnings and details."""
        store = ArtifactStore(tmp_path).ensure()
        original = SystemResult(
            system="mnb",
            metrics=Metrics(50.0, 0.0, 0.0, 0.0, warnings=("precision: zero denominator",)),
            seconds=2.25,
            details={"vocab": 10},
        )
        store.write_result(original)
        assert store.read_result("mnb") == original

    def test_fit_seconds(self, tmp_path):
        """Test the timing record."""
        store = ArtifactStore(tmp_path).ensure()
        store.write_fit_seconds("tbcnn", 12.5, {"topics": 2})
        assert store.read_fit_seconds("tbcnn") == (12.5, {"topics": 2})

    def test_stale_marker(self, tmp_path):
        """Test marking and clearing a failed stage."""
        store = ArtifactStore(tmp_path)
        assert store.stale_stage() is None
        store.mark_stale("lda", DatasetError("boom"))
        assert store.stale_stage() == "lda"
        assert "boom" in store.stale_marker.read_text(encoding="utf-8")
        store.clear_stale()
        assert store.stale_stage() is None

"""File layout of an experiment's output directory."""

import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Optional

from ..models import Metrics, SystemResult

logger = logging.getLogger(__name__)

STALE_MARKER = "STALE"


class ArtifactStore:
    """Owns every path written by a run; a ``STALE`` file names the stage that failed."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def ensure(self) -> "ArtifactStore":
        (self.root / "models").mkdir(parents=True, exist_ok=True)
        (self.root / "metrics").mkdir(parents=True, exist_ok=True)
        return self

    @property
    def vocab(self) -> Path:
        return self.root / "vocab.tsv"

    @property
    def corpus(self) -> Path:
        return self.root / "corpus.npz"

    @property
    def lda_model(self) -> Path:
        return self.root / "lda_model.npz"

    @property
    def lda_sweep(self) -> Path:
        return self.root / "lda_sweep.tsv"

    @property
    def topic_vectors(self) -> Path:
        return self.root / "topic_vectors.tsv"

    @property
    def report_txt(self) -> Path:
        return self.root / "report.txt"

    @property
    def report_tsv(self) -> Path:
        return self.root / "report.tsv"

    @property
    def region_sweep_tsv(self) -> Path:
        return self.root / "region_sweep.tsv"

    def region_run(self, region_sizes: tuple[int, ...]) -> "ArtifactStore":
        """Store for one region-size set of a sweep, kept apart from the main run."""
        return ArtifactStore(self.root / "region_sweep" / "-".join(str(h) for h in region_sizes))

    @property
    def stale_marker(self) -> Path:
        return self.root / STALE_MARKER

    def model(self, system: str) -> Path:
        return self.root / "models" / f"{system}.npz"

    def training_log(self, system: str) -> Path:
        if system == "tbcnn":
            return self.root / "training_log.tsv"
        return self.root / f"training_log_{system}.tsv"

    def metrics(self, system: str) -> Path:
        return self.root / "metrics" / f"{system}.json"

    def fit_timing(self, system: str) -> Path:
        return self.root / "models" / f"{system}.time.json"

    def write_fit_seconds(self, system: str, seconds: float, details: dict[str, Any]) -> None:
        record = {"system": system, "fit_seconds": seconds, "details": details}
        self.fit_timing(system).write_text(json.dumps(record, sort_keys=True) + "\n", "utf-8")

    def read_fit_seconds(self, system: str) -> tuple[float, dict[str, Any]]:
        record = json.loads(self.fit_timing(system).read_text(encoding="utf-8"))
        return float(record["fit_seconds"]), record.get("details", {})

    def mark_stale(self, stage: str, cause: BaseException) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        self.stale_marker.write_text(f"{stage}\t{cause}\n", encoding="utf-8")
        logger.warning("marked %s stale after stage '%s' failed", self.root, stage)

    def clear_stale(self) -> None:
        self.stale_marker.unlink(missing_ok=True)

    def stale_stage(self) -> Optional[str]:
        if not self.stale_marker.exists():
            return None
        return self.stale_marker.read_text(encoding="utf-8").split("\t", 1)[0]

    def write_result(self, result: SystemResult) -> Path:
        path = self.metrics(result.system)
        record: dict[str, Any] = {
            "system": result.system,
            "metrics": asdict(result.metrics),
            "seconds": result.seconds,
            "details": result.details,
        }
        path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def read_result(self, system: str) -> SystemResult:
        record = json.loads(self.metrics(system).read_text(encoding="utf-8"))
        metrics = record["metrics"]
        metrics["warnings"] = tuple(metrics.get("warnings", ()))
        return SystemResult(
            system=record["system"],
            metrics=Metrics(**metrics),
            seconds=float(record["seconds"]),
            details=record.get("details", {}),
        )

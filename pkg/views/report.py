# report.py
from typing import Optional, Sequence, Tuple

from rich.console import Console
from rich.table import Table

from models.evaluation import Comparison, EvalReport
from models.labeler import SIDE_ACTOR, Labeling


class ReportView:
    """Console tables for labelings, evaluation reports, segment sweeps and method comparisons."""

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()

    def show_labeling(self, labeling: Labeling) -> None:
        counts = {}
        for entry in labeling.entries.values():
            counts[entry.label] = counts.get(entry.label, 0) + 1
        table = Table(title=f"{labeling.variant}: {len(labeling.entries)} tracks in {labeling.runtime_seconds:.2f}s")
        table.add_column("Label")
        table.add_column("Tracks", justify="right")
        for label in sorted(counts, key=lambda name: (name == SIDE_ACTOR, name)):
            table.add_row(label, str(counts[label]))
        self.console.print(table)

    def show_report(self, report: EvalReport) -> None:
        title = f"{report.variant or 'Evaluation'}: accuracy {report.overall_accuracy:.3f} over {report.n_tracks} tracks"
        if report.empty:
            title += " (empty)"
        table = Table(title=title)
        table.add_column("Label")
        table.add_column("Tracks", justify="right")
        table.add_column("Share", justify="right")
        table.add_column("Recall", justify="right")
        for label in report.labels:
            score = report.per_actor[label]
            table.add_row(label, str(score.track_count), f"{score.share:.1%}", f"{score.recall:.3f}")
        self.console.print(table)
        self.show_confusion(report)

    def show_confusion(self, report: EvalReport) -> None:
        table = Table(title="Confusion (rows: truth, columns: predicted)")
        table.add_column("")
        for label in report.labels:
            table.add_column(label, justify="right")
        for label, row in zip(report.labels, report.confusion):
            table.add_row(label, *(str(int(v)) for v in row))
        self.console.print(table)

    def show_sweep(self, sweep: Sequence[Tuple[float, EvalReport]], fps: float) -> None:
        table = Table(title="Accuracy by video length")
        table.add_column("Length (min)", justify="right")
        table.add_column("Frames", justify="right")
        table.add_column("Tracks", justify="right")
        table.add_column("Accuracy", justify="right")
        table.add_column("Runtime (s)", justify="right")
        for length, report in sweep:
            accuracy = "-" if report.empty else f"{report.overall_accuracy:.3f}"
            table.add_row(f"{length / 60:.0f}", f"{length * fps:.0f}", str(report.n_tracks), accuracy,
                          f"{report.runtime_seconds or 0:.2f}")
        self.console.print(table)

    def show_comparison(self, comparison: Comparison) -> None:
        table = Table(title="Method comparison")
        table.add_column("Method")
        table.add_column("Accuracy", justify="right")
        table.add_column(f"{SIDE_ACTOR} share", justify="right")
        table.add_column("Runtime (s)", justify="right")
        for name, report in comparison.reports.items():
            side = report.confusion[:, report.labels.index(SIDE_ACTOR)].sum() / report.n_tracks if report.n_tracks else 0.0
            table.add_row(name, f"{report.overall_accuracy:.3f}", f"{side:.1%}", f"{report.runtime_seconds or 0:.2f}")
        for name in comparison.skipped:
            table.add_row(name, "skipped", "", "")
        self.console.print(table)

"""Experiment grids and their output files.

CSV outputs hold only quantities that are a pure function of the config and
seed, so re-running an experiment reproduces them byte for byte. Wall-clock
decision times go to ``summary.json`` only.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

from .config import ExperimentConfig
from .runner import EpisodeResult, run_grid, summarize
from .stats import SummaryRow

EPISODE_FIELDS = ("planner", "scenario", "repetition", "seed", "steps", "discounted_return")
SUMMARY_FIELDS = ("planner", "depth", "samples", "episodes", "mean_return", "std_error")
PLOT_FIELDS = ("planner", "depth", "samples", "episodes", "mean_return", "std_error", "mean_decision_time")


def _num(x) -> str:
    # repr of a float round-trips exactly
    return repr(float(x)) if isinstance(x, float) else str(x)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def episodes_csv(results: Sequence[EpisodeResult]) -> str:
    rows = [(r.planner, r.scenario, r.repetition, r.seed, len(r.steps), r.discounted_return) for r in results]
    return _csv_text(EPISODE_FIELDS, rows)


def summary_csv(rows: Sequence[SummaryRow]) -> str:
    return _csv_text(SUMMARY_FIELDS, [(r.planner, r.depth, r.samples, r.episodes, r.mean_return, r.std_error) for r in rows])


def run_experiment(cfg: ExperimentConfig, out_dir=None, progress=None) -> tuple[list[SummaryRow], list[EpisodeResult]]:
    """Run every planner over the scenario x repetition grid and write the outputs.

    Files (when an output directory is given): ``episodes.csv``,
    ``summary.csv`` and ``summary.json``.
    """
    rows, everything = [], []
    for p in cfg.planners:
        results = run_grid(cfg.domain, p, cfg.seed, cfg.scenarios, cfg.repetitions, cfg.max_steps)
        for r in results:
            r.check()
        rows.append(summarize(p, results))
        everything.extend(results)
        if progress is not None:
            progress(rows[-1])
    out_dir = out_dir if out_dir is not None else cfg.output
    if out_dir is not None:
        write_outputs(Path(out_dir), cfg, rows, everything)
    return rows, everything


def write_outputs(out: Path, cfg: ExperimentConfig, rows, results) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "episodes.csv").write_text(episodes_csv(results))
    (out / "summary.csv").write_text(summary_csv(rows))
    doc = {
        "domain": cfg.domain.name,
        "seed": cfg.seed,
        "scenarios": cfg.scenarios,
        "repetitions": cfg.repetitions,
        "rows": [row_to_dict(r) for r in rows],
    }
    (out / "summary.json").write_text(json.dumps(doc, indent=2) + "\n")


def row_to_dict(r: SummaryRow) -> dict:
    return {f: getattr(r, f) for f in PLOT_FIELDS}


def row_from_dict(d: dict) -> SummaryRow:
    return SummaryRow(
        str(d["planner"]),
        int(d["depth"]),
        int(d["samples"]),
        int(d["episodes"]),
        float(d["mean_return"]),
        float(d["std_error"]),
        float(d["mean_decision_time"]),
    )


def format_table(rows: Sequence[SummaryRow]) -> str:
    lines = [f"{'planner':<16}{'episodes':>9}{'mean':>12}{'se':>10}{'time/decision':>16}"]
    for r in rows:
        lines.append(f"{r.planner:<16}{r.episodes:>9}{r.mean_return:>12.3f}{r.std_error:>10.3f}{r.mean_decision_time:>15.4f}s")
    return "\n".join(lines)


# -- plot data ----------------------------------------------------------------------


def plot_data_csv(rows: Sequence[SummaryRow]) -> str:
    """Long format, one row per (planner, depth, samples) point."""
    return _csv_text(PLOT_FIELDS, [[getattr(r, f) for f in PLOT_FIELDS] for r in rows])


def emit_plot_data(rows: Sequence[SummaryRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(plot_data_csv(rows))
    return path


def read_plot_data(path) -> list[SummaryRow]:
    with open(path, newline="") as fh:
        return [row_from_dict(d) for d in csv.DictReader(fh)]


def read_summary_json(path) -> list[SummaryRow]:
    doc = json.loads(Path(path).read_text())
    return [row_from_dict(d) for d in doc["rows"]]

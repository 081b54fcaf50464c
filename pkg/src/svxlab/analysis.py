"""Analysis of collected perception records: match rates against ground
truth, confusion matrices, stratified accuracy, and response-time
histograms with Gaussian kernel density estimates.

Rates are kept at full precision internally; 2-decimal rounding happens
only at the report boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .recognition import ACTIONS, ACTORS, ConfusionMatrix
from .study import LEVELS, UNKNOWN, PerceptionRecord, StudyDataset

HIST_BIN_SECONDS = 0.5
KDE_GRID_POINTS = 200


class AnalysisError(Exception):
    pass


@dataclass(frozen=True)
class MatchResult:
    record: PerceptionRecord
    actor_match: bool
    action_match: bool


def match_records(records: list[PerceptionRecord], dataset: StudyDataset) -> list[MatchResult]:
    """Score each record strictly against dataset ground truth; an unknown
    choice never matches."""
    out = []
    for r in records:
        video = dataset.by_id.get(r.video_id)
        if video is None:
            raise AnalysisError(f"record references unknown video {r.video_id!r}")
        out.append(MatchResult(
            record=r,
            actor_match=r.actor_choice == video.actor,
            action_match=r.action_choice == video.action,
        ))
    return out


def confusion(records: list[PerceptionRecord], dataset: StudyDataset,
              dimension: str) -> ConfusionMatrix:
    """Rows are ground-truth classes; columns are unknown plus the classes."""
    if dimension == "actor":
        classes = list(ACTORS)
        truth_of = lambda v: v.actor
        choice_of = lambda r: r.actor_choice
    elif dimension == "action":
        classes = list(ACTIONS)
        truth_of = lambda v: v.action
        choice_of = lambda r: r.action_choice
    else:
        raise AnalysisError(f"dimension must be 'actor' or 'action', got {dimension!r}")

    cols = [UNKNOWN] + classes
    counts = np.zeros((len(classes), len(cols)), dtype=np.int64)
    for r in records:
        video = dataset.by_id.get(r.video_id)
        if video is None:
            raise AnalysisError(f"record references unknown video {r.video_id!r}")
        counts[classes.index(truth_of(video)), cols.index(choice_of(r))] += 1
    return ConfusionMatrix(row_classes=classes, col_classes=cols, counts=counts)


@dataclass
class StratumRate:
    stratum: str
    n: int
    actor_rate: float | None
    action_rate: float | None

    def to_dict(self) -> dict:
        return {
            "stratum": self.stratum,
            "n": self.n,
            "actor_rate": self.actor_rate,
            "action_rate": self.action_rate,
        }


_STRATA_KEYS = {
    "level": lambda video, r: r.level,
    "actor": lambda video, r: video.actor,
    "background": lambda video, r: video.background,
    "action": lambda video, r: video.action,
}

_STRATA_DOMAIN = {
    "level": list(LEVELS),
    "actor": list(ACTORS),
    "background": ["static", "moving"],
    "action": list(ACTIONS),
}


def stratified_accuracy(records: list[PerceptionRecord], dataset: StudyDataset,
                        by: str) -> list[StratumRate]:
    """Per-stratum match rates for actor and action, with counts. Empty
    strata report n=0 with undefined (None) rates."""
    if by not in _STRATA_KEYS:
        raise AnalysisError(f"stratify by one of {sorted(_STRATA_KEYS)}, got {by!r}")
    key_of = _STRATA_KEYS[by]
    matches = match_records(records, dataset)
    groups: dict[str, list[MatchResult]] = {k: [] for k in _STRATA_DOMAIN[by]}
    for m in matches:
        video = dataset.by_id[m.record.video_id]
        groups.setdefault(key_of(video, m.record), []).append(m)
    out = []
    for stratum, items in groups.items():
        n = len(items)
        out.append(StratumRate(
            stratum=stratum,
            n=n,
            actor_rate=(sum(m.actor_match for m in items) / n) if n else None,
            action_rate=(sum(m.action_match for m in items) / n) if n else None,
        ))
    return out


def aggregate_rates(records: list[PerceptionRecord], dataset: StudyDataset) -> dict[str, float]:
    matches = match_records(records, dataset)
    n = len(matches)
    if n == 0:
        raise AnalysisError("no records")
    return {
        "n": n,
        "actor_rate": sum(m.actor_match for m in matches) / n,
        "action_rate": sum(m.action_match for m in matches) / n,
    }


@dataclass
class DensityEstimate:
    times: np.ndarray  # seconds
    bin_edges: np.ndarray
    bin_counts: np.ndarray
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.grid))

    def to_dict(self) -> dict:
        return {
            "n": int(len(self.times)),
            "bandwidth": self.bandwidth,
            "bin_edges": self.bin_edges.tolist(),
            "bin_counts": self.bin_counts.tolist(),
            "grid": self.grid.tolist(),
            "density": self.density.tolist(),
        }


def silverman_bandwidth(samples: np.ndarray) -> float:
    """0.9 * min(std, IQR/1.34) * n^(-1/5); degenerate samples fall back to
    half the histogram bin width."""
    n = len(samples)
    std = float(np.std(samples, ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(samples, [75, 25])
    iqr = float(q75 - q25)
    spread = min(x for x in (std, iqr / 1.34) if x > 0) if (std > 0 or iqr > 0) else 0.0
    h = 0.9 * spread * n ** (-1 / 5) if spread > 0 else 0.0
    return h if h > 0 else HIST_BIN_SECONDS / 2


def response_time_density(records: list[PerceptionRecord], dataset: StudyDataset,
                          matched: str = "both", dimension: str = "action",
                          predicate=None) -> DensityEstimate:
    """Histogram (fixed 0.5 s bins over [0, max video duration]) and
    Gaussian KDE (Silverman bandwidth, 200-point grid) of response times.

    ``matched`` filters to records whose ``dimension`` choice was correct
    ("correct"), incorrect ("incorrect"), or keeps everything ("both").
    ``predicate`` optionally filters (video, record) pairs further.
    """
    if matched not in ("correct", "incorrect", "both"):
        raise AnalysisError(f"matched must be correct|incorrect|both, got {matched!r}")
    matches = match_records(records, dataset)
    times = []
    for m in matches:
        video = dataset.by_id[m.record.video_id]
        if predicate is not None and not predicate(video, m.record):
            continue
        hit = m.action_match if dimension == "action" else m.actor_match
        if matched == "correct" and not hit:
            continue
        if matched == "incorrect" and hit:
            continue
        times.append(m.record.response_time_ms / 1000.0)
    if not times:
        raise AnalysisError("no records after filtering")
    times = np.asarray(times, dtype=np.float64)

    max_duration = max(v.duration_ms for v in dataset.videos) / 1000.0
    top = max(max_duration, float(times.max()))
    edges = np.arange(0.0, top + HIST_BIN_SECONDS, HIST_BIN_SECONDS)
    if edges[-1] < top:
        edges = np.append(edges, edges[-1] + HIST_BIN_SECONDS)
    counts, edges = np.histogram(times, bins=edges)

    h = silverman_bandwidth(times)
    grid = np.linspace(times.min() - 5 * h, times.max() + 5 * h, KDE_GRID_POINTS)
    diffs = (grid[:, None] - times[None, :]) / h
    density = np.exp(-0.5 * diffs**2).sum(axis=1) / (len(times) * h * math.sqrt(2 * math.pi))
    return DensityEstimate(times=times, bin_edges=edges, bin_counts=counts,
                           grid=grid, density=density, bandwidth=h)


# -- report emission --------------------------------------------------------

def format_confusion_text(cm: ConfusionMatrix) -> str:
    rates = cm.rounded_rates()
    width = max(len(c) for c in cm.col_classes + cm.row_classes) + 2
    lines = ["".ljust(width) + "".join(c.ljust(width) for c in cm.col_classes)]
    for i, row in enumerate(cm.row_classes):
        lines.append(row.ljust(width) + "".join(f"{rates[i, j]:.2f}".ljust(width)
                                                for j in range(len(cm.col_classes))))
    return "\n".join(lines) + "\n"


def format_strata_text(rows: list[StratumRate]) -> str:
    lines = [f"{'stratum':<14}{'n':>6}{'actor':>10}{'action':>10}"]
    for r in rows:
        actor = f"{r.actor_rate:.2f}" if r.actor_rate is not None else "n/a"
        action = f"{r.action_rate:.2f}" if r.action_rate is not None else "n/a"
        lines.append(f"{r.stratum:<14}{r.n:>6}{actor:>10}{action:>10}")
    return "\n".join(lines) + "\n"


def render_density_png(est: DensityEstimate, path: str | Path, title: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    widths = np.diff(est.bin_edges)
    area = max(float((est.bin_counts * widths).sum()), 1e-12)
    ax.bar(est.bin_edges[:-1], est.bin_counts / area, width=widths, align="edge",
           color="#6699cc", edgecolor="white", label="histogram")
    ax.plot(est.grid, est.density, color="#cc3333", lw=2, label="kernel density")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("density")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def analyze_to_directory(records: list[PerceptionRecord], dataset: StudyDataset,
                         out_dir: str | Path, matched: str = "both") -> dict:
    """Emit confusion tables, strata tables, density data, and raster
    plots; returns the structured summary that was also written as JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    summary: dict = {"aggregate": aggregate_rates(records, dataset)}
    for dim in ("actor", "action"):
        cm = confusion(records, dataset, dim)
        summary[f"confusion_{dim}"] = cm.to_dict()
        (out_dir / f"confusion_{dim}.txt").write_text(format_confusion_text(cm))
    for by in ("level", "actor", "background", "action"):
        rows = stratified_accuracy(records, dataset, by)
        summary[f"strata_{by}"] = [r.to_dict() for r in rows]
        (out_dir / f"strata_{by}.txt").write_text(format_strata_text(rows))

    densities = {}
    for name, kwargs in (("all", {"matched": "both"}),
                         ("correct", {"matched": "correct"}),
                         ("incorrect", {"matched": "incorrect"})):
        if matched != "both" and name != matched:
            continue
        try:
            est = response_time_density(records, dataset, **kwargs)
        except AnalysisError:
            continue
        densities[name] = est.to_dict()
        (out_dir / f"density_{name}.json").write_text(json.dumps(est.to_dict()))
        render_density_png(est, out_dir / f"density_{name}.png", f"response time ({name})")
    summary["densities"] = sorted(densities)

    (out_dir / "summary.json").write_text(json.dumps(summary, indent=1))
    return summary

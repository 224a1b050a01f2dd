"""Evaluation metrics and the structured-text evaluation report."""
import json
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class ScoredTrial:
    """One query: its true label and candidate labels in ranked order."""

    query_id: str
    true_label: str
    ranked_labels: tuple

    def __post_init__(self):
        if len(self.ranked_labels) == 0:
            raise ValueError(f"trial {self.query_id!r} has an empty ranked list")


def _check_n(n):
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")


def topn_accuracy(trials, n):
    """Fraction of trials whose true label appears within the first ``n`` ranks."""
    _check_n(n)
    trials = list(trials)
    if not trials:
        raise ValueError("no trials")
    hits = sum(t.true_label in t.ranked_labels[:n] for t in trials)
    return hits / len(trials)


def soft_topn(trials, n):
    """Fraction of trials with at least one correct candidate among the first ``n``."""
    _check_n(n)
    trials = list(trials)
    if not trials:
        raise ValueError("no trials")
    hits = sum(any(c == t.true_label for c in t.ranked_labels[:n]) for t in trials)
    return hits / len(trials)


def hard_topn(trials, n):
    """Fraction of trials whose first ``n`` candidates are all correct.

    A list shorter than ``n`` cannot supply ``n`` correct candidates and counts
    as a miss.
    """
    _check_n(n)
    trials = list(trials)
    if not trials:
        raise ValueError("no trials")
    hits = sum(
        len(t.ranked_labels) >= n and all(c == t.true_label for c in t.ranked_labels[:n])
        for t in trials
    )
    return hits / len(trials)


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    false_acceptance_rate: float
    false_rejection_rate: float


def roc_points(genuine, impostor):
    """Discrete operating points, accepting when score >= threshold.

    One threshold per distinct score plus one just above the highest, so FAR
    falls from 1 to 0 and FRR rises from 0 to 1 as the threshold increases.
    """
    genuine = np.sort(np.asarray(genuine, dtype=np.float64))
    impostor = np.sort(np.asarray(impostor, dtype=np.float64))
    if genuine.size == 0 or impostor.size == 0:
        raise ValueError("EER needs non-empty genuine and impostor score lists")
    if not (np.all(np.isfinite(genuine)) and np.all(np.isfinite(impostor))):
        raise ValueError("scores must be finite")
    u = np.unique(np.concatenate([genuine, impostor]))
    thresholds = np.append(u, np.nextafter(u[-1], np.inf))
    far = 1.0 - np.searchsorted(impostor, thresholds, side="left") / impostor.size
    frr = np.searchsorted(genuine, thresholds, side="left") / genuine.size
    return [RocPoint(float(t), float(a), float(r)) for t, a, r in zip(thresholds, far, frr)]


def _lower_hull(points):
    # points sorted by FAR ascending; monotone-chain lower hull
    hull = []
    for p in points:
        while len(hull) >= 2:
            (x1, y1, _), (x2, y2, _) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def eer(genuine, impostor, higher_is_genuine=True):
    """Equal error rate on the ROC convex hull, and the threshold at the crossing.

    FAR(t) is the share of impostor scores >= t and FRR(t) the share of
    genuine scores < t. Operating points dominated by a mixture of two other
    thresholds are dropped; the crossing of FAR == FRR is found by linear
    interpolation of both rates along the hull segment that brackets it. Use
    ``higher_is_genuine=False`` for distances (accept if distance <= t).
    """
    sign = 1.0 if higher_is_genuine else -1.0
    points = roc_points(sign * np.asarray(genuine, dtype=np.float64),
                        sign * np.asarray(impostor, dtype=np.float64))
    pts = sorted(((p.false_acceptance_rate, p.false_rejection_rate, p.threshold) for p in points),
                 key=lambda p: (p[0], -p[1]))
    hull = _lower_hull(pts)
    for (x1, y1, t1), (x2, y2, t2) in zip(hull, hull[1:]):
        d1, d2 = x1 - y1, x2 - y2
        if d1 <= 0 <= d2:
            alpha = 0.0 if d2 == d1 else -d1 / (d2 - d1)
            rate = x1 + alpha * (x2 - x1)
            return float(rate), float(sign * (t1 + alpha * (t2 - t1)))
    raise AssertionError("ROC hull never crosses FAR == FRR")


def silhouette(vectors, assignments):
    """Mean silhouette over samples, Euclidean distance.

    ``a`` is the mean distance to the rest of the sample's cluster, ``b`` the
    smallest mean distance to another cluster. Singleton clusters and
    ``a == b == 0`` contribute 0.
    """
    X = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray(assignments)
    if X.ndim != 2 or len(X) != len(labels):
        raise ValueError("vectors must be 2-D with one assignment per row")
    uniq, inv = np.unique(labels, return_inverse=True)
    if len(uniq) < 2:
        raise ValueError("silhouette needs at least two clusters")
    D = cdist(X, X)
    k = len(uniq)
    onehot = np.zeros((len(X), k))
    onehot[np.arange(len(X)), inv] = 1.0
    sizes = onehot.sum(axis=0)
    sums = D @ onehot
    own = sizes[inv]
    a = np.where(own > 1, sums[np.arange(len(X)), inv] / np.maximum(own - 1, 1), 0.0)
    means = sums / sizes
    means[np.arange(len(X)), inv] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where((own > 1) & (denom > 0), (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    return float(s.mean())


def delta_k(k_star, k_prime):
    """Signed difference between the true and the estimated number of writers."""
    return int(k_star) - int(k_prime)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

TASKS = {
    "identification": ("Writer Identification", ("Top-1", "Top-5")),
    "retrieval": ("Writer Retrieval", ("Top-1", "STop-5", "STop-10", "HTop-2", "HTop-3", "HTop-4")),
    "verification": ("Writer Verification", ("EER",)),
    "classification": ("Writer Classification", ("K*-Sil.", "ΔK")),
}
_TITLE_TO_TASK = {title: task for task, (title, _) in TASKS.items()}


def format_value(metric, value):
    if value is None:
        return "-"
    if metric == "ΔK":
        return f"{int(value):+d}" if value else "0"
    if metric == "K*-Sil.":
        return f"{value:.2f}"
    return f"{100.0 * value:.1f}"


def parse_value(metric, text):
    if text == "-":
        return None
    if metric == "ΔK":
        return int(text)
    if metric == "K*-Sil.":
        return float(text)
    return float(text) / 100.0


@dataclass
class EvalReport:
    """``results[task][dataset][metric] -> value``; rates are fractions in [0, 1]."""

    results: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def add(self, task, dataset, metric, value):
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}")
        if metric not in TASKS[task][1]:
            raise ValueError(f"unknown metric {metric!r} for {task}")
        self.results.setdefault(task, {}).setdefault(dataset, {})[metric] = value
        return self

    def columns(self, task):
        present = {m for row in self.results.get(task, {}).values() for m in row}
        return [m for m in TASKS[task][1] if m in present]

    def render(self):
        lines = ["# Evaluation report", "", "## Provenance", "```json",
                 json.dumps(self.provenance, indent=1, sort_keys=True), "```"]
        for task, (title, _) in TASKS.items():
            if task not in self.results:
                continue
            cols = self.columns(task)
            lines += ["", f"## {title}", "```table", " | ".join(["Dataset", *cols])]
            for dataset in sorted(self.results[task]):
                row = self.results[task][dataset]
                lines.append(" | ".join([dataset, *(format_value(m, row.get(m)) for m in cols)]))
            lines.append("```")
        return "\n".join(lines) + "\n"

    def to_json(self):
        rows = [
            {"task": task, "dataset": dataset, "metric": metric, "value": value}
            for task in TASKS if task in self.results
            for dataset in sorted(self.results[task])
            for metric, value in sorted(self.results[task][dataset].items())
        ]
        return json.dumps({"provenance": self.provenance, "results": rows}, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        """Inverse of :meth:`to_json`."""
        data = json.loads(text)
        report = cls(provenance=data.get("provenance", {}))
        for row in data["results"]:
            report.add(row["task"], row["dataset"], row["metric"], row["value"])
        return report

    @classmethod
    def parse(cls, text):
        report = cls()
        prov = re.search(r"## Provenance\n```json\n(.*?)\n```", text, re.S)
        if prov:
            report.provenance = json.loads(prov.group(1))
        for title, body in re.findall(r"## ([^\n]+)\n```table\n(.*?)\n```", text, re.S):
            task = _TITLE_TO_TASK.get(title)
            if task is None:
                raise ValueError(f"unknown report section {title!r}")
            header, *rows = body.split("\n")
            cols = [c.strip() for c in header.split("|")][1:]
            report.results[task] = {}
            for row in rows:
                cells = [c.strip() for c in row.split("|")]
                values = {m: parse_value(m, v) for m, v in zip(cols, cells[1:])}
                report.results[task][cells[0]] = {m: v for m, v in values.items() if v is not None}
        return report


def build_report(results, provenance=None):
    """Assemble an :class:`EvalReport` from ``{task: {dataset: {metric: value}}}``."""
    report = EvalReport(provenance=dict(provenance or {}))
    for task, per_dataset in results.items():
        for dataset, metrics in per_dataset.items():
            for metric, value in metrics.items():
                report.add(task, dataset, metric, value)
    return report

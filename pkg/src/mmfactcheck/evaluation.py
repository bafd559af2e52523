"""Verdict metrics, evidence-count difficulty buckets and paired statistics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import EmptyInput, LengthMismatch
from .model import BinaryLabel, VeracityLabel, check_confidence, collapse_to_binary

THREE_CLASS = (VeracityLabel.TRUE, VeracityLabel.FALSE, VeracityLabel.UNPROVEN)
TWO_CLASS = (BinaryLabel.TRUE, BinaryLabel.NOT_TRUE)

# Bucket edges by number of ground-truth evidence items; the two inner edges are
# reconstructed (only "4 to 6" and "9+" are given).
BUCKETS = (("1-3", 1, 3), ("4-6", 4, 6), ("7-8", 7, 8), ("9+", 9, None))
RECONSTRUCTED_BUCKETS = ("1-3", "7-8")

EXACT_WILCOXON_MAX_N = 25


@dataclass(frozen=True)
class PredictionRecord:
    claim_id: str
    gold: VeracityLabel
    predicted: VeracityLabel
    confidence: int = 1
    gt_evidence_count: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "gold", VeracityLabel(self.gold))
        object.__setattr__(self, "predicted", VeracityLabel(self.predicted))
        check_confidence(self.confidence)
        if self.gt_evidence_count is not None and self.gt_evidence_count < 0:
            raise ValueError("gt_evidence_count must be non-negative")


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Metrics:
    f1: float
    accuracy: float
    precision: float
    recall: float
    labels: tuple[str, ...]
    confusion: tuple[tuple[int, ...], ...]  # rows gold, columns predicted
    per_class: dict

    def as_row(self) -> dict:
        return {"F1": self.f1, "Acc": self.accuracy, "Rec": self.recall, "P": self.precision}


def _setting(classes) -> str:
    key = str(classes).lower()
    if key in ("3", "three", "three-class"):
        return "three"
    if key in ("2", "binary", "two", "two-class"):
        return "binary"
    raise ValueError(f"unknown class setting {classes!r}")


def _pairs(records: Sequence[PredictionRecord], setting: str) -> tuple[list[str], list[str], tuple]:
    if setting == "binary":
        gold = [collapse_to_binary(r.gold).value for r in records]
        pred = [collapse_to_binary(r.predicted).value for r in records]
        order = tuple(l.value for l in TWO_CLASS)
    else:
        gold = [r.gold.value for r in records]
        pred = [r.predicted.value for r in records]
        order = tuple(l.value for l in THREE_CLASS)
    return gold, pred, order


def score_labels(gold: Sequence[str], pred: Sequence[str], averaging: str = "weighted", order: Sequence[str] = ()) -> Metrics:
    """Metrics over parallel label sequences.

    Averaging runs over the labels that occur in gold or predictions. A
    class with no predictions has precision 0; weighted averages use gold
    support, so classes absent from gold carry no weight.
    """
    if len(gold) != len(pred):
        raise LengthMismatch(f"{len(gold)} gold labels vs {len(pred)} predictions")
    if not gold:
        raise EmptyInput("no records to score")
    if averaging not in ("weighted", "macro"):
        raise ValueError(f"unknown averaging {averaging!r}")
    present = set(gold) | set(pred)
    labels = [l for l in order if l in present] + sorted(present - set(order))
    index = {l: i for i, l in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in zip(gold, pred):
        cm[index[g], index[p]] += 1
    tp = np.diag(cm).astype(float)
    pred_tot = cm.sum(axis=0).astype(float)
    gold_tot = cm.sum(axis=1).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pred_tot > 0, tp / pred_tot, 0.0)
        recall = np.where(gold_tot > 0, tp / gold_tot, 0.0)
        denom = pred_tot + gold_tot
        f1 = np.where(denom > 0, 2 * tp / denom, 0.0)
    if averaging == "weighted":
        w = gold_tot / gold_tot.sum()
    else:
        w = np.full(len(labels), 1.0 / len(labels))
    per_class = {
        l: ClassScores(float(precision[i]), float(recall[i]), float(f1[i]), int(gold_tot[i])) for l, i in index.items()
    }
    return Metrics(
        f1=float(w @ f1),
        accuracy=float(tp.sum() / cm.sum()),
        precision=float(w @ precision),
        recall=float(w @ recall),
        labels=tuple(labels),
        confusion=tuple(tuple(int(v) for v in row) for row in cm),
        per_class=per_class,
    )


def classification_metrics(
    records: Sequence[PredictionRecord], averaging: str = "weighted", classes: str | int = "three"
) -> Metrics:
    """Precision, recall, F1 and accuracy; ``classes="binary"`` collapses labels first."""
    if not records:
        raise EmptyInput("no records to score")
    gold, pred, order = _pairs(records, _setting(classes))
    return score_labels(gold, pred, averaging, order)


# -- difficulty ----------------------------------------------------------------


def bucket_of(count: Optional[int]) -> Optional[str]:
    if count is None:
        return None
    for name, lo, hi in BUCKETS:
        if count >= lo and (hi is None or count <= hi):
            return name
    return None


@dataclass(frozen=True)
class BucketReport:
    buckets: dict  # name -> {"n", "binary_macro_f1", "three_macro_f1"}
    excluded: int  # records without a usable evidence count
    note: str


def difficulty_buckets(records: Sequence[PredictionRecord]) -> BucketReport:
    grouped: dict[str, list[PredictionRecord]] = {name: [] for name, _, _ in BUCKETS}
    excluded = 0
    for r in records:
        name = bucket_of(r.gt_evidence_count)
        if name is None:
            excluded += 1
        else:
            grouped[name].append(r)
    out = {}
    for name, rs in grouped.items():
        if rs:
            out[name] = {
                "n": len(rs),
                "binary_macro_f1": classification_metrics(rs, "macro", "binary").f1,
                "three_macro_f1": classification_metrics(rs, "macro", "three").f1,
            }
        else:
            out[name] = {"n": 0, "binary_macro_f1": None, "three_macro_f1": None}
    note = (
        f"{excluded} record(s) without an evidence count of at least 1 were left out. "
        f"Bucket edges {', '.join(RECONSTRUCTED_BUCKETS)} are reconstructed."
    )
    return BucketReport(out, excluded, note)


# -- human evaluation ------------------------------------------------------------


def normalize_human_score(orig: int) -> float:
    """Map a 0 (best) .. 2 (worst) rating onto 1.0 .. 0.0."""
    if isinstance(orig, bool) or not isinstance(orig, (int, np.integer)) or orig not in (0, 1, 2):
        raise ValueError(f"human scores are 0, 1 or 2, got {orig!r}")
    return 1.0 - orig / 2.0


@dataclass(frozen=True)
class Significance:
    mean_delta: float
    wilcoxon_p: float
    bootstrap_ci_95: tuple[float, float]
    statistic: float  # smaller of the positive/negative rank sums
    n_nonzero: int
    all_zero_differences: bool
    method: str  # "exact" | "normal" | "degenerate"


def _exact_signed_rank_cdf(ranks: np.ndarray, w: float) -> float:
    """P(W+ <= w) under random signs, ties handled via doubled (integer) ranks."""
    doubled = np.rint(ranks * 2).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    limit = int(math.floor(2 * w + 1e-9))
    return float(sum(counts[: limit + 1]) / (2 ** len(ranks)))


def wilcoxon_signed_rank(d: Sequence[float]) -> tuple[float, float, str, int]:
    """Two-sided signed-rank test; zero differences dropped, tied ranks averaged.

    Returns (statistic, p, method, n_nonzero). Exact null distribution for up
    to 25 non-zero differences, normal approximation (tie-corrected, no
    continuity correction) above that.
    """
    d = np.asarray(d, dtype=float)
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return 0.0, 1.0, "degenerate", 0
    ranks = stats.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    t = min(w_plus, w_minus)
    if n <= EXACT_WILCOXON_MAX_N:
        p = min(1.0, 2.0 * _exact_signed_rank_cdf(ranks, t))
        return t, p, "exact", n
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(((tie_counts**3) - tie_counts).sum()) / 48.0
    if var <= 0:
        return t, 1.0, "normal", n
    z = (w_plus - n * (n + 1) / 4.0) / math.sqrt(var)
    return t, float(min(1.0, 2.0 * stats.norm.sf(abs(z)))), "normal", n


def bootstrap_mean_ci(d: Sequence[float], *, resamples: int = 10_000, seed: int = 0, level: float = 0.95) -> tuple[float, float]:
    """Percentile bootstrap CI of the mean; the resample sequence depends only on ``seed``."""
    d = np.asarray(d, dtype=float)
    rng = np.random.default_rng(seed)
    means = np.empty(resamples)
    chunk = max(1, 2_000_000 // max(1, len(d)))
    for start in range(0, resamples, chunk):
        stop = min(resamples, start + chunk)
        idx = rng.integers(0, len(d), size=(stop - start, len(d)))
        means[start:stop] = d[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.percentile(means, [100 * alpha, 100 * (1 - alpha)])
    return float(lo), float(hi)


def paired_significance(
    a: Sequence[float], b: Sequence[float], *, resamples: int = 10_000, seed: int = 0
) -> Significance:
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} paired scores")
    if len(a) < 2:
        raise ValueError("need at least two pairs")
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    statistic, p, method, n_nonzero = wilcoxon_signed_rank(d)
    ci = bootstrap_mean_ci(d, resamples=resamples, seed=seed)
    return Significance(
        mean_delta=float(d.mean()),
        wilcoxon_p=p,
        bootstrap_ci_95=ci,
        statistic=statistic,
        n_nonzero=n_nonzero,
        all_zero_differences=n_nonzero == 0,
        method=method,
    )


# -- files ----------------------------------------------------------------------------


def join_predictions(predictions: Iterable[dict], gold: Iterable[dict], *, include_errors: bool = False) -> tuple[list[PredictionRecord], dict]:
    """Pair prediction rows with gold rows by ``claim_id``.

    Gold rows whose label is outside the three-way vocabulary (the challenge
    labels) and predictions with ``status == "error"`` are skipped and counted.
    """
    gold_by_id = {}
    skipped = {"errors": 0, "no_gold": 0, "non_veracity_gold": 0}
    for g in gold:
        gold_by_id[str(g["claim_id"])] = g
    out = []
    for p in predictions:
        cid = str(p["claim_id"])
        if p.get("status", "ok") != "ok" and not include_errors:
            skipped["errors"] += 1
            continue
        g = gold_by_id.get(cid)
        if g is None:
            skipped["no_gold"] += 1
            continue
        try:
            gold_label = VeracityLabel(g["label"])
        except ValueError:
            skipped["non_veracity_gold"] += 1
            continue
        count = g.get("gt_evidence_count")
        out.append(
            PredictionRecord(
                claim_id=cid,
                gold=gold_label,
                predicted=VeracityLabel(p["predicted"]),
                confidence=int(p.get("confidence", 1)),
                gt_evidence_count=None if count is None else int(count),
            )
        )
    return out, skipped


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]

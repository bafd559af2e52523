"""Independent reference computations, written without numpy or the package."""

from __future__ import annotations

import itertools
import random

from mmfactcheck.model import VeracityLabel
from mmfactcheck.evaluation import PredictionRecord

LABELS3 = ("True", "False", "Unproven")


def brute_force_metrics(gold, pred, averaging):
    """Per-class counts by explicit enumeration of every (gold, pred) pair."""
    labels = sorted(set(gold) | set(pred))
    n = len(gold)
    per = {}
    for c in labels:
        tp = sum(1 for g, p in zip(gold, pred) if g == c and p == c)
        fp = sum(1 for g, p in zip(gold, pred) if g != c and p == c)
        fn = sum(1 for g, p in zip(gold, pred) if g == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per[c] = (precision, recall, f1, tp + fn)
    if averaging == "weighted":
        weights = {c: per[c][3] / n for c in labels}
    else:
        weights = {c: 1 / len(labels) for c in labels}
    avg = [sum(weights[c] * per[c][k] for c in labels) for k in range(3)]
    accuracy = sum(1 for g, p in zip(gold, pred) if g == p) / n
    return {"precision": avg[0], "recall": avg[1], "f1": avg[2], "accuracy": accuracy}


def binarize(labels):
    return ["true" if l == "True" else "not_true" for l in labels]


def random_vectors(rng: random.Random, n_min=1, n_max=60):
    n = rng.randint(n_min, n_max)
    weights = [rng.random() + 0.01 for _ in LABELS3]
    gold = rng.choices(LABELS3, weights=weights, k=n)
    pred = [g if rng.random() < rng.random() else rng.choice(LABELS3) for g in gold]
    return gold, pred


def records_for(gold, pred):
    return [PredictionRecord(f"c{i}", VeracityLabel(g), VeracityLabel(p)) for i, (g, p) in enumerate(zip(gold, pred))]


def _average_ranks(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def sign_flip_wilcoxon_p(d):
    """Two-sided exact p: share of all 2^n sign assignments at least as extreme."""
    d = [x for x in d if x != 0]
    if not d:
        return 1.0
    ranks = _average_ranks([abs(x) for x in d])
    total = sum(ranks)
    observed = min(sum(r for r, x in zip(ranks, d) if x > 0), sum(r for r, x in zip(ranks, d) if x < 0))
    extreme = 0
    for signs in itertools.product((0, 1), repeat=len(ranks)):
        w_plus = sum(r for r, s in zip(ranks, signs) if s)
        if min(w_plus, total - w_plus) <= observed + 1e-9:
            extreme += 1
    return extreme / 2 ** len(ranks)

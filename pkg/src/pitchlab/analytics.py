"""Evaluation metrics and possession applications.

Classification/regression metrics feed the model comparison table;
the possession scores quantify how well a team converts possessions
into chances (signed shot-probability peak) and how much value a
possession carries (action-weighted goal proximity with a duration
decay). Both possession formulas are declared surrogates: the upstream
literature defines the names but not closed forms, so these are chosen
to be testable and to reproduce the documented qualitative behavior.
They are NOT the original metrics.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import nn
from .core import (
    CARRY,
    CROSS,
    DRIBBLE,
    HIGH_PASS,
    LONG_PASS,
    MAX_DIST_TO_GOAL,
    SHORT_PASS,
    SHOT,
    PitchlabError,
    Possession,
    action_class_index,
    is_marker,
)
from .eventmodel import (
    LemChain,
    MajModel,
    as_context,
    iter_context_target_pairs,
    predict_next,
)

DEFAULT_HPUS_WEIGHTS: Mapping[str, float] = {
    SHOT: 1.0,
    CROSS: 0.8,
    DRIBBLE: 0.5,
    CARRY: 0.5,
    SHORT_PASS: 0.3,
    HIGH_PASS: 0.3,
    LONG_PASS: 0.3,
}

DEFAULT_HPUS_KAPPA = 0.5


def classification_report(
    predicted: Sequence[int],
    true: Sequence[int],
    n_classes: int,
) -> Tuple[float, float, List[Optional[float]]]:
    """(accuracy, macro F1, per-class F1).

    Per-class F1 is None for classes absent from both predictions and
    truth; those classes are excluded from the macro mean. A class with
    no true or predicted positives but present elsewhere scores 0.
    """
    predicted = np.asarray(predicted, dtype=np.int64)
    true = np.asarray(true, dtype=np.int64)
    if predicted.shape != true.shape or predicted.size == 0:
        raise PitchlabError(
            f"prediction/truth lengths differ or empty: {predicted.shape} vs {true.shape}"
        )
    accuracy = float(np.mean(predicted == true))
    per_class: List[Optional[float]] = []
    present_scores: List[float] = []
    for c in range(n_classes):
        tp = int(np.sum((predicted == c) & (true == c)))
        fp = int(np.sum((predicted == c) & (true != c)))
        fn = int(np.sum((predicted != c) & (true == c)))
        if tp + fp + fn == 0:
            per_class.append(None)
            continue
        f1 = 2.0 * tp / (2.0 * tp + fp + fn)
        per_class.append(f1)
        present_scores.append(f1)
    macro = float(np.mean(present_scores)) if present_scores else 0.0
    return accuracy, macro, per_class


def regression_mae(pred: Sequence[float], true: Sequence[float]) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    true = np.asarray(true, dtype=np.float64)
    if pred.shape != true.shape:
        raise PitchlabError(f"length mismatch: {pred.shape} vs {true.shape}")
    return float(np.mean(np.abs(pred - true)))


def _mlp_report(model: nn.Mlp) -> Tuple[int, int]:
    params = sum(l.w.size + l.b.size for l in model.layers)
    flops = sum(2 * l.in_dim * l.out_dim + l.out_dim for l in model.layers)
    return params, flops


def model_report(model) -> Tuple[int, int]:
    """(parameter count, analytic dense-layer FLOPs per prediction)."""
    if model is None or isinstance(model, MajModel):
        return 0, 0
    if isinstance(model, nn.Mlp):
        return _mlp_report(model)
    if isinstance(model, LemChain):
        totals = [_mlp_report(m) for _, m in model.models()]
        return sum(t[0] for t in totals), sum(t[1] for t in totals)
    raise PitchlabError(f"cannot report on {type(model).__name__}")


@dataclass(frozen=True)
class EventModelMetrics:
    accuracy: float
    macro_f1: float
    per_class_f1: Tuple[Optional[float], ...]
    time_mae: float
    x_mae: float
    y_mae: float
    n_events: int


def evaluate_event_model(
    model,
    matches: Sequence[Sequence],
    context_depth: Optional[int] = None,
) -> EventModelMetrics:
    """Greedy next-event metrics over (context, target) pairs.

    MAEs compare the model's decoded predictions (bin centers for the
    chain, training means for the baseline) against the true continuous
    values.
    """
    if context_depth is None:
        context_depth = model.context_depth if isinstance(model, LemChain) else 1
    pred_classes: List[int] = []
    true_classes: List[int] = []
    dt_err: List[float] = []
    x_err: List[float] = []
    y_err: List[float] = []
    for context, target in iter_context_target_pairs(matches, context_depth):
        prediction = predict_next(model, [as_context(e) for e in context], "greedy")
        pred_classes.append(action_class_index(prediction.action))
        true_classes.append(action_class_index(target.action))
        dt_err.append(abs(prediction.delta_t - target.delta_t))
        x_err.append(abs(prediction.start_x - target.start_x))
        y_err.append(abs(prediction.start_y - target.start_y))
    accuracy, macro, per_class = classification_report(pred_classes, true_classes, 9)
    return EventModelMetrics(
        accuracy=accuracy,
        macro_f1=macro,
        per_class_f1=tuple(per_class),
        time_mae=float(np.mean(dt_err)),
        x_mae=float(np.mean(x_err)),
        y_mae=float(np.mean(y_err)),
        n_events=len(true_classes),
    )


@dataclass(frozen=True)
class PossessionScore:
    match_id: int
    poss_id: int
    team: str
    poss_util: float
    poss_util_plus: float
    hpus: float
    hpus_plus: float


def poss_util(model, possession: Possession) -> Tuple[float, float]:
    """Signed peak shot probability over the possession.

    The magnitude is the maximum model probability that the next action
    is a shot, taken over contexts anchored at each real event; the
    sign is + when the possession produced a shot or goal, - otherwise.
    The plus variant clips negatives to 0.
    """
    depth = model.context_depth if isinstance(model, LemChain) else 1
    real_events = [e for e in possession.events if not is_marker(e.action)]
    if not real_events:
        return 0.0, 0.0
    shot_class = action_class_index(SHOT)
    peak = 0.0
    for t in range(len(real_events)):
        window = [as_context(e) for e in real_events[max(0, t - depth + 1) : t + 1]]
        probs = predict_next(model, window, "greedy").probs["action"]
        peak = max(peak, float(probs[shot_class]))
    produced_chance = any(e.action == SHOT or e.goal == 1 for e in real_events)
    score = peak if produced_chance else -peak
    return score, max(score, 0.0)


def hpus(
    possession: Possession,
    weights: Optional[Mapping[str, float]] = None,
    kappa: float = DEFAULT_HPUS_KAPPA,
) -> Tuple[float, float]:
    """Action-weighted goal proximity with a duration decay.

    score = max_e [ w(action_e) * (1 - dist2goal_e / max_dist) ]
            * exp(-kappa * duration_min)

    Markers weigh 0; the plus variant keeps the score only when the
    possession contains a shot.
    """
    weights = weights if weights is not None else DEFAULT_HPUS_WEIGHTS
    best = 0.0
    for event in possession.events:
        w = weights.get(event.action, 0.0)
        if w <= 0.0:
            continue
        best = max(best, w * (1.0 - event.dist2goal / MAX_DIST_TO_GOAL))
    duration = max(possession.end_seconds - possession.start_seconds, 0.0)
    score = best * math.exp(-kappa * duration / 60.0)
    contains_shot = any(e.action == SHOT for e in possession.events)
    return score, score if contains_shot else 0.0


def score_possessions(
    model,
    possessions: Sequence[Possession],
    weights: Optional[Mapping[str, float]] = None,
    kappa: float = DEFAULT_HPUS_KAPPA,
) -> List[PossessionScore]:
    out: List[PossessionScore] = []
    for possession in possessions:
        util, util_plus = poss_util(model, possession)
        value, value_plus = hpus(possession, weights, kappa)
        out.append(
            PossessionScore(
                match_id=possession.match_id,
                poss_id=possession.poss_id,
                team=possession.team,
                poss_util=util,
                poss_util_plus=util_plus,
                hpus=value,
                hpus_plus=value_plus,
            )
        )
    return out


def write_possession_scores_csv(scores: Sequence[PossessionScore]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["match_id", "poss_id", "team", "poss_util", "poss_util_plus", "hpus", "hpus_plus"]
    )
    for s in scores:
        writer.writerow(
            [
                s.match_id,
                s.poss_id,
                s.team,
                "%.6f" % s.poss_util,
                "%.6f" % s.poss_util_plus,
                "%.6f" % s.hpus,
                "%.6f" % s.hpus_plus,
            ]
        )
    return buf.getvalue().encode("utf-8")


def aggregate_by_interval(
    possessions: Sequence[Possession],
    scores: Sequence[PossessionScore],
    interval_minutes: float = 5.0,
) -> List[Dict[str, object]]:
    """Mean possession value per team per match-clock interval."""
    if interval_minutes <= 0:
        raise PitchlabError("interval_minutes must be positive")
    buckets: Dict[Tuple[int, str, int], List[Tuple[float, float]]] = {}
    for possession, score in zip(possessions, scores):
        interval = int(possession.start_seconds // (interval_minutes * 60.0))
        key = (possession.match_id, possession.team, interval)
        buckets.setdefault(key, []).append((score.hpus, score.hpus_plus))
    rows = []
    for (match_id, team, interval) in sorted(buckets):
        values = buckets[(match_id, team, interval)]
        rows.append(
            {
                "match_id": match_id,
                "team": team,
                "interval": interval,
                "hpus_mean": float(np.mean([v[0] for v in values])),
                "hpus_plus_mean": float(np.mean([v[1] for v in values])),
                "n_possessions": len(values),
            }
        )
    return rows


def heatmap(chain: LemChain, context: Sequence) -> np.ndarray:
    """106 x 69 next-event location probability grid (grid[x][y]).

    Factorized from the location model's x and y marginals under the
    greedy action and flags; sums to 1 within 1e-6.
    """
    prediction = predict_next(chain, context, "greedy")
    grid = np.outer(prediction.probs["x"], prediction.probs["y"])
    return grid


def write_heatmap_csv(grid: np.ndarray) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    for row in grid:
        writer.writerow(["%.9f" % v for v in row])
    return buf.getvalue().encode("utf-8")


def _ramp_color(v: float) -> str:
    """Blue -> yellow -> red ramp for relative intensity v in [0, 1]."""
    stops = ((0.12, 0.16, 0.38), (0.99, 0.91, 0.14), (0.84, 0.10, 0.11))
    if v <= 0.5:
        a, b, t = stops[0], stops[1], v * 2.0
    else:
        a, b, t = stops[1], stops[2], (v - 0.5) * 2.0
    rgb = [int(round(255 * (a[i] + (b[i] - a[i]) * t))) for i in range(3)]
    return "#%02x%02x%02x" % tuple(rgb)


def render_heatmap_svg(grid: np.ndarray, cell_px: int = 8) -> bytes:
    """Self-contained vector rendering of a probability grid."""
    nx, ny = grid.shape
    peak = float(grid.max()) or 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{nx * cell_px}" '
        f'height="{ny * cell_px}" shape-rendering="crispEdges">'
    ]
    for ix in range(nx):
        for iy in range(ny):
            color = _ramp_color(float(grid[ix, iy]) / peak)
            parts.append(
                f'<rect x="{ix * cell_px}" y="{iy * cell_px}" '
                f'width="{cell_px}" height="{cell_px}" fill="{color}"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts).encode("utf-8")

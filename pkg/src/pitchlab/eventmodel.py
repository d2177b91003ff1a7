"""Next-event models: majority-class baseline and the chained classifiers.

The chain is three independently trained dense networks over
discretized event attributes:

* model A predicts the next action class from the last k events,
* model B predicts the success and goal flags given context + action,
* model C predicts the time/x/y bins given context + action + flags.

All targets are classification (cross-entropy); continuous attributes
are decoded back to bin centers. k (the context depth) is 1 or 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import nn
from .core import (
    SHOT,
    TRAIN_ACTION_CLASSES,
    PitchlabError,
    UiedEvent,
    action_class_index,
)

N_ACTION_CLASSES = 9
N_TIME_BINS = 41  # 1 s bins for 0-40 s, last bin open-ended
N_X_BINS = 106  # 1 m bins, centers at integer meters 0..105
N_Y_BINS = 69
FEATURES_PER_EVENT = N_ACTION_CLASSES + 6
TIME_CLIP = 40.0


@dataclass(frozen=True)
class EventCodec:
    """Discretization of event attributes into classification bins."""

    n_actions: int = N_ACTION_CLASSES
    n_time_bins: int = N_TIME_BINS
    n_x_bins: int = N_X_BINS
    n_y_bins: int = N_Y_BINS

    def encode_time(self, delta_t: float) -> int:
        if delta_t < 0:
            raise ValueError(f"delta_t must be >= 0, got {delta_t}")
        return min(int(math.floor(delta_t)), self.n_time_bins - 1)

    def decode_time(self, bin_index: int) -> float:
        self._check(bin_index, self.n_time_bins)
        return bin_index + 0.5

    def encode_x(self, x: float) -> int:
        return self._encode_coord(x, self.n_x_bins)

    def decode_x(self, bin_index: int) -> float:
        self._check(bin_index, self.n_x_bins)
        return float(bin_index)

    def encode_y(self, y: float) -> int:
        return self._encode_coord(y, self.n_y_bins)

    def decode_y(self, bin_index: int) -> float:
        self._check(bin_index, self.n_y_bins)
        return float(bin_index)

    @staticmethod
    def _encode_coord(value: float, n_bins: int) -> int:
        # bins centered at integer meters; half-meters round up
        index = int(math.floor(value + 0.5))
        return min(max(index, 0), n_bins - 1)

    @staticmethod
    def _check(bin_index: int, n_bins: int) -> None:
        if not (0 <= bin_index < n_bins):
            raise IndexError(f"bin {bin_index} outside [0, {n_bins})")


@dataclass(frozen=True)
class ContextEvent:
    """The per-event attributes the context encoder consumes."""

    action: str
    delta_t: float
    start_x: float
    start_y: float
    success: int
    goal: int
    home_team: int


def as_context(event: UiedEvent) -> ContextEvent:
    return ContextEvent(
        action=event.action,
        delta_t=event.delta_t,
        start_x=event.start_x,
        start_y=event.start_y,
        success=event.success,
        goal=event.goal,
        home_team=event.home_team,
    )


def encode_event_features(event) -> np.ndarray:
    """15 values: one-hot action then normalized numeric attributes."""
    out = np.zeros(FEATURES_PER_EVENT)
    out[action_class_index(event.action)] = 1.0
    out[N_ACTION_CLASSES + 0] = min(event.delta_t, TIME_CLIP) / TIME_CLIP
    out[N_ACTION_CLASSES + 1] = event.start_x / 105.0
    out[N_ACTION_CLASSES + 2] = event.start_y / 68.0
    out[N_ACTION_CLASSES + 3] = float(event.success)
    out[N_ACTION_CLASSES + 4] = float(event.goal)
    out[N_ACTION_CLASSES + 5] = float(event.home_team)
    return out


def encode_context(events: Sequence, context_depth: int) -> np.ndarray:
    """Concatenate the last k events' features, zero-padding on the left."""
    window = list(events)[-context_depth:]
    out = np.zeros(context_depth * FEATURES_PER_EVENT)
    offset = (context_depth - len(window)) * FEATURES_PER_EVENT
    for i, event in enumerate(window):
        lo = offset + i * FEATURES_PER_EVENT
        out[lo : lo + FEATURES_PER_EVENT] = encode_event_features(event)
    return out


@dataclass
class MajModel:
    """Constant predictor: modal training action and mean attributes."""

    modal_action: str
    mean_delta_t: float
    mean_start_x: float
    mean_start_y: float


def fit_maj(train_events: Sequence[UiedEvent]) -> MajModel:
    if not train_events:
        raise PitchlabError("cannot fit the majority model on an empty training set")
    counts = np.zeros(N_ACTION_CLASSES, dtype=np.int64)
    for e in train_events:
        counts[action_class_index(e.action)] += 1
    modal = int(np.argmax(counts))  # ties break to the lowest class index
    return MajModel(
        modal_action=TRAIN_ACTION_CLASSES[modal],
        mean_delta_t=float(np.mean([e.delta_t for e in train_events])),
        mean_start_x=float(np.mean([e.start_x for e in train_events])),
        mean_start_y=float(np.mean([e.start_y for e in train_events])),
    )


@dataclass
class LemChain:
    """Three chained dense classifiers over discretized attributes."""

    model_a: nn.Mlp
    model_b: nn.Mlp
    model_c: nn.Mlp
    context_depth: int
    codec: EventCodec = field(default_factory=EventCodec)

    def models(self) -> Tuple[Tuple[str, nn.Mlp], ...]:
        return (("action", self.model_a), ("flags", self.model_b), ("location", self.model_c))


def lem_init(
    context_depth: int,
    hidden_dim: int = 64,
    num_layers: int = 1,
    seed: int = 0,
    codec: Optional[EventCodec] = None,
) -> LemChain:
    if context_depth not in (1, 3):
        raise ValueError(f"context_depth must be 1 or 3, got {context_depth}")
    codec = codec or EventCodec()
    ctx = context_depth * FEATURES_PER_EVENT
    hidden = [hidden_dim] * num_layers
    bins = codec.n_time_bins + codec.n_x_bins + codec.n_y_bins
    return LemChain(
        model_a=nn.mlp_init([ctx, *hidden, codec.n_actions], seed=seed),
        model_b=nn.mlp_init([ctx + codec.n_actions, *hidden, 4], seed=seed + 1),
        model_c=nn.mlp_init([ctx + codec.n_actions + 2, *hidden, bins], seed=seed + 2),
        context_depth=context_depth,
        codec=codec,
    )


def iter_context_target_pairs(
    matches: Iterable[Sequence[UiedEvent]], context_depth: int
) -> Iterator[Tuple[List[UiedEvent], UiedEvent]]:
    """(last-k-events, next-event) pairs, never crossing match bounds."""
    for events in matches:
        for t in range(len(events) - 1):
            lo = max(0, t - context_depth + 1)
            yield list(events[lo : t + 1]), events[t + 1]


@dataclass
class LemTrainingArrays:
    x_action: np.ndarray
    y_action: np.ndarray
    x_flags: np.ndarray
    y_flags: np.ndarray
    x_location: np.ndarray
    y_location: np.ndarray


def build_training_arrays(
    matches: Sequence[Sequence[UiedEvent]],
    context_depth: int,
    codec: EventCodec,
) -> LemTrainingArrays:
    """Teacher-forced design matrices for the three sub-models."""
    xa, ya, xb, yb, xc, yc = [], [], [], [], [], []
    for context, target in iter_context_target_pairs(matches, context_depth):
        ctx = encode_context(context, context_depth)
        action_onehot = np.zeros(codec.n_actions)
        action_onehot[action_class_index(target.action)] = 1.0
        flags = np.array([float(target.success), float(target.goal)])
        xa.append(ctx)
        ya.append([action_class_index(target.action)])
        xb.append(np.concatenate([ctx, action_onehot]))
        yb.append([target.success, target.goal])
        xc.append(np.concatenate([ctx, action_onehot, flags]))
        yc.append(
            [
                codec.encode_time(target.delta_t),
                codec.encode_x(target.start_x),
                codec.encode_y(target.start_y),
            ]
        )
    return LemTrainingArrays(
        x_action=np.array(xa),
        y_action=np.array(ya, dtype=np.int64),
        x_flags=np.array(xb),
        y_flags=np.array(yb, dtype=np.int64),
        x_location=np.array(xc),
        y_location=np.array(yc, dtype=np.int64),
    )


@dataclass
class TrainConfig:
    num_epoch: int = 30
    batch_size: int = 256
    learning_rate: float = 0.001
    early_stop_patience: int = 5
    seed: int = 0


@dataclass
class EpochMetric:
    model: str
    epoch: int
    train_loss: float
    val_loss: float


def _loss_spec_for(name: str, codec: EventCodec, targets: np.ndarray):
    if name == "action":
        return nn.GroupedCrossEntropy([codec.n_actions], targets)
    if name == "flags":
        return nn.GroupedCrossEntropy([2, 2], targets)
    return nn.GroupedCrossEntropy(
        [codec.n_time_bins, codec.n_x_bins, codec.n_y_bins], targets
    )


def _train_one_model(
    name: str,
    model: nn.Mlp,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_valid: np.ndarray,
    y_valid: np.ndarray,
    codec: EventCodec,
    config: TrainConfig,
) -> List[EpochMetric]:
    rng = np.random.default_rng(config.seed)
    state = nn.adam_init(model, config.learning_rate)
    metrics: List[EpochMetric] = []
    best_loss = math.inf
    best_params: Optional[nn.Mlp] = None
    stale = 0
    n = len(x_train)
    for epoch in range(config.num_epoch):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, config.batch_size):
            batch = order[lo : lo + config.batch_size]
            spec = _loss_spec_for(name, codec, y_train[batch])
            try:
                epoch_loss += nn.train_step(model, state, x_train[batch], spec) * len(batch)
            except nn.TrainingDivergedError as exc:
                raise nn.TrainingDivergedError(f"sub-model {name!r}: {exc}") from exc
        train_loss = epoch_loss / n
        val_spec = _loss_spec_for(name, codec, y_valid)
        val_loss = val_spec.value(nn.forward(model, x_valid))
        metrics.append(EpochMetric(name, epoch, train_loss, val_loss))
        if val_loss < best_loss - 1e-12:
            best_loss = val_loss
            best_params = model.copy()
            stale = 0
        else:
            stale += 1
            if stale >= config.early_stop_patience:
                break
    if best_params is not None:
        model.layers = best_params.layers
    return metrics


def train_lem(
    chain: LemChain,
    train_matches: Sequence[Sequence[UiedEvent]],
    valid_matches: Sequence[Sequence[UiedEvent]],
    config: TrainConfig,
) -> List[EpochMetric]:
    """Train the three sub-models independently (non end-to-end).

    Each sub-model early-stops on its own validation loss and keeps its
    best-epoch parameters.
    """
    train = build_training_arrays(train_matches, chain.context_depth, chain.codec)
    valid = build_training_arrays(valid_matches, chain.context_depth, chain.codec)
    history: List[EpochMetric] = []
    jobs = (
        ("action", chain.model_a, train.x_action, train.y_action, valid.x_action, valid.y_action),
        ("flags", chain.model_b, train.x_flags, train.y_flags, valid.x_flags, valid.y_flags),
        ("location", chain.model_c, train.x_location, train.y_location, valid.x_location, valid.y_location),
    )
    for name, model, xt, yt, xv, yv in jobs:
        history.extend(_train_one_model(name, model, xt, yt, xv, yv, chain.codec, config))
    return history


def best_validation_loss(history: Sequence[EpochMetric]) -> float:
    """Sum over sub-models of their best validation loss."""
    best: Dict[str, float] = {}
    for metric in history:
        best[metric.model] = min(best.get(metric.model, math.inf), metric.val_loss)
    return sum(best.values())


@dataclass(frozen=True)
class Prediction:
    """One predicted next event with its full probability vectors."""

    action: str
    success: int
    goal: int
    delta_t: float
    start_x: float
    start_y: float
    probs: Mapping[str, np.ndarray]


def _choose(probs: np.ndarray, mode: str, rng: np.random.Generator) -> int:
    if mode == "greedy":
        return int(np.argmax(probs))
    if mode == "sample":
        return int(rng.choice(len(probs), p=probs))
    raise ValueError(f"mode must be 'greedy' or 'sample', got {mode!r}")


def predict_next(
    model,
    context: Sequence,
    mode: str = "greedy",
    rng: Optional[np.random.Generator] = None,
) -> Prediction:
    """Predict the next event from a context window.

    The chain conditions each stage on the previous stage's choice:
    flags on the chosen action, time/location bins on action + flags.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    if isinstance(model, MajModel):
        action_probs = np.zeros(N_ACTION_CLASSES)
        action_probs[action_class_index(model.modal_action)] = 1.0
        return Prediction(
            action=model.modal_action,
            success=1,
            goal=0,
            delta_t=model.mean_delta_t,
            start_x=model.mean_start_x,
            start_y=model.mean_start_y,
            probs={"action": action_probs},
        )

    chain: LemChain = model
    codec = chain.codec
    ctx = encode_context(context, chain.context_depth)

    action_logits = nn.forward(chain.model_a, ctx[None, :])[0]
    action_probs = nn.softmax(action_logits)
    action_idx = _choose(action_probs, mode, rng)
    action_onehot = np.zeros(codec.n_actions)
    action_onehot[action_idx] = 1.0

    flag_logits = nn.forward(chain.model_b, np.concatenate([ctx, action_onehot])[None, :])[0]
    success_probs = nn.softmax(flag_logits[0:2])
    goal_probs = nn.softmax(flag_logits[2:4])
    success = _choose(success_probs, mode, rng)
    goal = _choose(goal_probs, mode, rng)

    loc_input = np.concatenate([ctx, action_onehot, [float(success), float(goal)]])
    loc_logits = nn.forward(chain.model_c, loc_input[None, :])[0]
    nt, nx = codec.n_time_bins, codec.n_x_bins
    time_probs = nn.softmax(loc_logits[:nt])
    x_probs = nn.softmax(loc_logits[nt : nt + nx])
    y_probs = nn.softmax(loc_logits[nt + nx :])
    time_bin = _choose(time_probs, mode, rng)
    x_bin = _choose(x_probs, mode, rng)
    y_bin = _choose(y_probs, mode, rng)

    return Prediction(
        action=TRAIN_ACTION_CLASSES[action_idx],
        success=success,
        goal=goal,
        delta_t=codec.decode_time(time_bin),
        start_x=codec.decode_x(x_bin),
        start_y=codec.decode_y(y_bin),
        probs={
            "action": action_probs,
            "success": success_probs,
            "goal": goal_probs,
            "delta_T": time_probs,
            "x": x_probs,
            "y": y_probs,
        },
    )


def shot_probability(model, context: Sequence) -> float:
    """Model probability that the next action is a shot."""
    prediction = predict_next(model, context, mode="greedy")
    return float(prediction.probs["action"][action_class_index(SHOT)])


def random_search(
    space: Mapping[str, object],
    n_trials: int,
    seed: int,
    train_matches: Sequence[Sequence[UiedEvent]],
    valid_matches: Sequence[Sequence[UiedEvent]],
    context_depth: int = 3,
    base_config: Optional[TrainConfig] = None,
) -> Tuple[Dict[str, object], List[Dict[str, object]]]:
    """Uniform random draws (with replacement) over list-valued fields.

    Each trial trains a fresh chain and is scored by its summed best
    validation loss. Deterministic given the seed; returns the best
    draw and the full trial log.
    """
    base_config = base_config or TrainConfig()
    list_keys = sorted(k for k, v in space.items() if isinstance(v, (list, tuple)))
    for key in list_keys:
        if not space[key]:
            raise ValueError(f"search field {key!r} has no choices")
    rng = np.random.default_rng(seed)
    trials: List[Dict[str, object]] = []
    best: Optional[Dict[str, object]] = None
    for trial in range(n_trials):
        draw = {k: (v if not isinstance(v, (list, tuple)) else None) for k, v in space.items()}
        for key in list_keys:
            choices = space[key]
            draw[key] = choices[int(rng.integers(0, len(choices)))]
        config = replace(
            base_config,
            learning_rate=float(draw.get("learning_rate", base_config.learning_rate)),
            batch_size=int(draw.get("batch_size", base_config.batch_size)),
            seed=seed + trial,
        )
        chain = lem_init(
            context_depth,
            hidden_dim=int(draw.get("hidden_dim", 64)),
            num_layers=int(draw.get("num_layers", 1)),
            seed=seed + trial,
        )
        history = train_lem(chain, train_matches, valid_matches, config)
        val_loss = best_validation_loss(history)
        record = {"trial": trial, "config": dict(draw), "val_loss": val_loss}
        trials.append(record)
        if best is None or val_loss < best["val_loss"]:
            best = record
    assert best is not None
    return dict(best["config"]), trials

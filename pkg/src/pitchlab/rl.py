"""Per-player Q-function on frame-level episodes.

States are 92-vectors: the target player, ten teammates and eleven
opponents sorted by distance to the ball, then the ball, each as
(x, y, vx, vy) in the attack-oriented frame. The network maps a state
to 16 action values and trains on the SARSA objective

    L_total = L_td + lambda1 * L_L1 + lambda2 * L_as

where L_td is the mean squared temporal-difference error with frozen
bootstrap targets, L_as a softmax cross-entropy pushing the observed
action's value up, and L_L1 the mean parameter magnitude. The two
weights are independent knobs; increasing the supervision weight trades
TD fit for action accuracy.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import nn
from .core import PitchlabError
from .sar import (
    MOVE_ACTION_BASE,
    N_SAR_ACTIONS,
    AttackSequence,
    EntityState,
    SequenceFrame,
)

STATE_DIM = 92  # (1 target + 10 teammates + 11 opponents + ball) * 4
N_TEAMMATES = 10
N_OPPONENTS = 11
BENCH_POSITION = (-52.5, -34.0)
MAX_MISSING_PLAYERS = 2

N_DIRECTIONS = 8

# States carry raw meters/velocities; the network always sees them
# through this fixed per-slot normalization (positions by the pitch
# half-extents, velocities by the speed cap).
_SLOT_SCALE = np.tile([1.0 / 52.5, 1.0 / 34.0, 1.0 / 12.0, 1.0 / 12.0], STATE_DIM // 4)


def scale_states(states: np.ndarray) -> np.ndarray:
    return np.asarray(states, dtype=np.float64) * _SLOT_SCALE


class DatasetError(PitchlabError, ValueError):
    pass


@dataclass(frozen=True)
class Transition:
    """One SARSA tuple for one player."""

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    next_action: int
    terminal: bool


@dataclass
class RlConfig:
    gamma: float = 1.0
    lambda1: float = 0.01  # L1 regularization weight
    lambda2: float = 0.0001  # action-supervision weight
    learning_rate: float = 0.001
    epochs: int = 20
    batch_size: int = 256
    seed: int = 0
    hidden_dims: Tuple[int, ...] = (64, 64)

    def __post_init__(self) -> None:
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("loss weights must be >= 0")


def q_init(config: RlConfig) -> nn.Mlp:
    return nn.mlp_init([STATE_DIM, *config.hidden_dims, N_SAR_ACTIONS], seed=config.seed)


@dataclass
class StateReport:
    frames_skipped: int = 0
    players_imputed: int = 0


def _entity_block(entity: Optional[EntityState]) -> List[float]:
    if entity is None:
        return [BENCH_POSITION[0], BENCH_POSITION[1], 0.0, 0.0]
    return [entity.x, entity.y, entity.vx, entity.vy]


def _sorted_with_padding(
    players: List[EntityState],
    ball: EntityState,
    slots: int,
    report: Optional[StateReport],
) -> List[Optional[EntityState]]:
    players = sorted(
        players,
        key=lambda p: (math.hypot(p.x - ball.x, p.y - ball.y), p.jersey),
    )
    padded: List[Optional[EntityState]] = list(players[:slots])
    while len(padded) < slots:
        padded.append(None)
        if report is not None:
            report.players_imputed += 1
    return padded


def build_state(
    sequence: AttackSequence,
    frame_index: int,
    target_jersey: int,
    report: Optional[StateReport] = None,
) -> Optional[np.ndarray]:
    """92-value state for one attacking player at one frame.

    Missing players are imputed at the bench corner with zero velocity;
    frames missing more than two of the nominal 22 players are skipped
    (returns None).
    """
    frame = sequence.frames[frame_index]
    if len(frame.players) < 22 - MAX_MISSING_PLAYERS:
        if report is not None:
            report.frames_skipped += 1
        return None
    attacking = sequence.attacking_home
    target = next(
        (p for p in frame.players if p.home_team == attacking and p.jersey == target_jersey),
        None,
    )
    if target is None:
        if report is not None:
            report.frames_skipped += 1
        return None
    teammates = [
        p
        for p in frame.players
        if p.home_team == attacking and p.jersey != target_jersey
    ]
    opponents = [p for p in frame.players if p.home_team != attacking]
    values: List[float] = []
    values.extend(_entity_block(target))
    for entity in _sorted_with_padding(teammates, frame.ball, N_TEAMMATES, report):
        values.extend(_entity_block(entity))
    for entity in _sorted_with_padding(opponents, frame.ball, N_OPPONENTS, report):
        values.extend(_entity_block(entity))
    values.extend(_entity_block(frame.ball))
    return np.array(values, dtype=np.float64)


def _player_action(frame: SequenceFrame, home_team: int, jersey: int) -> Optional[int]:
    for player, action in zip(frame.players, frame.actions):
        if player.home_team == home_team and player.jersey == jersey:
            return action
    return None


def transitions_from_sequence(
    sequence: AttackSequence,
    report: Optional[StateReport] = None,
) -> List[Transition]:
    """Per-attacking-player SARSA tuples; terminal at the final frame."""
    out: List[Transition] = []
    attacking = sequence.attacking_home
    n = len(sequence.frames)
    state_cache: Dict[Tuple[int, int], Optional[np.ndarray]] = {}

    def cached_state(t: int, jersey: int) -> Optional[np.ndarray]:
        key = (t, jersey)
        if key not in state_cache:
            state_cache[key] = build_state(sequence, t, jersey, report)
        return state_cache[key]

    for t in range(n - 1):
        frame = sequence.frames[t]
        next_frame = sequence.frames[t + 1]
        for player in frame.players:
            if player.home_team != attacking:
                continue
            action = _player_action(frame, attacking, player.jersey)
            next_action = _player_action(next_frame, attacking, player.jersey)
            if action is None or next_action is None:
                continue
            state = cached_state(t, player.jersey)
            next_state = cached_state(t + 1, player.jersey)
            if state is None or next_state is None:
                continue
            out.append(
                Transition(
                    state=state,
                    action=action,
                    reward=next_frame.reward,
                    next_state=next_state,
                    next_action=next_action,
                    terminal=(t + 1 == n - 1),
                )
            )
    return out


def transitions_from_sequences(
    sequences: Sequence[AttackSequence],
    report: Optional[StateReport] = None,
) -> List[Transition]:
    out: List[Transition] = []
    for sequence in sequences:
        out.extend(transitions_from_sequence(sequence, report))
    return out


@dataclass
class TransitionBatch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    next_actions: np.ndarray
    terminal: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    def take(self, index: np.ndarray) -> "TransitionBatch":
        return TransitionBatch(
            self.states[index],
            self.actions[index],
            self.rewards[index],
            self.next_states[index],
            self.next_actions[index],
            self.terminal[index],
        )


def stack_transitions(transitions: Sequence[Transition]) -> TransitionBatch:
    if not transitions:
        raise DatasetError("no transitions")
    return TransitionBatch(
        states=np.stack([t.state for t in transitions]),
        actions=np.array([t.action for t in transitions], dtype=np.int64),
        rewards=np.array([t.reward for t in transitions]),
        next_states=np.stack([t.next_state for t in transitions]),
        next_actions=np.array([t.next_action for t in transitions], dtype=np.int64),
        terminal=np.array([t.terminal for t in transitions], dtype=np.float64),
    )


def q_values(q: nn.Mlp, states: np.ndarray) -> np.ndarray:
    """Q(s, .) for raw (unscaled) state rows."""
    states = np.asarray(states, dtype=np.float64)
    if states.ndim == 1:
        states = states[None, :]
    return nn.forward(q, scale_states(states))


def td_target(q: nn.Mlp, transition: Transition, gamma: float) -> float:
    """SARSA bootstrap: r + gamma * Q(s', a'), just r when terminal."""
    if transition.terminal:
        return float(transition.reward)
    q_next = q_values(q, transition.next_state)[0]
    return float(transition.reward + gamma * q_next[transition.next_action])


def _batch_targets(q: nn.Mlp, batch: TransitionBatch, gamma: float) -> np.ndarray:
    q_next = q_values(q, batch.next_states)
    bootstrap = q_next[np.arange(len(batch)), batch.next_actions]
    return batch.rewards + gamma * bootstrap * (1.0 - batch.terminal)


def _l1_value(q: nn.Mlp) -> float:
    total = sum(float(np.abs(l.w).sum() + np.abs(l.b).sum()) for l in q.layers)
    return total / q.param_count()


def total_loss(
    q: nn.Mlp, batch: TransitionBatch, config: RlConfig
) -> Tuple[float, float, float, float]:
    """(L_total, L_td, L_as, L_L1) with bootstrap targets held fixed."""
    q_s = q_values(q, batch.states)
    rows = np.arange(len(batch))
    targets = _batch_targets(q, batch, config.gamma)
    td_err = q_s[rows, batch.actions] - targets
    l_td = float(np.mean(td_err**2))
    l_as = nn.cross_entropy(q_s, batch.actions)
    l_l1 = _l1_value(q)
    return l_td + config.lambda1 * l_l1 + config.lambda2 * l_as, l_td, l_as, l_l1


def _composite_loss_and_grads(
    q: nn.Mlp, batch: TransitionBatch, config: RlConfig, targets: np.ndarray
) -> Tuple[Tuple[float, float, float, float], List[Tuple[np.ndarray, np.ndarray]]]:
    """Semi-gradient: no gradient flows through the bootstrap targets."""
    n = len(batch)
    rows = np.arange(n)
    q_s, caches = nn.forward_cached(q, scale_states(batch.states))
    td_err = q_s[rows, batch.actions] - targets
    l_td = float(np.mean(td_err**2))

    probs = nn.softmax(q_s)
    l_as = nn.cross_entropy(q_s, batch.actions)

    dout = np.zeros_like(q_s)
    dout[rows, batch.actions] += 2.0 * td_err / n
    as_grad = probs.copy()
    as_grad[rows, batch.actions] -= 1.0
    dout += config.lambda2 * as_grad / n

    grads = nn.backward(q, caches, dout)
    p_count = q.param_count()
    l_l1 = _l1_value(q)
    for i, layer in enumerate(q.layers):
        dw, db = grads[i]
        dw += config.lambda1 * np.sign(layer.w) / p_count
        db += config.lambda1 * np.sign(layer.b) / p_count
    l_total = l_td + config.lambda1 * l_l1 + config.lambda2 * l_as
    return (l_total, l_td, l_as, l_l1), grads


def composite_grad_check(
    q: nn.Mlp, batch: TransitionBatch, config: RlConfig, h: float = 1e-5
) -> float:
    """Finite-difference check of the composite loss's semi-gradient.

    Bootstrap targets are computed once and frozen, so the numeric
    derivative perturbs only the Q(s_t, a_t) path (and the explicit
    regularizers), matching the semi-gradient the trainer uses.
    """
    if q.param_count() >= 10_000:
        raise ValueError("composite_grad_check is meant for small networks")
    targets = _batch_targets(q, batch, config.gamma)
    (_, _, _, _), analytic = _composite_loss_and_grads(q, batch, config, targets)

    rows = np.arange(len(batch))

    def frozen_loss() -> float:
        q_s = q_values(q, batch.states)
        td_err = q_s[rows, batch.actions] - targets
        l_td = float(np.mean(td_err**2))
        l_as = nn.cross_entropy(q_s, batch.actions)
        return l_td + config.lambda1 * _l1_value(q) + config.lambda2 * l_as

    worst = 0.0
    for i, layer in enumerate(q.layers):
        for param, grad in ((layer.w, analytic[i][0]), (layer.b, analytic[i][1])):
            flat = param.reshape(-1)
            gflat = grad.reshape(-1)
            for j in range(flat.size):
                original = flat[j]
                flat[j] = original + h
                up = frozen_loss()
                flat[j] = original - h
                down = frozen_loss()
                flat[j] = original
                numeric = (up - down) / (2.0 * h)
                err = abs(gflat[j] - numeric)
                scale = max(abs(gflat[j]), abs(numeric))
                score = err / scale if scale >= 1e-6 else err / 1e-3
                worst = max(worst, score)
    return worst


@dataclass
class RlEpochMetric:
    epoch: int
    train_total: float
    train_td: float
    train_as: float
    train_l1: float
    valid_total: float
    valid_td: float
    valid_accuracy: float


def evaluate_q(q: nn.Mlp, batch: TransitionBatch, gamma: float = 1.0) -> Tuple[float, float]:
    """(action accuracy over the 16 classes, mean squared TD error).

    Accuracy counts transitions whose argmax-Q action (ties to the
    lowest id) matches the observed one.
    """
    q_s = q_values(q, batch.states)
    picks = np.argmax(q_s, axis=1)  # np.argmax ties to the lowest index
    accuracy = float(np.mean(picks == batch.actions))
    targets = _batch_targets(q, batch, gamma)
    td_err = q_s[np.arange(len(batch)), batch.actions] - targets
    return accuracy, float(np.mean(td_err**2))


def evaluate_q_sequences(
    q: nn.Mlp, sequences: Sequence[AttackSequence], gamma: float = 1.0
) -> Tuple[float, float]:
    return evaluate_q(q, stack_transitions(transitions_from_sequences(sequences)), gamma)


def train_q(
    train_sequences: Sequence[AttackSequence],
    valid_sequences: Sequence[AttackSequence],
    config: RlConfig,
) -> Tuple[nn.Mlp, List[RlEpochMetric]]:
    """Mini-batch Adam on shuffled transitions.

    Validation tracks action accuracy and TD loss per epoch; the best
    checkpoint by validation total loss is returned.
    """
    train = stack_transitions(transitions_from_sequences(train_sequences))
    valid = stack_transitions(transitions_from_sequences(valid_sequences))
    return train_q_batches(train, valid, config)


def train_q_batches(
    train: TransitionBatch, valid: TransitionBatch, config: RlConfig
) -> Tuple[nn.Mlp, List[RlEpochMetric]]:
    q = q_init(config)
    state = nn.adam_init(q, config.learning_rate)
    rng = np.random.default_rng(config.seed)
    history: List[RlEpochMetric] = []
    best_loss = math.inf
    best_params: Optional[nn.Mlp] = None
    n = len(train)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        sums = np.zeros(4)
        for lo in range(0, n, config.batch_size):
            batch = train.take(order[lo : lo + config.batch_size])
            targets = _batch_targets(q, batch, config.gamma)
            values, grads = _composite_loss_and_grads(q, batch, config, targets)
            if not np.isfinite(values[0]):
                raise nn.TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}: {values}"
                )
            nn.adam_apply(q, state, grads)
            sums += np.array(values) * len(batch)
        train_total, train_td, train_as, train_l1 = sums / n
        valid_total, valid_td, _, _ = total_loss(q, valid, config)
        valid_accuracy, _ = evaluate_q(q, valid, config.gamma)
        history.append(
            RlEpochMetric(
                epoch=epoch,
                train_total=float(train_total),
                train_td=float(train_td),
                train_as=float(train_as),
                train_l1=float(train_l1),
                valid_total=float(valid_total),
                valid_td=float(valid_td),
                valid_accuracy=float(valid_accuracy),
            )
        )
        if valid_total < best_loss:
            best_loss = valid_total
            best_params = q.copy()
    if best_params is not None:
        q.layers = best_params.layers
    return q, history


@dataclass(frozen=True)
class QVizRecord:
    match_id: int
    frame_id: int
    player_id: int
    x: float
    y: float
    vx: float
    vy: float
    directional_q: Tuple[float, ...]  # 8 values, 0/45/.../315 degrees


def export_q_viz(
    q: nn.Mlp, sequence: AttackSequence, frame_index: int
) -> List[QVizRecord]:
    """Directional Q-values for each attacking player on one frame.

    The eight values are the movement-direction subset of the full
    16-action output, bit-equal to the corresponding entries.
    """
    frame = sequence.frames[frame_index]
    records: List[QVizRecord] = []
    for player in frame.players:
        if player.home_team != sequence.attacking_home:
            continue
        state = build_state(sequence, frame_index, player.jersey)
        if state is None:
            continue
        values = q_values(q, state)[0]
        directional = tuple(
            float(values[MOVE_ACTION_BASE + d]) for d in range(N_DIRECTIONS)
        )
        records.append(
            QVizRecord(
                match_id=sequence.match_id,
                frame_id=frame.frame_id,
                player_id=player.jersey,
                x=player.x,
                y=player.y,
                vx=player.vx,
                vy=player.vy,
                directional_q=directional,
            )
        )
    return records


def write_q_viz(records: Sequence[QVizRecord]) -> bytes:
    """Line-delimited export: ids, position, then the 8 direction values."""
    buf = io.StringIO(newline="")
    for r in records:
        cells = [str(r.match_id), str(r.frame_id), str(r.player_id),
                 "%.6f" % r.x, "%.6f" % r.y]
        cells.extend("%.9f" % v for v in r.directional_q)
        buf.write(",".join(cells) + "\n")
    return buf.getvalue().encode("utf-8")

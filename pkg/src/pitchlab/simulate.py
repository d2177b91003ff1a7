"""Possession rollouts and the per-timestep simulation evaluation.

A rollout feeds each predicted event back into the model context until
an end-of-possession or period marker appears or the step budget runs
out. Evaluation seeds each test possession with its true first event,
aligns simulated step t with true step t, discards excess simulated
events, and aggregates per-timestep action accuracy and time/x/y MAEs
over every possession alive (on both sides) at that timestep.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .core import (
    END_OF_POSSESSION,
    PERIOD_OVER,
    Possession,
    UiedEvent,
    action_class_index,
    is_marker,
)
from .eventmodel import ContextEvent, Prediction, as_context, predict_next

MAX_SIM_STEPS = 26

_STOP_TOKENS = (END_OF_POSSESSION, PERIOD_OVER)


def rollout(
    model,
    seed_context: Sequence,
    mode: str = "greedy",
    max_steps: int = MAX_SIM_STEPS,
    rng: Optional[np.random.Generator] = None,
) -> List[Prediction]:
    """Autoregressive next-event loop from a real possession prefix.

    The terminating marker (when predicted) is included in the returned
    sequence; a model that immediately emits one yields a length-1
    rollout.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    context: List[ContextEvent] = [
        e if isinstance(e, ContextEvent) else as_context(e) for e in seed_context
    ]
    home_team = context[-1].home_team if context else 0
    out: List[Prediction] = []
    for _ in range(max_steps):
        prediction = predict_next(model, context, mode, rng)
        out.append(prediction)
        if prediction.action in _STOP_TOKENS:
            break
        context.append(
            ContextEvent(
                action=prediction.action,
                delta_t=prediction.delta_t,
                start_x=prediction.start_x,
                start_y=prediction.start_y,
                success=prediction.success,
                goal=prediction.goal,
                home_team=home_team,
            )
        )
    return out


def possession_targets(possession: Possession) -> List[UiedEvent]:
    """True events after the seed, up to and including the first marker."""
    targets: List[UiedEvent] = []
    for event in possession.events[1:]:
        targets.append(event)
        if is_marker(event.action):
            break
    return targets


def possession_coverage(possessions: Sequence[Possession], horizon: int = MAX_SIM_STEPS) -> float:
    """Fraction of possessions fully replayable within the horizon."""
    if not possessions:
        return 1.0
    lengths = [len(possession_targets(p)) for p in possessions]
    return float(np.mean([n <= horizon for n in lengths]))


@dataclass
class TimestepRow:
    timestep: int
    event_count: int
    acc_action: Optional[float]
    time_mae: Optional[float]
    x_mae: Optional[float]
    y_mae: Optional[float]


def evaluate_simulation(
    model,
    possessions: Sequence[Possession],
    mode: str = "greedy",
    max_steps: int = MAX_SIM_STEPS,
    seed: int = 0,
) -> List[TimestepRow]:
    """Per-timestep simulation metrics over test possessions.

    event_count(t) counts possessions with at least t true events after
    the seed; metric cells are None (emitted empty, never 0) when no
    possession is alive. Alignment never compares beyond the shorter of
    the simulated and true sequences.
    """
    sums = {
        "n": np.zeros(max_steps),
        "acc": np.zeros(max_steps),
        "dt": np.zeros(max_steps),
        "dx": np.zeros(max_steps),
        "dy": np.zeros(max_steps),
    }
    truth_alive = np.zeros(max_steps, dtype=np.int64)
    for i, possession in enumerate(possessions):
        if not possession.events or is_marker(possession.events[0].action):
            continue
        targets = possession_targets(possession)
        truth_alive[: min(len(targets), max_steps)] += 1
        rng = np.random.default_rng(seed + i)
        simulated = rollout(model, [possession.events[0]], mode, max_steps, rng)
        for t in range(min(len(targets), len(simulated), max_steps)):
            true_event = targets[t]
            sim_event = simulated[t]
            sums["n"][t] += 1
            sums["acc"][t] += float(
                action_class_index(sim_event.action) == action_class_index(true_event.action)
            )
            sums["dt"][t] += abs(sim_event.delta_t - true_event.delta_t)
            sums["dx"][t] += abs(sim_event.start_x - true_event.start_x)
            sums["dy"][t] += abs(sim_event.start_y - true_event.start_y)

    rows: List[TimestepRow] = []
    for t in range(max_steps):
        n = sums["n"][t]
        if truth_alive[t] == 0 or n == 0:
            rows.append(TimestepRow(t + 1, int(truth_alive[t]), None, None, None, None))
        else:
            rows.append(
                TimestepRow(
                    timestep=t + 1,
                    event_count=int(truth_alive[t]),
                    acc_action=float(sums["acc"][t] / n),
                    time_mae=float(sums["dt"][t] / n),
                    x_mae=float(sums["dx"][t] / n),
                    y_mae=float(sums["dy"][t] / n),
                )
            )
    return rows


def write_simulation_loss_csv(rows: Sequence[TimestepRow]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["timestep", "event_count", "acc_action", "time_mae", "x_mae", "y_mae"])
    for row in rows:
        cells = [row.timestep, row.event_count]
        for value in (row.acc_action, row.time_mae, row.x_mae, row.y_mae):
            cells.append("" if value is None else "%.6f" % value)
        writer.writerow(cells)
    return buf.getvalue().encode("utf-8")

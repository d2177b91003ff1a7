"""Raw events to the standardized per-event schema.

The per-match pipeline is map -> segment -> markers -> derive:

1. map provider event names to action tokens (length-split passes),
2. segment possessions on team changes and period boundaries,
3. append end-of-possession / period / game markers,
4. derive the time/space delta features and goal geometry.

The corpus driver runs matches in parallel with a hard determinism
contract: output bytes are a pure function of the input corpus, never
of worker count or scheduling.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field, fields
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from . import actions
from .core import (
    END_OF_POSSESSION,
    GAME_OVER,
    PERIOD_OVER,
    PitchlabError,
    Possession,
    UiedEvent,
    angle2goal,
    dist2goal,
    match_seconds,
    to_uied_coords,
)
from .ingest import RawEvent

UIED_CSV_COLUMNS = (
    "match_id",
    "poss_id",
    "team",
    "home_team",
    "action",
    "success",
    "goal",
    "home_score",
    "away_score",
    "goal_diff",
    "Period",
    "Minute",
    "Second",
    "seconds",
    "delta_T",
    "start_x",
    "start_y",
    "deltaX",
    "deltaY",
    "distance",
    "dist2goal",
    "angle2goal",
)

_FLOAT_FMT = "%.6f"


class UnmappedActionError(PitchlabError, ValueError):
    """A provider event name had no action mapping and on_unmapped=fail."""


class ConversionError(PitchlabError, RuntimeError):
    """A per-match pipeline failed; the message names the match."""


class SplitError(PitchlabError, ValueError):
    """Dataset split request cannot be satisfied."""


@dataclass
class EventDraft:
    """Mutable staging row; frozen into UiedEvent after derivation."""

    match_id: int
    team: str
    home_team: int
    action: str
    success: int
    goal: int
    period: int
    minute: int
    second: float
    start_x: float
    start_y: float
    seconds: float = 0.0
    poss_id: int = -1
    home_score: int = 0
    away_score: int = 0
    goal_diff: int = 0
    delta_t: float = 0.0
    delta_x: float = 0.0
    delta_y: float = 0.0
    distance: float = 0.0
    dist2goal: float = 0.0
    angle2goal: float = 0.0

    def freeze(self) -> UiedEvent:
        return UiedEvent(**{f.name: getattr(self, f.name) for f in fields(UiedEvent)})


@dataclass
class ConvertReport:
    """Aggregated conversion accounting; merge order never matters."""

    events_in: int = 0
    events_out: int = 0
    dropped_unmapped: Counter = field(default_factory=Counter)
    warnings: Counter = field(default_factory=Counter)

    def merge(self, other: "ConvertReport") -> None:
        self.events_in += other.events_in
        self.events_out += other.events_out
        self.dropped_unmapped.update(other.dropped_unmapped)
        self.warnings.update(other.warnings)


@dataclass
class UiedDataset:
    events: List[UiedEvent]
    report: ConvertReport

    def match_ids(self) -> List[int]:
        seen = dict.fromkeys(e.match_id for e in self.events)
        return list(seen)


def map_action(
    raw: RawEvent,
    next_raw: Optional[RawEvent] = None,
):
    """Standardized action for one raw event (token or Unmapped).

    Pass length for length-split names comes from a provider length tag
    when present, else the standardized-meters distance to the next
    event's start.
    """
    start_xy = to_uied_coords(
        raw.raw_x, raw.raw_y, raw.raw_range, "flip_coords" not in raw.tags
    )
    next_xy = None
    if next_raw is not None:
        next_xy = to_uied_coords(
            next_raw.raw_x,
            next_raw.raw_y,
            next_raw.raw_range,
            "flip_coords" not in next_raw.tags,
        )
    return actions.map_action_name(
        raw.provider, raw.provider_event_name, raw.tags, start_xy, next_xy
    )


def segment_possessions(drafts: Sequence[EventDraft]) -> List[List[EventDraft]]:
    """Group an ordered draft stream into possessions.

    A new possession starts when the acting team changes or a period
    boundary occurs; poss_id counts from 0 per match.
    """
    possessions: List[List[EventDraft]] = []
    current: List[EventDraft] = []
    poss_id = -1
    for draft in drafts:
        boundary = (
            not current
            or draft.team != current[-1].team
            or draft.period != current[-1].period
        )
        if boundary:
            if current:
                possessions.append(current)
            current = []
            poss_id += 1
        draft.poss_id = poss_id
        current.append(draft)
    if current:
        possessions.append(current)
    return possessions


def _marker_from(last: EventDraft, action: str) -> EventDraft:
    marker = EventDraft(
        match_id=last.match_id,
        team=last.team,
        home_team=last.home_team,
        action=action,
        success=0,
        goal=0,
        period=last.period,
        minute=last.minute,
        second=last.second,
        start_x=last.start_x,
        start_y=last.start_y,
    )
    marker.seconds = last.seconds
    marker.poss_id = last.poss_id
    marker.home_score = last.home_score
    marker.away_score = last.away_score
    return marker


def append_markers(possessions: Sequence[Sequence[EventDraft]]) -> List[EventDraft]:
    """Flatten possessions into a stream with terminal markers.

    Every possession gets an end-of-possession marker; each period's
    last possession additionally gets period_over, and the final one
    game_over. Markers inherit the preceding event's location and time,
    so their delta features derive to zero.
    """
    stream: List[EventDraft] = []
    for i, possession in enumerate(possessions):
        stream.extend(possession)
        last = possession[-1]
        stream.append(_marker_from(last, END_OF_POSSESSION))
        next_possession = possessions[i + 1] if i + 1 < len(possessions) else None
        if next_possession is None or next_possession[0].period != last.period:
            stream.append(_marker_from(last, PERIOD_OVER))
        if next_possession is None:
            stream.append(_marker_from(last, GAME_OVER))
    return stream


def derive_event_features(
    stream: Sequence[EventDraft],
    report: Optional[ConvertReport] = None,
) -> List[UiedEvent]:
    """Fill derived fields and freeze drafts into standardized events.

    Delta features are possession-relative: the first event of each
    possession (and hence of each match) has delta_T = deltaX = deltaY
    = distance = 0, so possession delta_T sums telescope exactly to the
    possession duration. Provider clock regressions clamp delta_T to 0
    and are counted.
    """
    report = report if report is not None else ConvertReport()
    out: List[UiedEvent] = []
    prev: Optional[EventDraft] = None
    for draft in stream:
        same_possession = (
            prev is not None
            and prev.match_id == draft.match_id
            and prev.poss_id == draft.poss_id
        )
        if same_possession:
            delta_t = draft.seconds - prev.seconds
            if delta_t < 0:
                report.warnings["clock_regression"] += 1
                delta_t = 0.0
            draft.delta_t = delta_t
            draft.delta_x = draft.start_x - prev.start_x
            draft.delta_y = draft.start_y - prev.start_y
            draft.distance = math.hypot(draft.delta_x, draft.delta_y)
        else:
            draft.delta_t = 0.0
            draft.delta_x = 0.0
            draft.delta_y = 0.0
            draft.distance = 0.0
        draft.dist2goal = dist2goal(draft.start_x, draft.start_y)
        draft.angle2goal = angle2goal(draft.start_x, draft.start_y)
        draft.goal_diff = draft.home_score - draft.away_score
        event = draft.freeze()
        event.validate()
        out.append(event)
        prev = draft
    return out


def convert_match(
    raw_events: Sequence[RawEvent],
    on_unmapped: str = "drop",
) -> Tuple[List[UiedEvent], ConvertReport]:
    """Run the full per-match pipeline on one match's raw events."""
    if on_unmapped not in ("drop", "fail"):
        raise ValueError(f"on_unmapped must be 'drop' or 'fail', got {on_unmapped!r}")
    report = ConvertReport(events_in=len(raw_events))

    drafts: List[EventDraft] = []
    home_score = 0
    away_score = 0
    for i, raw in enumerate(raw_events):
        next_raw = raw_events[i + 1] if i + 1 < len(raw_events) else None
        token = map_action(raw, next_raw)
        is_home = "side=home" in raw.tags
        scored_goal = "goal" in raw.tags
        own_goal = "own_goal" in raw.tags
        if isinstance(token, actions.Unmapped):
            if on_unmapped == "fail":
                raise UnmappedActionError(
                    f"no action mapping for {raw.provider!r} event "
                    f"{token.provider_event_name!r}"
                )
            report.dropped_unmapped[token.provider_event_name] += 1
            # a goal on a dropped row still changes the score
            if scored_goal:
                home_score, away_score = (
                    (home_score + 1, away_score) if is_home else (home_score, away_score + 1)
                )
            if own_goal:
                home_score, away_score = (
                    (home_score, away_score + 1) if is_home else (home_score + 1, away_score)
                )
            continue
        x, y = to_uied_coords(
            raw.raw_x, raw.raw_y, raw.raw_range, "flip_coords" not in raw.tags
        )
        draft = EventDraft(
            match_id=raw.match_id,
            team=raw.team_ref,
            home_team=1 if is_home else 0,
            action=token,
            success=0 if "not_accurate" in raw.tags else 1,
            goal=1 if scored_goal else 0,
            period=raw.period,
            minute=raw.clock_minute,
            second=raw.clock_second,
            start_x=x,
            start_y=y,
        )
        draft.seconds = match_seconds(raw.period, raw.clock_minute, raw.clock_second)
        # score context entering the event; goals apply afterwards
        draft.home_score = home_score
        draft.away_score = away_score
        drafts.append(draft)
        if scored_goal:
            home_score, away_score = (
                (home_score + 1, away_score) if is_home else (home_score, away_score + 1)
            )
        if own_goal:
            home_score, away_score = (
                (home_score, away_score + 1) if is_home else (home_score + 1, away_score)
            )

    possessions = segment_possessions(drafts)
    stream = append_markers(possessions)
    events = derive_event_features(stream, report)
    report.events_out = len(events)
    return events, report


def _convert_match_task(args) -> Tuple[int, List[UiedEvent], ConvertReport]:
    match_id, raw_events, on_unmapped = args
    try:
        events, report = convert_match(raw_events, on_unmapped)
    except Exception as exc:
        raise ConversionError(f"match {match_id}: {exc}") from exc
    return match_id, events, report


def group_by_match(raw_events: Iterable[RawEvent]) -> Dict[int, List[RawEvent]]:
    by_match: Dict[int, List[RawEvent]] = {}
    for raw in raw_events:
        by_match.setdefault(raw.match_id, []).append(raw)
    return by_match


def convert_corpus(
    raw_matches: Union[Iterable[RawEvent], Mapping[int, Sequence[RawEvent]]],
    max_workers: int = 1,
    on_unmapped: str = "drop",
) -> UiedDataset:
    """Convert a corpus of matches, at most max_workers concurrently.

    Output order is by ascending match id regardless of scheduling, so
    serialized output is byte-identical for any worker count. Any
    per-match failure aborts the corpus, naming the match.
    """
    if max_workers < 1:
        raise ValueError("max_workers must be >= 1")
    if isinstance(raw_matches, Mapping):
        by_match = {mid: list(evs) for mid, evs in raw_matches.items()}
    else:
        by_match = group_by_match(raw_matches)
    tasks = [(mid, by_match[mid], on_unmapped) for mid in sorted(by_match)]

    results: Dict[int, Tuple[List[UiedEvent], ConvertReport]] = {}
    if max_workers == 1 or len(tasks) <= 1:
        for task in tasks:
            mid, events, report = _convert_match_task(task)
            results[mid] = (events, report)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=max_workers) as pool:
            for mid, events, report in pool.map(_convert_match_task, tasks):
                results[mid] = (events, report)

    dataset = UiedDataset(events=[], report=ConvertReport())
    for mid in sorted(results):
        events, report = results[mid]
        dataset.events.extend(events)
        dataset.report.merge(report)
    return dataset


def write_uied_csv(events: Sequence[UiedEvent]) -> bytes:
    """Serialize events in the standardized column order (UTF-8 CSV)."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(UIED_CSV_COLUMNS)
    for e in events:
        writer.writerow(
            [
                e.match_id,
                e.poss_id,
                e.team,
                e.home_team,
                e.action,
                e.success,
                e.goal,
                e.home_score,
                e.away_score,
                e.goal_diff,
                e.period,
                e.minute,
                _FLOAT_FMT % e.second,
                _FLOAT_FMT % e.seconds,
                _FLOAT_FMT % e.delta_t,
                _FLOAT_FMT % e.start_x,
                _FLOAT_FMT % e.start_y,
                _FLOAT_FMT % e.delta_x,
                _FLOAT_FMT % e.delta_y,
                _FLOAT_FMT % e.distance,
                _FLOAT_FMT % e.dist2goal,
                _FLOAT_FMT % e.angle2goal,
            ]
        )
    return buf.getvalue().encode("utf-8")


def read_uied_csv(data: Union[bytes, str]) -> List[UiedEvent]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.DictReader(io.StringIO(data, newline=""))
    out: List[UiedEvent] = []
    for row in reader:
        out.append(
            UiedEvent(
                match_id=int(row["match_id"]),
                poss_id=int(row["poss_id"]),
                team=row["team"],
                home_team=int(row["home_team"]),
                action=row["action"],
                success=int(row["success"]),
                goal=int(row["goal"]),
                home_score=int(row["home_score"]),
                away_score=int(row["away_score"]),
                goal_diff=int(row["goal_diff"]),
                period=int(row["Period"]),
                minute=int(row["Minute"]),
                second=float(row["Second"]),
                seconds=float(row["seconds"]),
                delta_t=float(row["delta_T"]),
                start_x=float(row["start_x"]),
                start_y=float(row["start_y"]),
                delta_x=float(row["deltaX"]),
                delta_y=float(row["deltaY"]),
                distance=float(row["distance"]),
                dist2goal=float(row["dist2goal"]),
                angle2goal=float(row["angle2goal"]),
            )
        )
    return out


def group_possessions(events: Sequence[UiedEvent]) -> List[Possession]:
    """Group a finished event stream into Possession value objects."""
    possessions: List[Possession] = []
    bucket: List[UiedEvent] = []
    for event in events:
        if bucket and (
            event.match_id != bucket[0].match_id or event.poss_id != bucket[0].poss_id
        ):
            possessions.append(_to_possession(bucket))
            bucket = []
        bucket.append(event)
    if bucket:
        possessions.append(_to_possession(bucket))
    return possessions


def _to_possession(bucket: List[UiedEvent]) -> Possession:
    return Possession(
        poss_id=bucket[0].poss_id,
        match_id=bucket[0].match_id,
        team=bucket[0].team,
        events=tuple(bucket),
        start_seconds=bucket[0].seconds,
        end_seconds=bucket[-1].seconds,
    )


def split_matches(
    match_ids: Sequence[int],
    ratios: Tuple[float, float, float],
) -> Tuple[List[int], List[int], List[int]]:
    """Partition match ids into train/valid/test by ratio.

    Ids are sorted ascending; the valid and test sizes come from
    cumulative floors over the non-train ratios and train takes the
    remainder, so e.g. 55 matches at (0.50, 0.05, 0.45) give 28/2/25
    and 10 at (0.6, 0.2, 0.2) give 6/2/2.
    """
    r_train, r_valid, r_test = ratios
    if min(ratios) < 0:
        raise SplitError(f"ratios must be non-negative, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"ratios must sum to 1, got {ratios}")
    ids = sorted(match_ids)
    n = len(ids)
    nonzero = sum(1 for r in ratios if r > 0)
    if n < nonzero:
        raise SplitError(f"{n} matches cannot fill {nonzero} non-empty partitions")
    n_valid = math.floor(n * r_valid)
    n_valid_test = math.floor(n * (r_valid + r_test))
    n_test = n_valid_test - n_valid
    n_train = n - n_valid - n_test
    train = ids[:n_train]
    valid = ids[n_train : n_train + n_valid]
    test = ids[n_train + n_valid :]
    return train, valid, test

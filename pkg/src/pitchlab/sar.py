"""Frame-level dataset: synchronized events, kinematics, attack episodes.

Tracking rows arrive in center-origin meters. Per entity, gaps up to
max_gap frames are linearly interpolated, larger gaps split the stream,
velocity and acceleration come from central differences (one-sided at
segment ends), and implausible speeds are clamped.

Attack sequences are 50-300 frame spans of one team's in-play events;
each becomes an RL episode whose frames are oriented so the attacking
team plays toward +x and whose only nonzero reward sits on the final
frame: +1 for a goal, -1 when the opponent's next attack scores, else
an expected-possession-value lookup at the final ball position.

The shipped EPV surface is a logistic-in-goal-distance surrogate, NOT
the externally published EPV model; supply your own grid file for
research use.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .core import PitchlabError, SarEventFrame, SarTrackingFrame
from .ingest import RawTrackingRow

HALF_LENGTH = 52.5
HALF_WIDTH = 34.0
COORD_SLACK = 1.0  # clamp up to 1 m out of range; drop beyond

DEFAULT_FRAME_RATE = 25.0
DEFAULT_MAX_GAP = 13  # ~0.5 s at 25 Hz
MAX_SPEED = 12.0  # m/s
IDLE_SPEED = 0.5  # below this, off-ball action is idle

MIN_SEQUENCE_FRAMES = 50
MAX_SEQUENCE_FRAMES = 300

SYNC_TOLERANCE_FRAMES = 2
MAX_UNMATCHED_FRACTION = 0.05

# 16-way action vocabulary: 7 on-ball actions, 8 movement directions
# (45 degree bins, 0 = attacking +x, counter-clockwise), idle.
SAR_ACTIONS = (
    "pass",
    "through_pass",
    "shot",
    "cross",
    "dribble",
    "ball_recovery",
    "defensive_action",
    "move_0",
    "move_45",
    "move_90",
    "move_135",
    "move_180",
    "move_225",
    "move_270",
    "move_315",
    "idle",
)
N_SAR_ACTIONS = 16
MOVE_ACTION_BASE = 7
IDLE_ACTION = 15

_ON_BALL_NAMES: Mapping[str, str] = {
    "pass": "pass",
    "through_pass": "through_pass",
    "through pass": "through_pass",
    "shot": "shot",
    "cross": "cross",
    "dribble": "dribble",
    "ball_recovery": "ball_recovery",
    "recovery": "ball_recovery",
    "block": "defensive_action",
    "clearance": "defensive_action",
    "interception": "defensive_action",
    "tackle": "defensive_action",
    "defensive_action": "defensive_action",
}

SAR_ACTION_IDS = {name: i for i, name in enumerate(SAR_ACTIONS)}


class SyncError(PitchlabError, RuntimeError):
    """Too many events could not be attached to tracking frames."""


class SarSchemaError(PitchlabError, ValueError):
    pass


def sar_action_id(name: str) -> int:
    canonical = _ON_BALL_NAMES.get(name.strip().casefold())
    if canonical is None:
        raise SarSchemaError(f"unknown frame-level action {name!r}")
    return SAR_ACTION_IDS[canonical]


def action_flags(name: str) -> Dict[str, int]:
    """Table-style indicator flags for one on-ball action name.

    Cross and through-pass rows are pass subtypes, so they set is_pass
    as well.
    """
    normalized = name.strip().casefold()
    canonical = _ON_BALL_NAMES.get(normalized)
    if canonical is None:
        raise SarSchemaError(f"unknown frame-level action {name!r}")
    flags = dict.fromkeys(
        (
            "is_shot",
            "is_pass",
            "is_dribble",
            "is_cross",
            "is_through_pass",
            "is_ball_recovery",
            "is_block",
            "is_clearance",
            "is_interception",
        ),
        0,
    )
    if canonical == "shot":
        flags["is_shot"] = 1
    elif canonical == "pass":
        flags["is_pass"] = 1
    elif canonical == "through_pass":
        flags["is_pass"] = 1
        flags["is_through_pass"] = 1
    elif canonical == "cross":
        flags["is_pass"] = 1
        flags["is_cross"] = 1
    elif canonical == "dribble":
        flags["is_dribble"] = 1
    elif canonical == "ball_recovery":
        flags["is_ball_recovery"] = 1
    elif canonical == "defensive_action":
        if normalized == "block":
            flags["is_block"] = 1
        elif normalized == "clearance":
            flags["is_clearance"] = 1
        elif normalized == "interception":
            flags["is_interception"] = 1
    return flags


def movement_action(vx: float, vy: float) -> int:
    """Direction-bin (or idle) action id from a velocity vector."""
    if math.hypot(vx, vy) < IDLE_SPEED:
        return IDLE_ACTION
    angle = math.degrees(math.atan2(vy, vx)) % 360.0
    return MOVE_ACTION_BASE + int(math.floor((angle + 22.5) / 45.0)) % 8


@dataclass
class KinematicsReport:
    rows_in: int = 0
    rows_out: int = 0
    warnings: Counter = field(default_factory=Counter)


def _clamp_coord(value: float, half_extent: float) -> Optional[float]:
    if abs(value) <= half_extent:
        return value
    if abs(value) <= half_extent + COORD_SLACK:
        return math.copysign(half_extent, value)
    return None


def compute_kinematics(
    tracking: Sequence[RawTrackingRow],
    frame_rate: float = DEFAULT_FRAME_RATE,
    max_gap: int = DEFAULT_MAX_GAP,
    report: Optional[KinematicsReport] = None,
) -> List[SarTrackingFrame]:
    """Interpolate gaps and derive velocity/acceleration per entity.

    Central differences are exact for polynomial motion up to degree 2
    (positions) and 1 (velocities) at interior frames. Ball rows use
    home_team = -1 and jersey -1.
    """
    if frame_rate <= 0:
        raise SarSchemaError(f"frame_rate must be positive, got {frame_rate}")
    report = report if report is not None else KinematicsReport()
    entities: Dict[Tuple[int, str, int], List[Tuple[int, float, float]]] = {}
    for row in tracking:
        report.rows_in += 1
        x = _clamp_coord(row.raw_x, HALF_LENGTH)
        y = _clamp_coord(row.raw_y, HALF_WIDTH)
        if x is None or y is None:
            report.warnings["coordinate_rejected"] += 1
            continue
        if x != row.raw_x or y != row.raw_y:
            report.warnings["coordinate_clamped"] += 1
        jersey = -1 if row.side == "ball" else int(row.jersey_number or 0)
        key = (row.match_id, row.side, jersey)
        entities.setdefault(key, []).append((row.frame_id, x, y))

    out: List[SarTrackingFrame] = []
    for (match_id, side, jersey) in sorted(entities):
        samples = sorted(entities[(match_id, side, jersey)])
        home_team = {"home": 1, "away": 0, "ball": -1}[side]
        for segment in _split_segments(samples, max_gap):
            frames, xs, ys = _interpolate(segment)
            vx, vy = _differentiate(xs, frame_rate), _differentiate(ys, frame_rate)
            vx, vy = _clamp_speeds(vx, vy, report)
            ax, ay = _differentiate(vx, frame_rate), _differentiate(vy, frame_rate)
            for i, frame_id in enumerate(frames):
                out.append(
                    SarTrackingFrame(
                        match_id=match_id,
                        frame_id=frame_id,
                        home_team=home_team,
                        jersey_number_id=jersey,
                        x=xs[i],
                        y=ys[i],
                        vx=vx[i],
                        vy=vy[i],
                        ax=ax[i],
                        ay=ay[i],
                    )
                )
                report.rows_out += 1
    out.sort(key=lambda f: (f.match_id, f.frame_id, -f.home_team, f.jersey_number_id))
    return out


def _split_segments(
    samples: List[Tuple[int, float, float]], max_gap: int
) -> List[List[Tuple[int, float, float]]]:
    segments: List[List[Tuple[int, float, float]]] = []
    current: List[Tuple[int, float, float]] = []
    for sample in samples:
        if current and sample[0] - current[-1][0] > max_gap + 1:
            segments.append(current)
            current = []
        current.append(sample)
    if current:
        segments.append(current)
    return segments


def _interpolate(
    segment: List[Tuple[int, float, float]]
) -> Tuple[List[int], np.ndarray, np.ndarray]:
    first, last = segment[0][0], segment[-1][0]
    frames = list(range(first, last + 1))
    known_frames = np.array([s[0] for s in segment], dtype=np.float64)
    xs = np.interp(frames, known_frames, [s[1] for s in segment])
    ys = np.interp(frames, known_frames, [s[2] for s in segment])
    return frames, xs, ys


def _differentiate(values: np.ndarray, frame_rate: float) -> np.ndarray:
    n = len(values)
    out = np.zeros(n)
    if n == 1:
        return out
    out[1:-1] = (values[2:] - values[:-2]) * frame_rate / 2.0
    out[0] = (values[1] - values[0]) * frame_rate
    out[-1] = (values[-1] - values[-2]) * frame_rate
    return out


def _clamp_speeds(
    vx: np.ndarray, vy: np.ndarray, report: KinematicsReport
) -> Tuple[np.ndarray, np.ndarray]:
    speed = np.hypot(vx, vy)
    over = speed > MAX_SPEED
    if np.any(over):
        report.warnings["speed_clamped"] += int(np.sum(over))
        scale = np.ones_like(speed)
        scale[over] = MAX_SPEED / speed[over]
        vx = vx * scale
        vy = vy * scale
    return vx, vy


@dataclass
class SarEventDraft:
    """Mutable staging row for one frame-level event."""

    match_id: int
    frame_id: int
    team: str
    team_id: int
    home_team: int
    player_name: str
    player_id: int
    jersey_number: int
    player_role_id: int
    action: str
    success: int
    is_goal: int
    period: int
    seconds: float
    ball_touch: int
    attack_direction: str = ""  # "lr"/"rl" or empty for derived
    start_x: float = 0.0
    start_y: float = 0.0
    ball_x: float = 0.0
    ball_y: float = 0.0
    series_num: int = 0
    history_num: int = 0
    attack_history_num: int = 0
    attack_start_num: int = 0
    attack_end_history_num: int = 0
    synced_frame: Optional[int] = None

    def freeze(self) -> SarEventFrame:
        flags = action_flags(self.action)
        return SarEventFrame(
            match_id=self.match_id,
            frame_id=self.frame_id,
            team=self.team,
            team_id=self.team_id,
            home_team=self.home_team,
            player_name=self.player_name,
            player_id=self.player_id,
            jersey_number=self.jersey_number,
            player_role_id=self.player_role_id,
            action=self.action,
            action_id=sar_action_id(self.action),
            success=self.success,
            is_goal=self.is_goal,
            period=self.period,
            seconds=self.seconds,
            start_x=self.start_x,
            start_y=self.start_y,
            ball_x=self.ball_x,
            ball_y=self.ball_y,
            ball_touch=self.ball_touch,
            series_num=self.series_num,
            history_num=self.history_num,
            attack_history_num=self.attack_history_num,
            attack_start_num=self.attack_start_num,
            attack_end_history_num=self.attack_end_history_num,
            **flags,
        )


class TrackingIndex:
    """Per-frame entity lookup over a kinematics-derived stream."""

    def __init__(self, tracking: Sequence[SarTrackingFrame]):
        self.by_frame: Dict[int, List[SarTrackingFrame]] = {}
        for row in tracking:
            self.by_frame.setdefault(row.frame_id, []).append(row)
        self.frames = sorted(self.by_frame)
        self._frame_array = np.array(self.frames, dtype=np.int64)

    def nearest_frame(self, frame_id: int, tolerance: int) -> Optional[int]:
        if not self.frames:
            return None
        pos = int(np.searchsorted(self._frame_array, frame_id))
        candidates = []
        if pos < len(self.frames):
            candidates.append(self.frames[pos])
        if pos > 0:
            candidates.append(self.frames[pos - 1])
        best = min(candidates, key=lambda f: (abs(f - frame_id), f))
        return best if abs(best - frame_id) <= tolerance else None

    def entity(self, frame_id: int, home_team: int, jersey: int) -> Optional[SarTrackingFrame]:
        for row in self.by_frame.get(frame_id, ()):
            if row.home_team == home_team and row.jersey_number_id == jersey:
                return row
        return None

    def ball(self, frame_id: int) -> Optional[SarTrackingFrame]:
        return self.entity(frame_id, -1, -1)

    def players(self, frame_id: int) -> List[SarTrackingFrame]:
        return [r for r in self.by_frame.get(frame_id, ()) if r.home_team in (0, 1)]


def sync_frames(
    events: Sequence[SarEventDraft],
    tracking: Sequence[SarTrackingFrame],
    report: Optional[KinematicsReport] = None,
) -> List[SarEventDraft]:
    """Attach ball/player coordinates from the tracking frame.

    Events whose frame has no tracking attach to the nearest frame
    within +-2 frames; others are flagged unmatched. More than 5%
    unmatched events in a match is a synchronization error.
    """
    report = report if report is not None else KinematicsReport()
    index = TrackingIndex(tracking)
    unmatched = 0
    for event in events:
        frame = index.nearest_frame(event.frame_id, SYNC_TOLERANCE_FRAMES)
        if frame is None:
            unmatched += 1
            report.warnings["unmatched_event"] += 1
            event.synced_frame = None
            continue
        event.synced_frame = frame
        ball = index.ball(frame)
        if ball is not None:
            event.ball_x, event.ball_y = ball.x, ball.y
        player = index.entity(frame, event.home_team, event.jersey_number)
        if player is not None:
            event.start_x, event.start_y = player.x, player.y
        elif ball is not None:
            # untracked actor: the on-ball player stands at the ball
            event.start_x, event.start_y = ball.x, ball.y
            report.warnings["player_position_from_ball"] += 1
    if events and unmatched / len(events) > MAX_UNMATCHED_FRACTION:
        raise SyncError(
            f"{unmatched}/{len(events)} events have no tracking frame within "
            f"{SYNC_TOLERANCE_FRAMES} frames"
        )
    return list(events)


def derive_numbering(events: Sequence[SarEventDraft]) -> List[SarEventDraft]:
    """Fill series/history/attack numbering over a frame-ordered stream.

    history_num counts events from 1. series_num counts in-play runs.
    An attack is a contiguous same-team span of in-play events; attacks
    also break on out-of-play events.
    """
    ordered = sorted(events, key=lambda e: (e.frame_id, e.history_num))
    series = 0
    attack = 0
    prev_touch = 0
    prev_team: Optional[str] = None
    for i, event in enumerate(ordered):
        event.history_num = i + 1
        if event.ball_touch == 1 and prev_touch == 0:
            series += 1
        if event.ball_touch == 1 and (prev_touch == 0 or event.team != prev_team):
            attack += 1
        event.series_num = max(series, 1)
        event.attack_history_num = max(attack, 1)
        prev_touch = event.ball_touch
        prev_team = event.team if event.ball_touch == 1 else None
    spans: Dict[int, Tuple[int, int]] = {}
    for event in ordered:
        lo, hi = spans.get(event.attack_history_num, (event.history_num, event.history_num))
        spans[event.attack_history_num] = (min(lo, event.history_num), max(hi, event.history_num))
    for event in ordered:
        event.attack_start_num, event.attack_end_history_num = spans[event.attack_history_num]
    return ordered


@dataclass(frozen=True)
class EntityState:
    home_team: int  # 1 home, 0 away, -1 ball
    jersey: int
    x: float
    y: float
    vx: float
    vy: float


@dataclass(frozen=True)
class SequenceFrame:
    frame_id: int
    players: Tuple[EntityState, ...]
    ball: EntityState
    actions: Tuple[int, ...]  # aligned with players
    reward: float


@dataclass(frozen=True)
class AttackSequence:
    attack_history_num: int
    match_id: int
    attacking_home: int  # 1 when the home team attacks
    frames: Tuple[SequenceFrame, ...]
    ends_with_goal: bool

    def validate(self) -> None:
        n = len(self.frames)
        if not (MIN_SEQUENCE_FRAMES <= n <= MAX_SEQUENCE_FRAMES):
            raise ValueError(f"sequence has {n} frames, outside [50, 300]")
        nonzero = [i for i, f in enumerate(self.frames) if f.reward != 0.0]
        if nonzero and nonzero != [n - 1]:
            raise ValueError("nonzero reward only allowed on the final frame")


@dataclass
class SegmentationReport:
    kept: int = 0
    dropped_short: int = 0
    dropped_long: int = 0
    warnings: Counter = field(default_factory=Counter)


def _orient(value: float, flip: bool) -> float:
    return -value if flip else value


def segment_attack_sequences(
    events: Sequence[SarEventFrame],
    tracking: Sequence[SarTrackingFrame],
    report: Optional[SegmentationReport] = None,
    directions: Optional[Mapping[int, str]] = None,
) -> List[AttackSequence]:
    """Cut per-attack episodes out of the synchronized streams.

    Sequences outside the 50-300 frame window are dropped and counted.
    Frames are rotated 180 degrees when the attack plays right-to-left
    (from the per-attack direction map, else the sign of the net ball
    displacement), so every episode attacks toward +x.
    """
    report = report if report is not None else SegmentationReport()
    index = TrackingIndex(tracking)
    by_attack: Dict[int, List[SarEventFrame]] = {}
    for event in events:
        if event.ball_touch == 1:
            by_attack.setdefault(event.attack_history_num, []).append(event)

    sequences: List[AttackSequence] = []
    for attack_num in sorted(by_attack):
        attack_events = sorted(by_attack[attack_num], key=lambda e: e.frame_id)
        start, end = attack_events[0].frame_id, attack_events[-1].frame_id
        span_frames = [f for f in index.frames if start <= f <= end]
        n = len(span_frames)
        if n < MIN_SEQUENCE_FRAMES:
            report.dropped_short += 1
            continue
        if n > MAX_SEQUENCE_FRAMES:
            report.dropped_long += 1
            continue

        direction = (directions or {}).get(attack_num, "")
        if direction not in ("lr", "rl"):
            first_ball = index.ball(span_frames[0])
            last_ball = index.ball(span_frames[-1])
            if first_ball is not None and last_ball is not None:
                direction = "lr" if last_ball.x >= first_ball.x else "rl"
            else:
                direction = "lr"
        flip = direction == "rl"

        on_ball: Dict[int, Tuple[int, int, int]] = {}
        for event in attack_events:
            on_ball[event.frame_id] = (event.home_team, event.jersey_number, event.action_id)

        frames: List[SequenceFrame] = []
        skipped_ball = 0
        for frame_id in span_frames:
            ball_row = index.ball(frame_id)
            if ball_row is None:
                skipped_ball += 1
                continue
            players = []
            actions = []
            for row in sorted(
                index.players(frame_id), key=lambda r: (-r.home_team, r.jersey_number_id)
            ):
                state = EntityState(
                    home_team=row.home_team,
                    jersey=row.jersey_number_id,
                    x=_orient(row.x, flip),
                    y=_orient(row.y, flip),
                    vx=_orient(row.vx, flip),
                    vy=_orient(row.vy, flip),
                )
                players.append(state)
                tagged = on_ball.get(frame_id)
                if tagged is not None and tagged[0] == row.home_team and tagged[1] == row.jersey_number_id:
                    actions.append(tagged[2])
                else:
                    actions.append(movement_action(state.vx, state.vy))
            ball_state = EntityState(
                home_team=-1,
                jersey=-1,
                x=_orient(ball_row.x, flip),
                y=_orient(ball_row.y, flip),
                vx=_orient(ball_row.vx, flip),
                vy=_orient(ball_row.vy, flip),
            )
            frames.append(
                SequenceFrame(
                    frame_id=frame_id,
                    players=tuple(players),
                    ball=ball_state,
                    actions=tuple(actions),
                    reward=0.0,
                )
            )
        if skipped_ball:
            report.warnings["frame_without_ball"] += skipped_ball
        if not (MIN_SEQUENCE_FRAMES <= len(frames) <= MAX_SEQUENCE_FRAMES):
            report.dropped_short += 1
            continue
        sequences.append(
            AttackSequence(
                attack_history_num=attack_num,
                match_id=attack_events[0].match_id,
                attacking_home=attack_events[0].home_team,
                frames=tuple(frames),
                ends_with_goal=any(e.is_goal == 1 for e in attack_events),
            )
        )
        report.kept += 1
    return sequences


@dataclass(frozen=True)
class EpvGrid:
    """Expected-possession-value surface over center-origin coordinates."""

    nx: int
    ny: int
    values: np.ndarray  # (nx, ny), in [0, 1]

    def __post_init__(self) -> None:
        if self.values.shape != (self.nx, self.ny):
            raise ValueError(f"values shape {self.values.shape} != ({self.nx}, {self.ny})")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    def lookup(self, x: float, y: float) -> float:
        """Bilinear interpolation between cell centers, edge-clamped."""
        u = (x + HALF_LENGTH) / (2 * HALF_LENGTH) * self.nx - 0.5
        v = (y + HALF_WIDTH) / (2 * HALF_WIDTH) * self.ny - 0.5
        u = min(max(u, 0.0), self.nx - 1.0)
        v = min(max(v, 0.0), self.ny - 1.0)
        i0, j0 = int(math.floor(u)), int(math.floor(v))
        i1, j1 = min(i0 + 1, self.nx - 1), min(j0 + 1, self.ny - 1)
        fu, fv = u - i0, v - j0
        top = self.values[i0, j0] * (1 - fu) + self.values[i1, j0] * fu
        bottom = self.values[i0, j1] * (1 - fu) + self.values[i1, j1] * fu
        return float(top * (1 - fv) + bottom * fv)


def epv_logistic(goal_distance: float) -> float:
    """The shipped surrogate value curve (declared, not the cited EPV)."""
    return 1.0 / (1.0 + math.exp((goal_distance - 25.0) / 8.0))


def default_epv(nx: int = 16, ny: int = 12) -> EpvGrid:
    values = np.zeros((nx, ny))
    for i in range(nx):
        x = -HALF_LENGTH + (i + 0.5) * (2 * HALF_LENGTH) / nx
        for j in range(ny):
            y = -HALF_WIDTH + (j + 0.5) * (2 * HALF_WIDTH) / ny
            values[i, j] = epv_logistic(math.hypot(HALF_LENGTH - x, 0.0 - y))
    return EpvGrid(nx=nx, ny=ny, values=values)


def write_epv_grid(grid: EpvGrid) -> bytes:
    lines = [f"{grid.nx} {grid.ny}"]
    for j in range(grid.ny):
        lines.append(" ".join("%.9f" % grid.values[i, j] for i in range(grid.nx)))
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_epv_grid(data: Union[bytes, str]) -> EpvGrid:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = [line for line in data.splitlines() if line.strip()]
    nx, ny = (int(v) for v in lines[0].split())
    if len(lines) - 1 != ny:
        raise SarSchemaError(f"expected {ny} grid rows, found {len(lines) - 1}")
    values = np.zeros((nx, ny))
    for j in range(ny):
        row = [float(v) for v in lines[1 + j].split()]
        if len(row) != nx:
            raise SarSchemaError(f"grid row {j} has {len(row)} values, expected {nx}")
        values[:, j] = row
    return EpvGrid(nx=nx, ny=ny, values=values)


def assign_rewards(
    sequence: AttackSequence,
    opponent_scored_next: Optional[bool],
    epv: EpvGrid,
) -> AttackSequence:
    """Place the episode's single terminal reward.

    Missing next-sequence information counts as no concession.
    """
    final = sequence.frames[-1]
    if sequence.ends_with_goal:
        reward = 1.0
    elif opponent_scored_next:
        reward = -1.0
    else:
        reward = epv.lookup(final.ball.x, final.ball.y)
    frames = list(sequence.frames[:-1]) + [replace(final, reward=reward)]
    return replace(sequence, frames=tuple(frames))


def assign_all_rewards(
    sequences: Sequence[AttackSequence], epv: EpvGrid
) -> List[AttackSequence]:
    out: List[AttackSequence] = []
    for i, sequence in enumerate(sequences):
        following = sequences[i + 1] if i + 1 < len(sequences) else None
        conceded = (
            following is not None
            and following.match_id == sequence.match_id
            and following.attacking_home != sequence.attacking_home
            and following.ends_with_goal
        )
        out.append(assign_rewards(sequence, conceded, epv))
    return out


SAR_EVENT_CSV_COLUMNS = (
    "match_id",
    "frame_id",
    "team",
    "team_id",
    "home_team",
    "player_name",
    "player_id",
    "jersey_number",
    "player_role_id",
    "action",
    "action_id",
    "success",
    "is_goal",
    "is_shot",
    "is_pass",
    "is_dribble",
    "is_cross",
    "is_through_pass",
    "is_ball_recovery",
    "is_block",
    "is_clearance",
    "is_interception",
    "Period",
    "seconds",
    "start_x",
    "start_y",
    "ball_x",
    "ball_y",
    "ball_touch",
    "series_num",
    "history_num",
    "attack_history_num",
    "attack_start_num",
    "attack_end_history_num",
)

SAR_TRACKING_CSV_COLUMNS = (
    "match_id",
    "frame_id",
    "home_team",
    "jersey_number_id",
    "x",
    "y",
    "vx",
    "vy",
    "ax",
    "ay",
)


def write_sar_event_csv(events: Sequence[SarEventFrame]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SAR_EVENT_CSV_COLUMNS)
    for e in events:
        writer.writerow(
            [
                e.match_id, e.frame_id, e.team, e.team_id, e.home_team,
                e.player_name, e.player_id, e.jersey_number, e.player_role_id,
                e.action, e.action_id, e.success, e.is_goal, e.is_shot,
                e.is_pass, e.is_dribble, e.is_cross, e.is_through_pass,
                e.is_ball_recovery, e.is_block, e.is_clearance, e.is_interception,
                e.period, "%.6f" % e.seconds, "%.6f" % e.start_x, "%.6f" % e.start_y,
                "%.6f" % e.ball_x, "%.6f" % e.ball_y, e.ball_touch, e.series_num,
                e.history_num, e.attack_history_num, e.attack_start_num,
                e.attack_end_history_num,
            ]
        )
    return buf.getvalue().encode("utf-8")


def write_sar_tracking_csv(tracking: Sequence[SarTrackingFrame]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SAR_TRACKING_CSV_COLUMNS)
    for t in tracking:
        writer.writerow(
            [
                t.match_id, t.frame_id, t.home_team, t.jersey_number_id,
                "%.6f" % t.x, "%.6f" % t.y, "%.6f" % t.vx, "%.6f" % t.vy,
                "%.6f" % t.ax, "%.6f" % t.ay,
            ]
        )
    return buf.getvalue().encode("utf-8")


def write_sequence_index_csv(sequences: Sequence[AttackSequence]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["attack_history_num", "match_id", "attacking_home", "start_frame",
         "end_frame", "reward"]
    )
    for s in sequences:
        writer.writerow(
            [
                s.attack_history_num, s.match_id, s.attacking_home,
                s.frames[0].frame_id, s.frames[-1].frame_id,
                "%.9f" % s.frames[-1].reward,
            ]
        )
    return buf.getvalue().encode("utf-8")


# Input schema for the generic frame-level event CSV (one row per
# on-ball event). attack_direction is optional ("lr"/"rl").
SAR_GENERIC_EVENT_COLUMNS = (
    "match_id",
    "frame_id",
    "period",
    "seconds",
    "team",
    "team_id",
    "home_team",
    "player_name",
    "player_id",
    "jersey_number",
    "player_role_id",
    "action",
    "success",
    "is_goal",
    "ball_touch",
)


def read_sar_generic_event_csv(data: Union[bytes, str]) -> List[SarEventDraft]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.DictReader(io.StringIO(data, newline=""))
    if reader.fieldnames is None:
        return []
    missing = [c for c in SAR_GENERIC_EVENT_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise SarSchemaError(f"frame-level event CSV lacks columns {missing}")
    drafts: List[SarEventDraft] = []
    for row in reader:
        drafts.append(
            SarEventDraft(
                match_id=int(row["match_id"]),
                frame_id=int(row["frame_id"]),
                team=row["team"],
                team_id=int(row["team_id"]),
                home_team=int(row["home_team"]),
                player_name=row["player_name"],
                player_id=int(row["player_id"]),
                jersey_number=int(row["jersey_number"]),
                player_role_id=int(row["player_role_id"]),
                action=row["action"],
                success=int(row["success"]),
                is_goal=int(row["is_goal"]),
                period=int(row["period"]),
                seconds=float(row["seconds"]),
                ball_touch=int(row["ball_touch"]),
                attack_direction=row.get("attack_direction", "") or "",
            )
        )
    drafts.sort(key=lambda d: d.frame_id)
    return drafts


@dataclass
class SarMatch:
    """One converted match: streams, episodes and their accounting."""

    match_id: int
    events: List[SarEventFrame]
    tracking: List[SarTrackingFrame]
    sequences: List[AttackSequence]
    kinematics_report: KinematicsReport
    segmentation_report: SegmentationReport


def convert_sar_match(
    event_drafts: Sequence[SarEventDraft],
    tracking_rows: Sequence[RawTrackingRow],
    frame_rate: float = DEFAULT_FRAME_RATE,
    max_gap: int = DEFAULT_MAX_GAP,
    epv: Optional[EpvGrid] = None,
) -> SarMatch:
    """Full per-match pipeline: kinematics, sync, numbering, episodes."""
    epv = epv if epv is not None else default_epv()
    kin_report = KinematicsReport()
    tracking = compute_kinematics(tracking_rows, frame_rate, max_gap, kin_report)
    drafts = list(event_drafts)
    sync_frames(drafts, tracking, kin_report)
    derive_numbering(drafts)
    events = [d.freeze() for d in drafts]
    for event in events:
        event.validate()
    directions = {
        d.attack_history_num: d.attack_direction
        for d in drafts
        if d.attack_direction in ("lr", "rl")
    }
    seg_report = SegmentationReport()
    sequences = segment_attack_sequences(events, tracking, seg_report, directions)
    sequences = assign_all_rewards(sequences, epv)
    match_id = events[0].match_id if events else 0
    return SarMatch(
        match_id=match_id,
        events=events,
        tracking=tracking,
        sequences=sequences,
        kinematics_report=kin_report,
        segmentation_report=seg_report,
    )


def read_sar_event_csv(data: Union[bytes, str]) -> List[SarEventFrame]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.DictReader(io.StringIO(data, newline=""))
    out: List[SarEventFrame] = []
    for row in reader:
        out.append(
            SarEventFrame(
                match_id=int(row["match_id"]),
                frame_id=int(row["frame_id"]),
                team=row["team"],
                team_id=int(row["team_id"]),
                home_team=int(row["home_team"]),
                player_name=row["player_name"],
                player_id=int(row["player_id"]),
                jersey_number=int(row["jersey_number"]),
                player_role_id=int(row["player_role_id"]),
                action=row["action"],
                action_id=int(row["action_id"]),
                success=int(row["success"]),
                is_goal=int(row["is_goal"]),
                is_shot=int(row["is_shot"]),
                is_pass=int(row["is_pass"]),
                is_dribble=int(row["is_dribble"]),
                is_cross=int(row["is_cross"]),
                is_through_pass=int(row["is_through_pass"]),
                is_ball_recovery=int(row["is_ball_recovery"]),
                is_block=int(row["is_block"]),
                is_clearance=int(row["is_clearance"]),
                is_interception=int(row["is_interception"]),
                period=int(row["Period"]),
                seconds=float(row["seconds"]),
                start_x=float(row["start_x"]),
                start_y=float(row["start_y"]),
                ball_x=float(row["ball_x"]),
                ball_y=float(row["ball_y"]),
                ball_touch=int(row["ball_touch"]),
                series_num=int(row["series_num"]),
                history_num=int(row["history_num"]),
                attack_history_num=int(row["attack_history_num"]),
                attack_start_num=int(row["attack_start_num"]),
                attack_end_history_num=int(row["attack_end_history_num"]),
            )
        )
    return out


def read_sar_tracking_csv(data: Union[bytes, str]) -> List[SarTrackingFrame]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.DictReader(io.StringIO(data, newline=""))
    out: List[SarTrackingFrame] = []
    for row in reader:
        out.append(
            SarTrackingFrame(
                match_id=int(row["match_id"]),
                frame_id=int(row["frame_id"]),
                home_team=int(row["home_team"]),
                jersey_number_id=int(row["jersey_number_id"]),
                x=float(row["x"]),
                y=float(row["y"]),
                vx=float(row["vx"]),
                vy=float(row["vy"]),
                ax=float(row["ax"]),
                ay=float(row["ay"]),
            )
        )
    return out


def load_sar_match(
    events_data: Union[bytes, str],
    tracking_data: Union[bytes, str],
    index_data: Union[bytes, str],
) -> List[AttackSequence]:
    """Rebuild reward-bearing episodes from the three serialized files.

    Segmentation is recomputed from the streams; the index supplies the
    persisted terminal rewards (which may have come from a custom value
    grid).
    """
    events = read_sar_event_csv(events_data)
    tracking = read_sar_tracking_csv(tracking_data)
    if isinstance(index_data, bytes):
        index_data = index_data.decode("utf-8")
    rewards: Dict[int, float] = {}
    for row in csv.DictReader(io.StringIO(index_data, newline="")):
        rewards[int(row["attack_history_num"])] = float(row["reward"])
    sequences = segment_attack_sequences(events, tracking)
    out: List[AttackSequence] = []
    for sequence in sequences:
        if sequence.attack_history_num not in rewards:
            continue
        reward = rewards[sequence.attack_history_num]
        final = sequence.frames[-1]
        frames = list(sequence.frames[:-1]) + [replace(final, reward=reward)]
        out.append(replace(sequence, frames=tuple(frames)))
    return out

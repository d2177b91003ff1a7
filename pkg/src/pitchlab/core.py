"""Shared domain types and pitch geometry.

Everything downstream (ingestion, standardization, models, analytics)
works on the value objects defined here. All types are immutable and all
operations are pure, so they are safe to call from any number of workers.

Coordinate conventions:

* Standardized event coordinates live on a 105 x 68 m pitch with the
  origin at the top-left corner, x growing right and y growing down.
  The attacking team always plays toward x = 105.
* Frame-level (tracking) coordinates use the same pitch but with the
  origin at the pitch center, so x in [-52.5, 52.5] and y in [-34, 34].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

PITCH_LENGTH = 105.0
PITCH_WIDTH = 68.0
GOAL_CENTER = (PITCH_LENGTH, PITCH_WIDTH / 2.0)

# Longest possible distance to the attacking goal from inside the pitch
# (own corner flag), used as a normalizer by the possession analytics.
MAX_DIST_TO_GOAL = math.hypot(PITCH_LENGTH, PITCH_WIDTH / 2.0)

HALFTIME_BREAK_MINUTES = 15
PERIOD_MINUTES = 45

# Action vocabulary. The first seven are real on-ball actions, the last
# three are stream markers appended by the standardization pipeline.
SHORT_PASS = "short_pass"
HIGH_PASS = "high_pass"
LONG_PASS = "long_pass"
SHOT = "shot"
CARRY = "carry"
DRIBBLE = "dribble"
CROSS = "cross"
END_OF_POSSESSION = "_"
PERIOD_OVER = "period_over"
GAME_OVER = "game_over"

ACTION_TOKENS = (
    SHORT_PASS,
    HIGH_PASS,
    LONG_PASS,
    SHOT,
    CARRY,
    DRIBBLE,
    CROSS,
    END_OF_POSSESSION,
    PERIOD_OVER,
    GAME_OVER,
)

# Model-facing classes: game_over folds into period_over so the training
# vocabulary has exactly nine classes; storage keeps all ten tokens.
TRAIN_ACTION_CLASSES = (
    SHORT_PASS,
    HIGH_PASS,
    LONG_PASS,
    SHOT,
    CARRY,
    DRIBBLE,
    CROSS,
    END_OF_POSSESSION,
    PERIOD_OVER,
)

MARKER_TOKENS = (END_OF_POSSESSION, PERIOD_OVER, GAME_OVER)

PASS_LENGTH_THRESHOLD = 45.0  # meters; splits short vs long passes

_TRAIN_CLASS_INDEX = {token: i for i, token in enumerate(TRAIN_ACTION_CLASSES)}


class PitchlabError(Exception):
    """Base class for all library errors."""


class CoordinateError(PitchlabError, ValueError):
    """Raised for non-finite or out-of-range coordinates."""


class TimeError(PitchlabError, ValueError):
    """Raised for invalid match-clock values."""


def action_class_index(token: str) -> int:
    """Model class index of an action token (game_over -> period_over)."""
    if token == GAME_OVER:
        token = PERIOD_OVER
    try:
        return _TRAIN_CLASS_INDEX[token]
    except KeyError:
        raise ValueError(f"unknown action token {token!r}") from None


def is_marker(token: str) -> bool:
    return token in MARKER_TOKENS


@dataclass(frozen=True)
class PitchGeometry:
    """Pitch dimensions and the attacking goal location."""

    length: float = PITCH_LENGTH
    width: float = PITCH_WIDTH

    def __post_init__(self) -> None:
        if not (self.length > 0 and self.width > 0):
            raise ValueError("pitch dimensions must be positive")

    @property
    def goal_center_attacking(self) -> Tuple[float, float]:
        return (self.length, self.width / 2.0)


@dataclass(frozen=True)
class UiedEvent:
    """One standardized event row.

    Field names mirror the standardized CSV columns; the clock fields
    (period/minute/second) keep the provider's per-period clock while
    ``seconds`` is the match clock including a fixed 15-minute offset per
    elapsed period.
    """

    match_id: int
    poss_id: int
    team: str
    home_team: int
    action: str
    success: int
    goal: int
    home_score: int
    away_score: int
    goal_diff: int
    period: int
    minute: int
    second: float
    seconds: float
    delta_t: float
    start_x: float
    start_y: float
    delta_x: float
    delta_y: float
    distance: float
    dist2goal: float
    angle2goal: float

    def validate(self) -> None:
        """Raise ValueError when any type invariant is violated."""
        if self.action not in ACTION_TOKENS:
            raise ValueError(f"unknown action {self.action!r}")
        if self.goal_diff != self.home_score - self.away_score:
            raise ValueError("goal_diff must equal home_score - away_score")
        if not (0.0 <= self.start_x <= PITCH_LENGTH):
            raise ValueError(f"start_x {self.start_x} outside [0, {PITCH_LENGTH}]")
        if not (0.0 <= self.start_y <= PITCH_WIDTH):
            raise ValueError(f"start_y {self.start_y} outside [0, {PITCH_WIDTH}]")
        if self.delta_t < 0:
            raise ValueError("delta_t must be >= 0")
        if self.period < 1:
            raise ValueError("period must be >= 1")
        if self.home_team not in (0, 1) or self.success not in (0, 1) or self.goal not in (0, 1):
            raise ValueError("flags must be 0 or 1")


@dataclass(frozen=True)
class Possession:
    """A maximal same-team run of events, ending in a marker."""

    poss_id: int
    match_id: int
    team: str
    events: Tuple[UiedEvent, ...]
    start_seconds: float
    end_seconds: float

    def validate(self) -> None:
        if not self.events:
            raise ValueError("possession has no events")
        if any(e.poss_id != self.poss_id for e in self.events):
            raise ValueError("events carry mixed poss_id")
        if any(e.team != self.team for e in self.events):
            raise ValueError("events carry mixed teams")
        if self.events[-1].action not in MARKER_TOKENS:
            raise ValueError("possession must end in a marker")


@dataclass(frozen=True)
class SarEventFrame:
    """One frame-synchronized event row (center-origin coordinates)."""

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
    action_id: int
    success: int
    is_goal: int
    is_shot: int
    is_pass: int
    is_dribble: int
    is_cross: int
    is_through_pass: int
    is_ball_recovery: int
    is_block: int
    is_clearance: int
    is_interception: int
    period: int
    seconds: float
    start_x: float
    start_y: float
    ball_x: float
    ball_y: float
    ball_touch: int
    series_num: int
    history_num: int
    attack_history_num: int
    attack_start_num: int
    attack_end_history_num: int

    def validate(self) -> None:
        if not (self.attack_start_num <= self.history_num <= self.attack_end_history_num):
            raise ValueError("history_num outside its attack span")
        if self.player_role_id not in (1, 2, 3, 4):
            raise ValueError("player_role_id must be 1 (GK), 2 (DF), 3 (MF) or 4 (FW)")
        if (self.is_cross or self.is_through_pass) and not self.is_pass:
            raise ValueError("cross/through-pass rows must also set is_pass")
        if abs(self.start_x) > PITCH_LENGTH / 2 or abs(self.start_y) > PITCH_WIDTH / 2:
            raise ValueError("start coordinates outside the center-origin pitch")


@dataclass(frozen=True)
class SarTrackingFrame:
    """One entity (player or ball) in one tracking frame, with kinematics."""

    match_id: int
    frame_id: int
    home_team: int
    jersey_number_id: int
    x: float
    y: float
    vx: float
    vy: float
    ax: float
    ay: float


def _require_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise CoordinateError(f"non-finite coordinate {v!r}")


def to_uied_coords(
    raw_x: float,
    raw_y: float,
    provider_range: Tuple[float, float],
    attacking_left_to_right: bool,
) -> Tuple[float, float]:
    """Rescale provider coordinates onto the 105 x 68 pitch.

    When the acting team attacks right-to-left the point is reflected
    through the pitch center so attack always flows toward x = 105.
    Scaled values are clamped to the pitch box (providers emit e.g. 100.3
    on a 0-100 grid for balls that cross the line).
    """
    _require_finite(raw_x, raw_y)
    x_max, y_max = provider_range
    if not (x_max > 0 and y_max > 0):
        raise CoordinateError(f"provider range must be positive, got {provider_range}")
    x = raw_x / x_max * PITCH_LENGTH
    y = raw_y / y_max * PITCH_WIDTH
    if not attacking_left_to_right:
        x = PITCH_LENGTH - x
        y = PITCH_WIDTH - y
    x = min(max(x, 0.0), PITCH_LENGTH)
    y = min(max(y, 0.0), PITCH_WIDTH)
    return (x, y)


def uied_to_sar_coords(x: float, y: float) -> Tuple[float, float]:
    """Shift top-left-origin coordinates to the center-origin frame."""
    _require_finite(x, y)
    if not (0.0 <= x <= PITCH_LENGTH and 0.0 <= y <= PITCH_WIDTH):
        raise CoordinateError(f"({x}, {y}) outside the standardized pitch")
    return (x - PITCH_LENGTH / 2.0, y - PITCH_WIDTH / 2.0)


def dist2goal(x: float, y: float) -> float:
    """Euclidean distance from (x, y) to the attacking goal center."""
    _require_finite(x, y)
    if not (0.0 <= x <= PITCH_LENGTH and 0.0 <= y <= PITCH_WIDTH):
        raise CoordinateError(f"({x}, {y}) outside the standardized pitch")
    return math.hypot(GOAL_CENTER[0] - x, GOAL_CENTER[1] - y)


def angle2goal(x: float, y: float) -> float:
    """Absolute angle between the ray to the goal center and the x-axis.

    Measured to the goal center (not the goal-mouth subtended angle) and
    defined as 0 at the goal center itself; always in [0, pi].
    """
    _require_finite(x, y)
    if not (0.0 <= x <= PITCH_LENGTH and 0.0 <= y <= PITCH_WIDTH):
        raise CoordinateError(f"({x}, {y}) outside the standardized pitch")
    return abs(math.atan2(GOAL_CENTER[1] - y, GOAL_CENTER[0] - x))


def match_seconds(period: int, minute: int, second: float) -> float:
    """Match clock from a per-period provider clock.

    Each elapsed period contributes its regulation 45 minutes plus a
    fixed 15-minute offset; stoppage time (minute > 45) is allowed.
    """
    if period < 1:
        raise TimeError(f"period must be >= 1, got {period}")
    if minute < 0 or second < 0:
        raise TimeError(f"negative clock value: minute={minute} second={second}")
    offset = (period - 1) * (PERIOD_MINUTES + HALFTIME_BREAK_MINUTES) * 60
    return offset + minute * 60 + second

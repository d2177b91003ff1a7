"""Provider event-name to standardized action mapping.

Each provider preset maps normalized (casefolded) provider event names
either to a fixed action token or to the LENGTH_SPLIT sentinel, meaning
the name denotes a pass whose short/long class depends on pass length
(threshold 45 m, ties classed long). Names listed by a provider only
under the short-pass family map to short_pass unconditionally.

A "High Pass" is always high_pass regardless of length: providers list
it as its own category, so height outranks length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

from .core import (
    CARRY,
    CROSS,
    DRIBBLE,
    END_OF_POSSESSION,
    GAME_OVER,
    HIGH_PASS,
    LONG_PASS,
    PASS_LENGTH_THRESHOLD,
    PERIOD_OVER,
    SHORT_PASS,
    SHOT,
)

# Sentinel: pass whose class is decided by length.
LENGTH_SPLIT = "__length_split__"


@dataclass(frozen=True)
class Unmapped:
    """A provider event name with no standardized action."""

    provider_event_name: str


WYSCOUT_PRESET: Mapping[str, str] = {
    # appear under both short and long pass: length decides
    "goal kick": LENGTH_SPLIT,
    "free kick": LENGTH_SPLIT,
    "simple pass": LENGTH_SPLIT,
    # short-pass only
    "hand pass": SHORT_PASS,
    "head pass": SHORT_PASS,
    "smart pass": SHORT_PASS,
    "throw in": SHORT_PASS,
    "high pass": HIGH_PASS,
    "shot": SHOT,
    "free kick shot": SHOT,
    "acceleration": CARRY,
    "touch": DRIBBLE,
    "cross": CROSS,
    "free kick cross": CROSS,
}

STATSBOMB_PRESET: Mapping[str, str] = {
    "ground pass": LENGTH_SPLIT,
    "low pass": LENGTH_SPLIT,
    "half start": SHORT_PASS,
    "high pass": HIGH_PASS,
    "shot": SHOT,
    "carry": CARRY,
    "dribble": DRIBBLE,
    "cross": CROSS,
    "corner": CROSS,
}

# DataStadium exports (served through the generic CSV path); every pass
# family name appears under both short and long pass.
_DATASTADIUM_NAMES: Mapping[str, str] = {
    "direct fk pass": LENGTH_SPLIT,
    "indirect fk": LENGTH_SPLIT,
    "kickoff": LENGTH_SPLIT,
    "homepass": LENGTH_SPLIT,
    "awaypass": LENGTH_SPLIT,
    "pkpass": LENGTH_SPLIT,
    "through pass": LENGTH_SPLIT,
    "throwin": LENGTH_SPLIT,
    "feed": LENGTH_SPLIT,
    "shoot": SHOT,
    "direct fk shot": SHOT,
    "dribble": DRIBBLE,
    "touch": DRIBBLE,
    "ck": CROSS,
    "cross": CROSS,
}

# Canonical names: the standardized vocabulary itself (as used by the
# annotation tool and by re-ingested standardized CSVs), plus a bare
# "pass" that splits by length.
_CANONICAL_NAMES: Mapping[str, str] = {
    "short pass": SHORT_PASS,
    "short_pass": SHORT_PASS,
    "high pass": HIGH_PASS,
    "high_pass": HIGH_PASS,
    "long pass": LONG_PASS,
    "long_pass": LONG_PASS,
    "pass": LENGTH_SPLIT,
    "shot": SHOT,
    "carry": CARRY,
    "dribble": DRIBBLE,
    "cross": CROSS,
    "_": END_OF_POSSESSION,
    "end_of_possession": END_OF_POSSESSION,
    "period_over": PERIOD_OVER,
    "game_over": GAME_OVER,
}

# Google Research Football environment names.
_GRF_NAMES: Mapping[str, str] = {
    "short pass": SHORT_PASS,
    "high pass": HIGH_PASS,
    "long pass": LONG_PASS,
    "shot": SHOT,
    "sprint": CARRY,
    "dribble": DRIBBLE,
}

LABELTOOL_PRESET: Mapping[str, str] = dict(_CANONICAL_NAMES)

GENERIC_PRESET: Mapping[str, str] = {
    **_DATASTADIUM_NAMES,
    **_GRF_NAMES,
    **_CANONICAL_NAMES,
}

_PRESETS: Mapping[str, Mapping[str, str]] = {
    "wyscout": WYSCOUT_PRESET,
    "statsbomb": STATSBOMB_PRESET,
    "labeltool": LABELTOOL_PRESET,
    "generic_csv": GENERIC_PRESET,
    "generic": GENERIC_PRESET,
}

LENGTH_TAG_PREFIX = "length="


def preset_for(provider: str) -> Mapping[str, str]:
    try:
        return _PRESETS[provider]
    except KeyError:
        raise ValueError(f"no action mapping preset for provider {provider!r}") from None


def pass_length_from_tags(tags) -> Optional[float]:
    """Provider-supplied pass length in meters, when tagged."""
    for tag in tags:
        if tag.startswith(LENGTH_TAG_PREFIX):
            return float(tag[len(LENGTH_TAG_PREFIX):])
    return None


def split_pass_by_length(length: float) -> str:
    return LONG_PASS if length >= PASS_LENGTH_THRESHOLD else SHORT_PASS


def map_action_name(
    provider: str,
    provider_event_name: str,
    tags=(),
    start_xy: Optional[Tuple[float, float]] = None,
    next_start_xy: Optional[Tuple[float, float]] = None,
):
    """Map one provider event name to an action token.

    Length-split passes use the provider-supplied length tag when
    present, else the straight-line distance from this event to the next
    event's start (both in standardized meters); with no next event the
    length is 0 and the pass classes short.

    Returns an action token, or ``Unmapped`` for unknown names.
    """
    name = provider_event_name.strip().casefold()
    token = preset_for(provider).get(name)
    if token is None:
        return Unmapped(provider_event_name)
    if token != LENGTH_SPLIT:
        return token
    length = pass_length_from_tags(tags)
    if length is None:
        if start_xy is not None and next_start_xy is not None:
            length = math.hypot(
                next_start_xy[0] - start_xy[0], next_start_xy[1] - start_xy[1]
            )
        else:
            length = 0.0
    return split_pass_by_length(length)


def is_known_name(provider: str, provider_event_name: str) -> bool:
    return provider_event_name.strip().casefold() in preset_for(provider)

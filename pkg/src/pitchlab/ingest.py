"""Provider-file parsers producing neutral raw records.

Parsers are pure per-file functions: they read a byte stream, emit raw
event/tracking records in a content-determined order, and account for
every input row in a ParseReport (emitted, warned, or raised). Nothing
is silently dropped.

Supported ingest paths: Wyscout public JSON, StatsBomb open-data JSON,
generic event CSVs driven by a column map (covers licensed exports such
as DataStadium), annotation-tool CSVs (STE-1), and generic tracking
CSVs. Other providers are extension points, not implemented here.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import BinaryIO, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .actions import is_known_name
from .core import PitchlabError

WYSCOUT_RANGE = (100.0, 100.0)
STATSBOMB_RANGE = (120.0, 80.0)
UIED_RANGE = (105.0, 68.0)

STE1_VERSION = "STE-1"

# Wyscout tag ids that matter downstream.
_WYSCOUT_TAG_GOAL = 101
_WYSCOUT_TAG_OWN_GOAL = 102
_WYSCOUT_TAG_ACCURATE = 1801
_WYSCOUT_TAG_NOT_ACCURATE = 1802


class ParseError(PitchlabError, ValueError):
    """Malformed input file; nothing was emitted."""


class SchemaError(PitchlabError, ValueError):
    """Input rows do not match the declared schema."""


class FormatVersionError(PitchlabError, ValueError):
    """Versioned file header declares an unsupported version."""


@dataclass(frozen=True)
class RawEvent:
    """One provider event before standardization."""

    provider: str
    match_id: int
    provider_event_name: str
    team_ref: str
    player_ref: Optional[str]
    period: int
    clock_minute: int
    clock_second: float
    raw_x: float
    raw_y: float
    raw_range: Tuple[float, float]
    tags: frozenset = frozenset()

    def __post_init__(self) -> None:
        if not self.provider_event_name:
            raise ValueError("provider_event_name must be non-empty")
        if not (math.isfinite(self.raw_x) and math.isfinite(self.raw_y)):
            raise ValueError("raw coordinates must be finite")


@dataclass(frozen=True)
class RawTrackingRow:
    """One entity in one tracking frame, provider units unspecified."""

    match_id: int
    frame_id: int
    side: str  # home | away | ball
    jersey_number: Optional[int]
    raw_x: float
    raw_y: float
    timestamp: float

    def __post_init__(self) -> None:
        if self.frame_id < 0:
            raise ValueError("frame_id must be >= 0")
        if self.side == "ball" and self.jersey_number is not None:
            raise ValueError("ball rows carry no jersey number")


@dataclass
class ParseReport:
    """Row accounting for one parse call: rows_in == rows_out + dropped."""

    rows_in: int = 0
    rows_out: int = 0
    warnings: Counter = field(default_factory=Counter)

    def dropped(self) -> int:
        return self.rows_in - self.rows_out


def _read_bytes(stream: Union[bytes, BinaryIO]) -> bytes:
    if isinstance(stream, bytes):
        return stream
    return stream.read()


def _load_json(stream: Union[bytes, BinaryIO], what: str):
    data = _read_bytes(stream)
    try:
        return json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        offset = getattr(exc, "pos", getattr(exc, "start", 0))
        raise ParseError(f"malformed {what} JSON at byte offset {offset}: {exc}") from exc


def _wyscout_period(match_period: str) -> int:
    periods = {"1H": 1, "2H": 2, "E1": 3, "E2": 4, "P": 5}
    try:
        return periods[match_period]
    except KeyError:
        raise ParseError(f"unknown match period {match_period!r}") from None


def parse_wyscout(
    event_file: Union[bytes, BinaryIO],
    match_file: Union[bytes, BinaryIO],
    report: Optional[ParseReport] = None,
) -> List[RawEvent]:
    """Parse public Wyscout event + match JSON files.

    Coordinates are percentages on a 0-100 grid, already oriented in
    each acting team's attacking direction. The match file supplies
    home/away sides, carried on each event as a side=home/away tag.
    """
    report = report if report is not None else ParseReport()
    events_json = _load_json(event_file, "event")
    matches_json = _load_json(match_file, "match")

    sides: Dict[int, Dict[int, str]] = {}
    for match in matches_json:
        match_id = int(match["wyId"])
        sides[match_id] = {
            int(team_id): str(team_data["side"]).casefold()
            for team_id, team_data in match.get("teamsData", {}).items()
        }

    out: List[RawEvent] = []
    last_xy: Dict[int, Tuple[float, float]] = {}
    for ev in events_json:
        report.rows_in += 1
        match_id = int(ev["matchId"])
        team_id = int(ev["teamId"])
        name = str(ev.get("subEventName") or ev.get("eventName") or "").strip()
        if not name:
            name = "unknown"
        tags = set()
        for tag in ev.get("tags", ()):
            tag_id = int(tag.get("id", 0))
            if tag_id == _WYSCOUT_TAG_GOAL:
                tags.add("goal")
            elif tag_id == _WYSCOUT_TAG_OWN_GOAL:
                tags.add("own_goal")
            elif tag_id == _WYSCOUT_TAG_ACCURATE:
                tags.add("accurate")
            elif tag_id == _WYSCOUT_TAG_NOT_ACCURATE:
                tags.add("not_accurate")
        side = sides.get(match_id, {}).get(team_id)
        tags.add(f"side={side}" if side in ("home", "away") else "side=unknown")
        if not is_known_name("wyscout", name):
            tags.add("unmapped")

        positions = ev.get("positions") or []
        if positions:
            raw_x = float(positions[0].get("x", 0.0))
            raw_y = float(positions[0].get("y", 0.0))
        elif match_id in last_xy:
            raw_x, raw_y = last_xy[match_id]
            tags.add("imputed_location")
            report.warnings["imputed_location"] += 1
        else:
            raw_x, raw_y = (50.0, 50.0)
            tags.add("imputed_location")
            report.warnings["imputed_location"] += 1
        last_xy[match_id] = (raw_x, raw_y)

        event_sec = float(ev.get("eventSec", 0.0))
        out.append(
            RawEvent(
                provider="wyscout",
                match_id=match_id,
                provider_event_name=name,
                team_ref=str(team_id),
                player_ref=str(ev["playerId"]) if ev.get("playerId") else None,
                period=_wyscout_period(str(ev.get("matchPeriod", "1H"))),
                clock_minute=int(event_sec // 60),
                clock_second=event_sec % 60.0,
                raw_x=raw_x,
                raw_y=raw_y,
                raw_range=WYSCOUT_RANGE,
                tags=frozenset(tags),
            )
        )
        report.rows_out += 1

    out.sort(key=lambda e: (e.match_id, e.period, e.clock_minute * 60 + e.clock_second))
    return out


def _statsbomb_event_name(ev: dict) -> str:
    type_name = str(ev.get("type", {}).get("name", "unknown"))
    if type_name == "Pass":
        pass_info = ev.get("pass", {})
        if pass_info.get("cross"):
            return "Cross"
        pass_type = pass_info.get("type", {}).get("name")
        if pass_type == "Corner":
            return "Corner"
        height = pass_info.get("height", {}).get("name")
        if height:
            return str(height)
    return type_name


def parse_statsbomb(
    event_file: Union[bytes, BinaryIO],
    match_id: int = 0,
    report: Optional[ParseReport] = None,
) -> List[RawEvent]:
    """Parse a StatsBomb open-data event JSON file (one match).

    Coordinates live on a 120 x 80 grid oriented in the acting team's
    attacking direction. Pass height and length metadata are preserved
    as tags; events without a location inherit the previous event's.
    Unknown event types are emitted with an "unmapped" tag, never
    dropped. The open data keys matches by filename, so the match id is
    a parameter.
    """
    report = report if report is not None else ParseReport()
    events_json = _load_json(event_file, "event")

    out: List[RawEvent] = []
    last_xy: Tuple[float, float] = (60.0, 40.0)
    home_team: Optional[str] = None
    for ev in events_json:
        type_name = str(ev.get("type", {}).get("name", ""))
        if type_name == "Starting XI" and home_team is None:
            # first Starting XI block belongs to the home team
            home_team = str(ev.get("team", {}).get("name", ""))
        report.rows_in += 1

        name = _statsbomb_event_name(ev)
        tags = set()
        pass_info = ev.get("pass", {})
        if "length" in pass_info:
            tags.add(f"length={float(pass_info['length'])}")
        height = pass_info.get("height", {}).get("name")
        if height:
            tags.add(str(height))
        if type_name == "Pass" and "outcome" not in pass_info:
            tags.add("accurate")
        elif type_name == "Pass":
            tags.add("not_accurate")
        if ev.get("shot", {}).get("outcome", {}).get("name") == "Goal":
            tags.add("goal")
            tags.add("accurate")
        team_name = str(ev.get("team", {}).get("name", ""))
        if home_team is not None:
            tags.add(f"side={'home' if team_name == home_team else 'away'}")
        if not is_known_name("statsbomb", name):
            tags.add("unmapped")

        location = ev.get("location")
        if location and len(location) >= 2:
            raw_x, raw_y = float(location[0]), float(location[1])
        else:
            raw_x, raw_y = last_xy
            tags.add("imputed_location")
            report.warnings["imputed_location"] += 1
        last_xy = (raw_x, raw_y)

        minute = int(ev.get("minute", 0))
        second = float(ev.get("second", 0))
        period = int(ev.get("period", 1))
        # StatsBomb minutes run through the match; rebase onto the period clock
        if period == 2 and minute >= 45:
            minute -= 45
        out.append(
            RawEvent(
                provider="statsbomb",
                match_id=int(ev.get("match_id", match_id)),
                provider_event_name=name,
                team_ref=team_name,
                player_ref=str(ev.get("player", {}).get("name")) if ev.get("player") else None,
                period=period,
                clock_minute=minute,
                clock_second=second,
                raw_x=raw_x,
                raw_y=raw_y,
                raw_range=STATSBOMB_RANGE,
                tags=frozenset(tags),
            )
        )
        report.rows_out += 1
    return out


# Column roles understood by the generic event CSV parser. Only the
# first six are mandatory; the rest enable full-fidelity round trips.
GENERIC_REQUIRED_ROLES = ("event", "team", "period", "minute", "second", "x", "y")
GENERIC_OPTIONAL_ROLES = ("provider", "match_id", "player", "range_x", "range_y", "tags")

# Full-fidelity map used by dump_raw_events_csv: role -> column name.
NEUTRAL_COLUMN_MAP: Mapping[str, str] = {
    "provider": "provider",
    "match_id": "match_id",
    "event": "event",
    "team": "team",
    "player": "player",
    "period": "period",
    "minute": "minute",
    "second": "second",
    "x": "x",
    "y": "y",
    "range_x": "range_x",
    "range_y": "range_y",
    "tags": "tags",
}

# Starting point for DataStadium-style licensed exports; the licensed
# column names vary per delivery and cannot be redistributed, so remap
# as needed.
DATASTADIUM_COLUMN_MAP: Mapping[str, str] = {
    "match_id": "match_id",
    "event": "action_name",
    "team": "team_name",
    "player": "player_name",
    "period": "half",
    "minute": "minute",
    "second": "second",
    "x": "point_x",
    "y": "point_y",
}


def _decode_text(stream: Union[bytes, BinaryIO]) -> str:
    try:
        return _read_bytes(stream).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}") from exc


def parse_generic_event_csv(
    csv_stream: Union[bytes, BinaryIO],
    column_map: Mapping[str, str],
    default_range: Tuple[float, float] = UIED_RANGE,
    report: Optional[ParseReport] = None,
) -> List[RawEvent]:
    """Parse an arbitrary event CSV through a role -> column map.

    The map must name columns for event, team, period, minute, second,
    x and y at minimum. Rows with non-numeric numeric fields abort the
    parse with every offending row index listed (atomic: no partial
    output).
    """
    report = report if report is not None else ParseReport()
    text = _decode_text(csv_stream)
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None:
        return []
    for role in GENERIC_REQUIRED_ROLES:
        if role not in column_map:
            raise SchemaError(f"column map lacks required role {role!r}")
        if column_map[role] not in reader.fieldnames:
            raise SchemaError(
                f"mapped column {column_map[role]!r} (role {role!r}) missing from header"
            )
    for role in GENERIC_OPTIONAL_ROLES:
        if role in column_map and column_map[role] not in reader.fieldnames:
            raise SchemaError(
                f"mapped column {column_map[role]!r} (role {role!r}) missing from header"
            )

    def cell(row: dict, role: str, default: str = "") -> str:
        col = column_map.get(role)
        if col is None:
            return default
        return row.get(col, default) or default

    out: List[RawEvent] = []
    bad_rows: List[int] = []
    for index, row in enumerate(reader):
        report.rows_in += 1
        try:
            raw_range = (
                float(cell(row, "range_x", str(default_range[0]))),
                float(cell(row, "range_y", str(default_range[1]))),
            )
            tags_text = cell(row, "tags")
            tags = set(t for t in tags_text.split(";") if t) if tags_text else set()
            provider = cell(row, "provider", "generic_csv")
            name = cell(row, "event")
            if not is_known_name(provider if provider in ("wyscout", "statsbomb", "labeltool") else "generic_csv", name):
                tags.add("unmapped")
            event = RawEvent(
                provider=provider,
                match_id=int(cell(row, "match_id", "0")),
                provider_event_name=name,
                team_ref=cell(row, "team"),
                player_ref=cell(row, "player") or None,
                period=int(cell(row, "period")),
                clock_minute=int(cell(row, "minute")),
                clock_second=float(cell(row, "second")),
                raw_x=float(cell(row, "x")),
                raw_y=float(cell(row, "y")),
                raw_range=raw_range,
                tags=frozenset(tags),
            )
        except (ValueError, TypeError):
            bad_rows.append(index)
            continue
        out.append(event)
        report.rows_out += 1
    if bad_rows:
        raise SchemaError(f"rows failed numeric conversion: {bad_rows}")
    return out


def dump_raw_events_csv(events: Sequence[RawEvent]) -> bytes:
    """Serialize raw events to the neutral CSV (full-fidelity round trip)."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([NEUTRAL_COLUMN_MAP[r] for r in NEUTRAL_COLUMN_MAP])
    for e in events:
        writer.writerow(
            [
                e.provider,
                e.match_id,
                e.provider_event_name,
                e.team_ref,
                e.player_ref or "",
                e.period,
                e.clock_minute,
                repr(e.clock_second),
                repr(e.raw_x),
                repr(e.raw_y),
                repr(e.raw_range[0]),
                repr(e.raw_range[1]),
                ";".join(sorted(e.tags)),
            ]
        )
    return buf.getvalue().encode("utf-8")


def parse_labeltool_csv(
    csv_stream: Union[bytes, BinaryIO],
    report: Optional[ParseReport] = None,
) -> List[RawEvent]:
    """Parse an annotation-tool STE-1 export.

    Header block: ``#STE-1``, ``#frame_rate,<hz>``, and either
    ``#range,pixel,<w>,<h>`` or ``#range,pitch``. Calibrated exports
    carry pitch meters in the x,y columns; uncalibrated ones carry
    pixels in px,py with the declared pixel range.
    """
    report = report if report is not None else ParseReport()
    text = _decode_text(csv_stream)
    lines = text.splitlines()
    if not lines or lines[0].strip().lstrip("#") != STE1_VERSION:
        found = lines[0].strip() if lines else "<empty file>"
        raise FormatVersionError(f"expected #{STE1_VERSION} header, found {found!r}")

    frame_rate: Optional[float] = None
    pixel_range: Optional[Tuple[float, float]] = None
    calibrated = False
    body_start = 1
    for i, line in enumerate(lines[1:], start=1):
        if not line.startswith("#"):
            body_start = i
            break
        parts = line.lstrip("#").split(",")
        if parts[0] == "frame_rate":
            frame_rate = float(parts[1])
        elif parts[0] == "range":
            if parts[1] == "pitch":
                calibrated = True
            elif parts[1] == "pixel":
                pixel_range = (float(parts[2]), float(parts[3]))
            else:
                raise FormatVersionError(f"unknown range kind {parts[1]!r}")
    else:
        body_start = len(lines)
    if frame_rate is None or frame_rate <= 0:
        raise FormatVersionError("missing or invalid #frame_rate header")
    if not calibrated and pixel_range is None:
        raise FormatVersionError("missing #range header")

    body = "\n".join(lines[body_start:])
    reader = csv.DictReader(io.StringIO(body, newline=""))
    out: List[RawEvent] = []
    for row in reader:
        report.rows_in += 1
        seconds = float(row["seconds"])
        frame = int(row["frame"])
        tags = {f"frame={frame}"}
        if calibrated:
            x, y = float(row["x"]), float(row["y"])
            raw_range = UIED_RANGE
        else:
            x, y = float(row["px"]), float(row["py"])
            raw_range = pixel_range
            tags.add("pixel_coords")
        name = row["event_type"]
        if not is_known_name("labeltool", name):
            tags.add("unmapped")
        out.append(
            RawEvent(
                provider="labeltool",
                match_id=0,
                provider_event_name=name,
                team_ref=row["team"],
                player_ref=None,
                period=1,
                clock_minute=int(seconds // 60),
                clock_second=seconds % 60.0,
                raw_x=x,
                raw_y=y,
                raw_range=raw_range,
                tags=frozenset(tags),
            )
        )
        report.rows_out += 1
    out.sort(key=lambda e: (e.clock_minute * 60 + e.clock_second))
    return out


_SIDE_ORDER = {"home": 0, "away": 1, "ball": 2}


def parse_tracking_csv(
    csv_stream: Union[bytes, BinaryIO],
    frame_rate: float,
    match_id: int = 0,
    report: Optional[ParseReport] = None,
) -> Tuple[List[RawTrackingRow], ParseReport]:
    """Parse a tracking CSV with columns frame_id, side, jersey_number, x, y.

    Rows sort by (frame_id, side, jersey); timestamps derive from the
    frame rate. Duplicate (frame, side, jersey) rows keep the first
    occurrence and are counted in the report.
    """
    if frame_rate <= 0:
        raise SchemaError(f"frame_rate must be positive, got {frame_rate}")
    report = report if report is not None else ParseReport()
    text = _decode_text(csv_stream)
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None:
        return [], report
    for col in ("frame_id", "side", "x", "y"):
        if col not in reader.fieldnames:
            raise SchemaError(f"tracking CSV lacks column {col!r}")

    seen = set()
    out: List[RawTrackingRow] = []
    for row in reader:
        report.rows_in += 1
        side = row["side"].strip().casefold()
        if side not in _SIDE_ORDER:
            raise SchemaError(f"unknown side {row['side']!r}")
        jersey_text = (row.get("jersey_number") or "").strip()
        jersey = int(jersey_text) if jersey_text else None
        if side == "ball":
            jersey = None
        frame_id = int(row["frame_id"])
        key = (frame_id, side, jersey)
        if key in seen:
            report.warnings["duplicate_row"] += 1
            continue
        seen.add(key)
        out.append(
            RawTrackingRow(
                match_id=match_id,
                frame_id=frame_id,
                side=side,
                jersey_number=jersey,
                raw_x=float(row["x"]),
                raw_y=float(row["y"]),
                timestamp=frame_id / frame_rate,
            )
        )
        report.rows_out += 1
    out.sort(key=lambda r: (r.frame_id, _SIDE_ORDER[r.side], r.jersey_number or 0))
    return out, report

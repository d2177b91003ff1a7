"""Standardization pipeline: mapping, possessions, markers, features, splits."""

import math
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from pitchlab import core, uied
from pitchlab.actions import Unmapped
from pitchlab.ingest import RawEvent
from pitchlab.uied import (
    EventDraft,
    SplitError,
    UnmappedActionError,
    append_markers,
    convert_corpus,
    convert_match,
    derive_event_features,
    map_action,
    read_uied_csv,
    segment_possessions,
    split_matches,
    write_uied_csv,
)


def raw(
    name,
    provider="wyscout",
    x=50.0,
    y=50.0,
    team="1609",
    period=1,
    minute=0,
    second=0.0,
    tags=(),
    match_id=1,
    raw_range=None,
):
    if raw_range is None:
        raw_range = (100.0, 100.0) if provider == "wyscout" else (120.0, 80.0)
    side = "side=home" if team == "1609" else "side=away"
    return RawEvent(
        provider=provider,
        match_id=match_id,
        provider_event_name=name,
        team_ref=team,
        player_ref=None,
        period=period,
        clock_minute=minute,
        clock_second=second,
        raw_x=x,
        raw_y=y,
        raw_range=raw_range,
        tags=frozenset(set(tags) | {side}),
    )


class TestMapAction:
    def test_statsbomb_short_by_length_tag(self):
        e = raw("Ground Pass", provider="statsbomb", tags=["length=12.0"])
        assert map_action(e) == core.SHORT_PASS

    def test_wyscout_long_by_distance(self):
        # next event 60 m away in standardized meters
        e1 = raw("Simple Pass", x=10.0, y=50.0)
        e2 = raw("Touch", x=(10.0 + 60.0 / 1.05), y=50.0)
        assert map_action(e1, e2) == core.LONG_PASS

    def test_statsbomb_corner_is_cross(self):
        assert map_action(raw("Corner", provider="statsbomb")) == core.CROSS

    def test_high_pass_outranks_length(self):
        e = raw("High Pass", provider="statsbomb", tags=["length=70.0"])
        assert map_action(e) == core.HIGH_PASS

    def test_threshold_tie_classes_long(self):
        e = raw("Ground Pass", provider="statsbomb", tags=["length=45.0"])
        assert map_action(e) == core.LONG_PASS
        e = raw("Ground Pass", provider="statsbomb", tags=["length=44.999"])
        assert map_action(e) == core.SHORT_PASS

    def test_short_only_names_ignore_distance(self):
        e1 = raw("Throw In", x=0.0, y=0.0)
        e2 = raw("Touch", x=100.0, y=100.0)
        assert map_action(e1, e2) == core.SHORT_PASS

    def test_no_next_event_classes_short(self):
        assert map_action(raw("Simple Pass")) == core.SHORT_PASS

    def test_unmapped_carries_name(self):
        result = map_action(raw("Ground attacking duel"))
        assert isinstance(result, Unmapped)
        assert result.provider_event_name == "Ground attacking duel"

    def test_carry_vs_dribble_exact(self):
        assert map_action(raw("Carry", provider="statsbomb")) == core.CARRY
        assert map_action(raw("Dribble", provider="statsbomb")) == core.DRIBBLE
        assert map_action(raw("Acceleration")) == core.CARRY
        assert map_action(raw("Touch")) == core.DRIBBLE


def draft(team="a", period=1, seconds=0.0, x=50.0, y=34.0, action=core.SHORT_PASS):
    d = EventDraft(
        match_id=1,
        team=team,
        home_team=1 if team == "a" else 0,
        action=action,
        success=1,
        goal=0,
        period=period,
        minute=int(seconds // 60),
        second=seconds % 60,
        start_x=x,
        start_y=y,
    )
    d.seconds = seconds
    return d


class TestSegmentPossessions:
    def test_team_change_splits(self):
        groups = segment_possessions([draft("a"), draft("a"), draft("b")])
        assert [len(g) for g in groups] == [2, 1]
        assert [g[0].poss_id for g in groups] == [0, 1]

    def test_single_team_single_period(self):
        groups = segment_possessions([draft("a")] * 4)
        assert len(groups) == 1

    def test_period_boundary_splits(self):
        events = [draft("a", period=1), draft("a", period=2)]
        groups = segment_possessions(events)
        # brute-force scan of change points agrees
        changes = 1 + sum(
            1
            for i in range(1, len(events))
            if events[i].team != events[i - 1].team
            or events[i].period != events[i - 1].period
        )
        assert len(groups) == changes == 2

    def test_empty_input(self):
        assert segment_possessions([]) == []


class TestAppendMarkers:
    def test_single_possession_single_period(self):
        stream = append_markers(segment_possessions([draft("a"), draft("a")]))
        tail = [e.action for e in stream[-3:]]
        assert tail == [core.END_OF_POSSESSION, core.PERIOD_OVER, core.GAME_OVER]

    def test_no_possessions(self):
        assert append_markers([]) == []

    def test_two_periods_marker_counts(self):
        stream = append_markers(
            segment_possessions([draft("a", period=1), draft("a", period=2)])
        )
        counts = Counter(e.action for e in stream)
        assert counts[core.PERIOD_OVER] == 2
        assert counts[core.GAME_OVER] == 1
        assert counts[core.END_OF_POSSESSION] == 2

    def test_markers_inherit_location_and_time(self):
        stream = append_markers(segment_possessions([draft("a", seconds=7.0, x=90.0)]))
        marker = stream[1]
        assert marker.action == core.END_OF_POSSESSION
        assert marker.start_x == 90.0 and marker.seconds == 7.0


class TestDeriveFeatures:
    def test_three_four_five(self):
        d1 = draft("a", seconds=0.0, x=0.0, y=0.0)
        d2 = draft("a", seconds=2.0, x=30.0, y=40.0)
        events = derive_event_features(list(segment_and_flatten([d1, d2])))
        assert events[1].distance == 50.0
        assert events[1].delta_x == 30.0 and events[1].delta_y == 40.0
        assert events[1].delta_t == 2.0

    def test_first_event_zeroed(self):
        events = derive_event_features(segment_and_flatten([draft("a", x=10.0)]))
        e = events[0]
        assert e.delta_t == e.delta_x == e.delta_y == e.distance == 0.0

    def test_goal_location_features(self):
        events = derive_event_features(segment_and_flatten([draft("a", x=105.0, y=34.0)]))
        assert events[0].dist2goal == 0.0 and events[0].angle2goal == 0.0

    def test_clock_regression_clamped(self):
        d1 = draft("a", seconds=10.0)
        d2 = draft("a", seconds=8.0)
        report = uied.ConvertReport()
        events = derive_event_features(segment_and_flatten([d1, d2]), report)
        assert events[1].delta_t == 0.0
        assert report.warnings["clock_regression"] == 1

    def test_possession_delta_sum_telescopes(self):
        drafts = [
            draft("a", seconds=3.0),
            draft("a", seconds=5.0),
            draft("a", seconds=9.5),
            draft("b", seconds=12.0),
            draft("b", seconds=15.0),
        ]
        events = derive_event_features(segment_and_flatten(drafts))
        for poss in uied.group_possessions(events):
            total = sum(e.delta_t for e in poss.events)
            assert math.isclose(total, poss.end_seconds - poss.start_seconds)


def segment_and_flatten(drafts):
    return append_markers(segment_possessions(drafts))


def small_match(match_id=1, with_unmapped=False):
    events = [
        raw("Simple Pass", match_id=match_id, second=1.0, x=30, y=40),
        raw("Touch", match_id=match_id, second=3.0, x=35, y=45),
        raw("Shot", match_id=match_id, second=5.0, x=90, y=50, tags=["goal"]),
        raw("Simple Pass", match_id=match_id, team="1610", second=9.0, x=40, y=50),
    ]
    if with_unmapped:
        events.insert(2, raw("Ground attacking duel", match_id=match_id, second=4.0))
    return events


class TestConvertMatch:
    def test_basic_pipeline(self):
        events, report = convert_match(small_match())
        assert report.events_in == 4
        actions = [e.action for e in events]
        assert actions.count(core.END_OF_POSSESSION) == 2
        assert actions.count(core.GAME_OVER) == 1
        for e in events:
            e.validate()

    def test_score_updates_after_goal(self):
        events, _ = convert_match(small_match())
        post_goal = [e for e in events if e.team == "1610" and not core.is_marker(e.action)]
        assert post_goal[0].home_score == 1
        assert post_goal[0].goal_diff == 1
        shot = [e for e in events if e.action == core.SHOT][0]
        assert shot.home_score == 0  # score context entering the event

    def test_unmapped_dropped_and_counted(self):
        events, report = convert_match(small_match(with_unmapped=True), "drop")
        assert report.dropped_unmapped["Ground attacking duel"] == 1
        assert all(e.action in core.ACTION_TOKENS for e in events)

    def test_unmapped_fail_names_event(self):
        with pytest.raises(UnmappedActionError, match="Ground attacking duel"):
            convert_match(small_match(with_unmapped=True), "fail")


class TestConvertCorpus:
    def test_worker_count_invariance(self):
        matches = {m: small_match(m, with_unmapped=(m % 2 == 0)) for m in range(1, 9)}
        outputs = {}
        for workers in (1, 4):
            ds = convert_corpus(matches, max_workers=workers)
            outputs[workers] = write_uied_csv(ds.events)
        assert outputs[1] == outputs[4]

    def test_empty_corpus(self):
        ds = convert_corpus({}, max_workers=2)
        assert ds.events == []
        assert write_uied_csv(ds.events).startswith(b"match_id,poss_id")

    def test_failure_names_match(self):
        matches = {7: small_match(7, with_unmapped=True)}
        with pytest.raises(uied.ConversionError, match="match 7"):
            convert_corpus(matches, on_unmapped="fail")

    def test_output_ordered_by_match_id(self):
        matches = {m: small_match(m) for m in (5, 3, 9, 1)}
        ds = convert_corpus(matches, max_workers=4)
        ids = [e.match_id for e in ds.events]
        assert ids == sorted(ids)

    def test_csv_round_trip(self):
        ds = convert_corpus({1: small_match(1)})
        data = write_uied_csv(ds.events)
        back = read_uied_csv(data)
        assert len(back) == len(ds.events)
        for a, b in zip(back, ds.events):
            assert a.action == b.action
            assert math.isclose(a.start_x, b.start_x, abs_tol=5e-7)
            assert a.poss_id == b.poss_id


class TestSplitMatches:
    def test_paper_ratio_ten_matches(self):
        train, valid, test = split_matches(range(10), (0.6, 0.2, 0.2))
        assert (len(train), len(valid), len(test)) == (6, 2, 2)

    def test_rl_ratio_55_matches(self):
        train, valid, test = split_matches(range(55), (0.50, 0.05, 0.45))
        assert (len(train), len(valid), len(test)) == (28, 2, 25)

    def test_degenerate_all_train(self):
        train, valid, test = split_matches([5, 3, 1], (1.0, 0.0, 0.0))
        assert (train, valid, test) == ([1, 3, 5], [], [])

    def test_bad_ratio_sum(self):
        with pytest.raises(SplitError):
            split_matches(range(10), (0.5, 0.2, 0.2))

    def test_too_few_matches(self):
        with pytest.raises(SplitError):
            split_matches([1, 2], (0.6, 0.2, 0.2))

    @given(
        st.integers(min_value=3, max_value=200),
        st.tuples(
            st.floats(min_value=0.1, max_value=1),
            st.floats(min_value=0.1, max_value=1),
            st.floats(min_value=0.1, max_value=1),
        ),
    )
    @settings(max_examples=50)
    def test_partition_properties(self, n, weights):
        total = sum(weights)
        ratios = (weights[0] / total, weights[1] / total, 1 - weights[0] / total - weights[1] / total)
        ids = list(range(n))
        train, valid, test = split_matches(ids, ratios)
        assert sorted(train + valid + test) == ids
        assert not (set(train) & set(valid))
        assert not (set(valid) & set(test))
        assert not (set(train) & set(test))


class TestInvariantSuite:
    @given(st.lists(st.sampled_from(["a", "b"]), min_size=1, max_size=30))
    @settings(max_examples=40)
    def test_marker_counts_reconcile(self, teams):
        drafts = [draft(t, seconds=float(i)) for i, t in enumerate(teams)]
        events = derive_event_features(segment_and_flatten(drafts))
        counts = Counter(e.action for e in events)
        possessions = uied.group_possessions(events)
        assert counts[core.END_OF_POSSESSION] == len(possessions)
        assert counts[core.GAME_OVER] == 1
        for p in possessions:
            p.validate()
        for e in events:
            e.validate()

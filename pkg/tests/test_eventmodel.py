"""Codec, baseline and chained-classifier behavior on constructive fixtures."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pitchlab import core, eventmodel as em
from pitchlab.core import UiedEvent


def event(
    action=core.SHORT_PASS,
    delta_t=2.0,
    x=50.0,
    y=30.0,
    success=1,
    goal=0,
    home=1,
    seconds=10.0,
    match_id=1,
    poss_id=0,
):
    return UiedEvent(
        match_id=match_id,
        poss_id=poss_id,
        team="a" if home else "b",
        home_team=home,
        action=action,
        success=success,
        goal=goal,
        home_score=0,
        away_score=0,
        goal_diff=0,
        period=1,
        minute=int(seconds // 60),
        second=seconds % 60,
        seconds=seconds,
        delta_t=delta_t,
        start_x=x,
        start_y=y,
        delta_x=0.0,
        delta_y=0.0,
        distance=0.0,
        dist2goal=core.dist2goal(x, y),
        angle2goal=core.angle2goal(x, y),
    )


class TestEventCodec:
    def test_bin_counts(self):
        codec = em.EventCodec()
        assert codec.n_time_bins == 41
        assert codec.n_x_bins == 106
        assert codec.n_y_bins == 69
        assert codec.n_actions == 9

    def test_open_ended_time_bin(self):
        codec = em.EventCodec()
        assert codec.encode_time(39.9) == 39
        assert codec.encode_time(40.0) == 40
        assert codec.encode_time(400.0) == 40

    def test_coordinate_extremes(self):
        codec = em.EventCodec()
        assert codec.encode_x(0.0) == 0 and codec.encode_x(105.0) == 105
        assert codec.encode_y(0.0) == 0 and codec.encode_y(68.0) == 68

    @given(st.floats(min_value=0, max_value=40.999, allow_nan=False))
    def test_time_round_trip_within_half_bin(self, t):
        codec = em.EventCodec()
        assert abs(codec.decode_time(codec.encode_time(t)) - t) <= 0.5

    @given(st.floats(min_value=0, max_value=105, allow_nan=False))
    def test_x_round_trip_within_half_bin(self, x):
        codec = em.EventCodec()
        assert abs(codec.decode_x(codec.encode_x(x)) - x) <= 0.5

    @given(st.floats(min_value=0, max_value=68, allow_nan=False))
    def test_y_round_trip_within_half_bin(self, y):
        codec = em.EventCodec()
        assert abs(codec.decode_y(codec.encode_y(y)) - y) <= 0.5


class TestEncodeContext:
    def test_single_event_vector_length(self):
        vec = em.encode_context([event()], 1)
        assert vec.shape == (15,)

    def test_depth_three_padding(self):
        vec = em.encode_context([event()], 3)
        assert vec.shape == (45,)
        assert np.all(vec[:30] == 0.0)
        assert np.any(vec[30:] != 0.0)

    def test_normalized_slots_for_goal_shot(self):
        vec = em.encode_context([event(action=core.SHOT, delta_t=0.0, x=105.0, y=34.0)], 1)
        action_idx = core.action_class_index(core.SHOT)
        assert vec[action_idx] == 1.0
        assert vec[9] == 0.0  # delta_T slot
        assert vec[10] == 1.0  # x/105
        assert vec[11] == 0.5  # y/68

    def test_delta_t_clipped(self):
        vec = em.encode_context([event(delta_t=400.0)], 1)
        assert vec[9] == 1.0


class TestMajModel:
    def test_modal_action(self):
        events = [event(core.SHORT_PASS), event(core.SHORT_PASS), event(core.SHOT)]
        model = em.fit_maj(events)
        assert model.modal_action == core.SHORT_PASS

    def test_means(self):
        events = [event(delta_t=1.0, x=10, y=10), event(delta_t=3.0, x=30, y=20)]
        model = em.fit_maj(events)
        assert model.mean_delta_t == 2.0
        assert model.mean_start_x == 20.0
        assert model.mean_start_y == 15.0

    def test_empty_set_rejected(self):
        with pytest.raises(Exception):
            em.fit_maj([])

    def test_prediction_is_constant(self):
        model = em.fit_maj([event()])
        p1 = em.predict_next(model, [event(core.SHOT)])
        p2 = em.predict_next(model, [event(core.CROSS)])
        assert p1.action == p2.action == core.SHORT_PASS

    def test_accuracy_equals_modal_target_share_brute_force(self):
        # by construction, the baseline's accuracy is the empirical share
        # of its modal class among the evaluation targets
        from pitchlab import analytics

        rng = np.random.default_rng(4)
        actions = [core.TRAIN_ACTION_CLASSES[i] for i in rng.integers(0, 7, 60)]
        matches = [
            [event(a, seconds=3.0 * i) for i, a in enumerate(actions[:30])],
            [event(a, seconds=3.0 * i) for i, a in enumerate(actions[30:])],
        ]
        model = em.fit_maj([e for m in matches for e in m])
        metrics = analytics.evaluate_event_model(model, matches)
        targets = [e for m in matches for e in m[1:]]  # first events seed contexts
        share = sum(
            1 for e in targets if e.action == model.modal_action
        ) / len(targets)
        assert metrics.accuracy == share


def repeated_pattern_matches(n_events=30, n_matches=4):
    """Every next event is identical: a memorizable fixture."""
    target = dict(action=core.SHOT, delta_t=3.0, x=90.0, y=40.0, success=1, goal=0)
    matches = []
    for m in range(n_matches):
        events = [event(match_id=m, seconds=3.0 * i, **target) for i in range(n_events)]
        matches.append(events)
    return matches


class TestTrainLem:
    def test_smoke_one_epoch(self):
        matches = repeated_pattern_matches(n_events=6, n_matches=2)
        chain = em.lem_init(1, hidden_dim=8, seed=0)
        history = em.train_lem(
            chain, matches, matches, em.TrainConfig(num_epoch=1, batch_size=4)
        )
        assert {h.model for h in history} == {"action", "flags", "location"}
        assert all(math.isfinite(h.train_loss) for h in history)

    def test_overfit_memorizable_fixture(self):
        matches = repeated_pattern_matches()
        chain = em.lem_init(1, hidden_dim=16, seed=0)
        config = em.TrainConfig(num_epoch=200, batch_size=64, learning_rate=0.01,
                                early_stop_patience=200)
        history = em.train_lem(chain, matches, matches, config)
        per_model = {}
        for h in history:
            per_model.setdefault(h.model, []).append(h.train_loss)
        for name, losses in per_model.items():
            assert losses[-1] < losses[0], name

        prediction = em.predict_next(chain, [em.as_context(matches[0][0])], "greedy")
        assert prediction.action == core.SHOT
        assert prediction.probs["action"].max() > 0.99
        assert prediction.probs["delta_T"].max() > 0.99
        assert prediction.probs["x"].max() > 0.99
        assert prediction.delta_t == 3.5  # center of bin [3, 4)
        assert prediction.start_x == 90.0

    def test_early_stop_restores_best(self):
        matches = repeated_pattern_matches(n_events=10, n_matches=2)
        chain = em.lem_init(1, hidden_dim=8, seed=1)
        # diverging-ish setup: patience small, many epochs allowed
        config = em.TrainConfig(num_epoch=50, batch_size=8, learning_rate=0.05,
                                early_stop_patience=2)
        history = em.train_lem(chain, matches, matches, config)
        for name in ("action", "flags", "location"):
            epochs = [h for h in history if h.model == name]
            assert len(epochs) <= 50
            best = min(h.val_loss for h in epochs)
            # restored parameters reproduce the best validation loss
            arrays = em.build_training_arrays(matches, 1, chain.codec)
            x, y = {
                "action": (arrays.x_action, arrays.y_action),
                "flags": (arrays.x_flags, arrays.y_flags),
                "location": (arrays.x_location, arrays.y_location),
            }[name]
            model = dict(chain.models())[name]
            spec = em._loss_spec_for(name, chain.codec, y)
            from pitchlab import nn

            assert spec.value(nn.forward(model, x)) == pytest.approx(best, abs=1e-9)


class TestPredictNext:
    def test_sample_mode_reproducible(self):
        matches = repeated_pattern_matches(n_events=8, n_matches=1)
        chain = em.lem_init(1, hidden_dim=8, seed=2)
        ctx = [em.as_context(matches[0][0])]
        p1 = em.predict_next(chain, ctx, "sample", np.random.default_rng(7))
        p2 = em.predict_next(chain, ctx, "sample", np.random.default_rng(7))
        assert p1.action == p2.action
        assert p1.delta_t == p2.delta_t and p1.start_x == p2.start_x

    def test_probability_vectors_sum_to_one(self):
        chain = em.lem_init(3, hidden_dim=8, seed=3)
        ctx = [em.as_context(event())]
        p = em.predict_next(chain, ctx, "greedy")
        for key in ("action", "success", "goal", "delta_T", "x", "y"):
            assert abs(p.probs[key].sum() - 1.0) < 1e-9

    def test_unknown_mode_rejected(self):
        chain = em.lem_init(1, hidden_dim=4, seed=0)
        with pytest.raises(ValueError):
            em.predict_next(chain, [em.as_context(event())], "argmax")


class TestRandomSearch:
    def small_data(self):
        return repeated_pattern_matches(n_events=6, n_matches=2)

    def test_singleton_space(self):
        matches = self.small_data()
        space = {"hidden_dim": [8], "learning_rate": [0.01], "batch_size": [16]}
        config = em.TrainConfig(num_epoch=1)
        best, trials = em.random_search(space, 3, 0, matches, matches, 1, config)
        assert len(trials) == 3
        assert best["hidden_dim"] == 8
        assert all(t["config"]["hidden_dim"] == 8 for t in trials)

    def test_draws_only_from_lists(self):
        matches = self.small_data()
        space = {"hidden_dim": [4, 8, 16], "learning_rate": [0.01], "batch_size": [16]}
        config = em.TrainConfig(num_epoch=1)
        _, trials = em.random_search(space, 6, 1, matches, matches, 1, config)
        assert all(t["config"]["hidden_dim"] in (4, 8, 16) for t in trials)

    def test_same_seed_identical_sequence(self):
        matches = self.small_data()
        space = {"hidden_dim": [4, 8], "learning_rate": [0.01, 0.001], "batch_size": [16]}
        config = em.TrainConfig(num_epoch=1)
        _, t1 = em.random_search(space, 5, 42, matches, matches, 1, config)
        _, t2 = em.random_search(space, 5, 42, matches, matches, 1, config)
        assert [t["config"] for t in t1] == [t["config"] for t in t2]
        assert [t["val_loss"] for t in t1] == [t["val_loss"] for t in t2]

    def test_empty_choice_list_rejected(self):
        with pytest.raises(ValueError):
            em.random_search({"hidden_dim": []}, 1, 0, self.small_data(), self.small_data(), 1)

"""Rollout and per-timestep evaluation on controllable fixture chains."""

import math

import numpy as np

from pitchlab import core, eventmodel as em, simulate, uied
from pitchlab.simulate import (
    evaluate_simulation,
    possession_coverage,
    possession_targets,
    rollout,
    write_simulation_loss_csv,
)

from test_eventmodel import event  # noqa: F401  (shared fixture builder)


def biased_chain(action_token, delta_bin=3, x_bin=50, y_bin=30, depth=1):
    """Chain with zeroed weights and biases pinning the greedy outputs."""
    chain = em.lem_init(depth, hidden_dim=4, seed=0)
    for _, model in chain.models():
        for layer in model.layers:
            layer.w[:] = 0.0
            layer.b[:] = 0.0
    chain.model_a.layers[-1].b[core.action_class_index(action_token)] = 10.0
    nt, nx = chain.codec.n_time_bins, chain.codec.n_x_bins
    chain.model_c.layers[-1].b[delta_bin] = 10.0
    chain.model_c.layers[-1].b[nt + x_bin] = 10.0
    chain.model_c.layers[-1].b[nt + nx + y_bin] = 10.0
    return chain


def make_possessions(lengths, match_id=1):
    """Possessions with the given real-event counts (plus markers)."""
    drafts = []
    seconds = 0.0
    for i, n in enumerate(lengths):
        team = "a" if i % 2 == 0 else "b"
        for _ in range(n):
            d = uied.EventDraft(
                match_id=match_id,
                team=team,
                home_team=1 if team == "a" else 0,
                action=core.SHORT_PASS,
                success=1,
                goal=0,
                period=1,
                minute=int(seconds // 60),
                second=seconds % 60,
                start_x=50.0,
                start_y=30.0,
            )
            d.seconds = seconds
            seconds += 2.0
            drafts.append(d)
    stream = uied.append_markers(uied.segment_possessions(drafts))
    events = uied.derive_event_features(stream)
    return uied.group_possessions(events)


class TestRollout:
    def test_stop_token_gives_length_one(self):
        chain = biased_chain(core.END_OF_POSSESSION)
        out = rollout(chain, [em.as_context(event())])
        assert len(out) == 1
        assert out[0].action == core.END_OF_POSSESSION

    def test_zero_max_steps(self):
        chain = biased_chain(core.SHORT_PASS)
        assert rollout(chain, [em.as_context(event())], max_steps=0) == []

    def test_runs_to_budget_without_stop(self):
        chain = biased_chain(core.SHORT_PASS)
        out = rollout(chain, [em.as_context(event())], max_steps=5)
        assert len(out) == 5
        assert all(p.action == core.SHORT_PASS for p in out)

    def test_sampled_rollout_reproducible(self):
        chain = em.lem_init(1, hidden_dim=8, seed=5)
        ctx = [em.as_context(event())]
        a = rollout(chain, ctx, "sample", 10, np.random.default_rng(3))
        b = rollout(chain, ctx, "sample", 10, np.random.default_rng(3))
        assert [p.action for p in a] == [p.action for p in b]
        assert [p.start_x for p in a] == [p.start_x for p in b]

    def test_period_over_also_stops(self):
        chain = biased_chain(core.PERIOD_OVER)
        out = rollout(chain, [em.as_context(event())], max_steps=9)
        assert len(out) == 1


class TestEvaluateSimulation:
    def test_event_count_non_increasing(self):
        possessions = make_possessions([1, 3, 7, 2, 5, 9])
        chain = biased_chain(core.SHORT_PASS)
        rows = evaluate_simulation(chain, possessions, max_steps=12)
        counts = [r.event_count for r in rows]
        assert counts == sorted(counts, reverse=True)

    def test_two_event_possessions_populate_two_timesteps(self):
        possessions = make_possessions([2, 2, 2])
        chain = biased_chain(core.SHORT_PASS)
        rows = evaluate_simulation(chain, possessions, max_steps=6)
        populated = [r for r in rows if r.event_count > 0]
        assert len(populated) == 2  # one real follow-up + the marker step
        assert all(r.event_count == 3 for r in populated)

    def test_alignment_discards_excess(self):
        # the model never stops, truth has 2 steps: metrics only at t<=2
        possessions = make_possessions([2])
        chain = biased_chain(core.SHORT_PASS)
        rows = evaluate_simulation(chain, possessions, max_steps=8)
        assert rows[0].acc_action is not None and rows[1].acc_action is not None
        assert all(r.acc_action is None for r in rows[2:])

    def test_metric_ranges(self):
        possessions = make_possessions([4, 6, 3])
        chain = biased_chain(core.SHORT_PASS)
        rows = evaluate_simulation(chain, possessions, max_steps=10)
        for r in rows:
            if r.acc_action is not None:
                assert 0.0 <= r.acc_action <= 1.0
                assert r.time_mae >= 0 and r.x_mae >= 0 and r.y_mae >= 0
                assert all(
                    math.isfinite(v) for v in (r.acc_action, r.time_mae, r.x_mae, r.y_mae)
                )

    def test_greedy_determinism_byte_identical(self):
        possessions = make_possessions([3, 5, 2, 8])
        chain = em.lem_init(1, hidden_dim=8, seed=1)
        a = write_simulation_loss_csv(evaluate_simulation(chain, possessions))
        b = write_simulation_loss_csv(evaluate_simulation(chain, possessions))
        assert a == b

    def test_empty_cells_never_zero_filled(self):
        possessions = make_possessions([1])
        chain = biased_chain(core.SHORT_PASS)
        data = write_simulation_loss_csv(evaluate_simulation(chain, possessions, max_steps=4))
        lines = data.decode().splitlines()
        # beyond the single truth step, rows end with empty cells
        assert lines[3].endswith(",,,,")


class TestCoverage:
    def test_targets_include_first_marker_only(self):
        possessions = make_possessions([2, 1])
        targets = possession_targets(possessions[-1])
        # final possession of the match: "_" then period/game markers trail
        assert [e.action for e in targets] == [core.END_OF_POSSESSION]

    def test_coverage_fraction(self):
        possessions = make_possessions([1, 2, 30])
        # target counts: 2, 3, 31 -> horizon 26 covers 2 of 3
        assert possession_coverage(possessions, 26) == 2.0 / 3.0

    def test_empty_is_full_coverage(self):
        assert possession_coverage([], 26) == 1.0

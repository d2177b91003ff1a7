"""End-to-end command-line flows on small synthetic inputs."""

import csv
import io
import json

import pytest

from pitchlab import sar
from pitchlab.cli import main

from synthdata import sar_match_fixture, wyscout_corpus


@pytest.fixture(scope="module")
def wyscout_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("wyscout")
    events_b, matches_b = wyscout_corpus(6, seed=3)
    (root / "events.json").write_bytes(events_b)
    (root / "matches.json").write_bytes(matches_b)
    return root


@pytest.fixture(scope="module")
def uied_dir(wyscout_files, tmp_path_factory):
    out = tmp_path_factory.mktemp("uied")
    code = main(
        [
            "preprocess", "uied",
            "--provider", "wyscout",
            "--event-path", str(wyscout_files / "events.json"),
            "--match-path", str(wyscout_files / "matches.json"),
            "--out", str(out),
            "--max-workers", "2",
        ]
    )
    assert code == 0
    return out


def write_sar_inputs(root):
    events, tracking = sar_match_fixture(
        attack_frame_counts=(90, 100, 80), goal_attacks=(0,), match_id=3
    )
    ev_buf = io.StringIO(newline="")
    writer = csv.writer(ev_buf, lineterminator="\n")
    writer.writerow(sar.SAR_GENERIC_EVENT_COLUMNS)
    for d in events:
        writer.writerow(
            [d.match_id, d.frame_id, d.period, d.seconds, d.team, d.team_id,
             d.home_team, d.player_name, d.player_id, d.jersey_number,
             d.player_role_id, d.action, d.success, d.is_goal, d.ball_touch]
        )
    (root / "sar_events.csv").write_text(ev_buf.getvalue(), encoding="utf-8")

    home_buf = io.StringIO(newline="")
    away_buf = io.StringIO(newline="")
    for buf in (home_buf, away_buf):
        csv.writer(buf, lineterminator="\n").writerow(
            ["frame_id", "side", "jersey_number", "x", "y"]
        )
    hw = csv.writer(home_buf, lineterminator="\n")
    aw = csv.writer(away_buf, lineterminator="\n")
    for row in tracking:
        target = hw if row.side in ("home", "ball") else aw
        target.writerow(
            [row.frame_id, row.side, row.jersey_number or "", row.raw_x, row.raw_y]
        )
    (root / "tracking_home.csv").write_text(home_buf.getvalue(), encoding="utf-8")
    (root / "tracking_away.csv").write_text(away_buf.getvalue(), encoding="utf-8")


@pytest.fixture(scope="module")
def sar_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("sar_in")
    write_sar_inputs(root)
    out = tmp_path_factory.mktemp("sar_out")
    code = main(
        [
            "preprocess", "sar",
            "--provider", "generic",
            "--event-path", str(root / "sar_events.csv"),
            "--tracking-home", str(root / "tracking_home.csv"),
            "--tracking-away", str(root / "tracking_away.csv"),
            "--out", str(out),
            "--max-workers", "1",
        ]
    )
    assert code == 0
    return out


class TestPreprocessUied:
    def test_one_csv_per_match_plus_manifest(self, uied_dir):
        files = sorted(p.name for p in uied_dir.iterdir())
        assert sum(1 for f in files if f.endswith("_UIED.csv")) == 6
        assert "preprocess_uied_manifest.json" in files

    def test_worker_invariance_byte_identical(self, wyscout_files, tmp_path):
        outs = {}
        for workers in ("1", "4"):
            out = tmp_path / f"w{workers}"
            assert main(
                [
                    "preprocess", "uied",
                    "--provider", "wyscout",
                    "--event-path", str(wyscout_files / "events.json"),
                    "--match-path", str(wyscout_files / "matches.json"),
                    "--out", str(out),
                    "--max-workers", workers,
                ]
            ) == 0
            outs[workers] = b"".join(
                p.read_bytes() for p in sorted(out.glob("*_UIED.csv"))
            )
        assert outs["1"] == outs["4"]

    def test_manifest_counts_reconcile(self, uied_dir):
        manifest = json.loads((uied_dir / "preprocess_uied_manifest.json").read_text())
        inputs = manifest["inputs"]
        assert inputs["dropped_unmapped"] > 0
        # events_out == events_in - dropped + markers, exactly
        from pitchlab import core, uied as uiedmod

        markers = 0
        for path in uied_dir.glob("*_UIED.csv"):
            markers += sum(
                1
                for e in uiedmod.read_uied_csv(path.read_bytes())
                if core.is_marker(e.action)
            )
        assert inputs["events_out"] == inputs["events_in"] - inputs["dropped_unmapped"] + markers


class TestSplit:
    def test_manifests_partition_matches(self, uied_dir, tmp_path):
        out = tmp_path / "splits"
        assert main(
            ["split", "--ratios", "0.6,0.2,0.2", "--in", str(uied_dir), "--out", str(out)]
        ) == 0
        sizes = {}
        seen = set()
        for name in ("train", "valid", "test"):
            lines = (out / f"{name}.txt").read_text().split()
            sizes[name] = len(lines)
            for line in lines:
                assert (out / line).resolve().exists()
                assert line not in seen
                seen.add(line)
        assert sizes == {"train": 4, "valid": 1, "test": 1}

    def test_bad_ratios_fail_fast(self, uied_dir, tmp_path):
        assert main(
            ["split", "--ratios", "0.5,0.2,0.2", "--in", str(uied_dir),
             "--out", str(tmp_path / "x")]
        ) == 1


@pytest.fixture(scope="module")
def split_dir(uied_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("splits")
    assert main(
        ["split", "--ratios", "0.6,0.2,0.2", "--in", str(uied_dir), "--out", str(out)]
    ) == 0
    return out


def event_config(tmp_path, split_dir, save_name, extra=""):
    save = tmp_path / save_name
    cfg = tmp_path / f"{save_name}.yaml"
    cfg.write_text(
        f"train_path: {split_dir / 'train.txt'}\n"
        f"valid_path: {split_dir / 'valid.txt'}\n"
        f"save_path: {save}\n"
        "num_epoch: 2\n"
        "batch_size: 128\n"
        "learning_rate: 0.003\n"
        "hidden_dim: 16\n"
        "early_stop_patience: 2\n"
        "seed: 0\n" + extra,
        encoding="utf-8",
    )
    return cfg, save


class TestTrainEvent:
    def test_train_maj(self, split_dir, tmp_path):
        cfg, save = event_config(tmp_path, split_dir, "maj_run")
        assert main(["train", "event", "--model", "maj", "--config", str(cfg)]) == 0
        assert (save / "maj.model").exists()
        assert (save / "eval_metrics.csv").exists()
        manifest = json.loads((save / "train_event_manifest.json").read_text())
        assert manifest["seed"] == 0

    def test_train_lem1(self, split_dir, tmp_path):
        cfg, save = event_config(tmp_path, split_dir, "lem1_run")
        assert main(["train", "event", "--model", "lem1", "--config", str(cfg)]) == 0
        assert (save / "lem1.model").exists()
        metrics = (save / "metrics.csv").read_text().splitlines()
        assert metrics[0] == "model,epoch,train_loss,val_loss"
        assert len(metrics) > 1

    def test_search_event(self, split_dir, tmp_path):
        cfg, save = event_config(
            tmp_path, split_dir, "search_run",
            extra="optuna: True\noptuna_n_trials: 2\nhidden_dim: [8, 16]\n",
        )
        # hidden_dim list overrides the scalar line above it in YAML
        assert main(["search", "event", "--config", str(cfg)]) == 0
        trials = (save / "search_trials.csv").read_text().splitlines()
        assert len(trials) == 3  # header + 2 trials
        assert (save / "best_config.yaml").exists()


@pytest.fixture(scope="module")
def lem1_model(split_dir, tmp_path_factory):
    tmp = tmp_path_factory.mktemp("lem1_model")
    cfg, save = event_config(tmp, split_dir, "model_run")
    assert main(["train", "event", "--model", "lem1", "--config", str(cfg)]) == 0
    return save / "lem1.model"


class TestSimulateCli:
    def test_same_seed_byte_identical(self, lem1_model, split_dir, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(
                ["simulate", "--model", str(lem1_model), "--test",
                 str(split_dir / "test.txt"), "--mode", "sample", "--seed", "9",
                 "--max-steps", "12", "--out", str(out)]
            ) == 0
            outs.append((out / "simulation_loss.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_output_columns(self, lem1_model, split_dir, tmp_path):
        out = tmp_path / "sim"
        assert main(
            ["simulate", "--model", str(lem1_model), "--test",
             str(split_dir / "test.txt"), "--out", str(out)]
        ) == 0
        header = (out / "simulation_loss.csv").read_text().splitlines()[0]
        assert header == "timestep,event_count,acc_action,time_mae,x_mae,y_mae"


class TestAnalyzeCli:
    def test_possutil_table(self, lem1_model, split_dir, tmp_path):
        out = tmp_path / "scores"
        assert main(
            ["analyze", "possutil", "--model", str(lem1_model), "--in",
             str(split_dir / "test.txt"), "--out", str(out)]
        ) == 0
        header = (out / "possession_scores.csv").read_text().splitlines()[0]
        assert header == "match_id,poss_id,team,poss_util,poss_util_plus,hpus,hpus_plus"

    def test_hpus_intervals(self, lem1_model, split_dir, tmp_path):
        out = tmp_path / "hpus"
        assert main(
            ["analyze", "hpus", "--model", str(lem1_model), "--in",
             str(split_dir / "test.txt"), "--out", str(out), "--interval-min", "5"]
        ) == 0
        assert (out / "hpus_intervals.csv").exists()

    def test_heatmap_outputs(self, lem1_model, split_dir, tmp_path):
        out = tmp_path / "heat"
        assert main(
            ["analyze", "heatmap", "--model", str(lem1_model), "--in",
             str(split_dir / "test.txt"), "--out", str(out)]
        ) == 0
        rows = (out / "heatmap.csv").read_text().splitlines()
        assert len(rows) == 106
        assert (out / "heatmap.svg").read_bytes().startswith(b"<svg")


class TestSarAndRlCli:
    def test_sar_outputs(self, sar_dir):
        names = sorted(p.name for p in sar_dir.iterdir())
        assert "match_3_SAR_events.csv" in names
        assert "match_3_SAR_tracking.csv" in names
        assert "match_3_SAR_sequences.csv" in names

    def test_train_rl_and_export(self, sar_dir, tmp_path):
        save = tmp_path / "rl_run"
        cfg = tmp_path / "rl.yaml"
        cfg.write_text(
            f"save_path: {save}\nepochs: 2\nbatch_size: 256\nhidden_dim: [16]\n"
            "lambda1: 0.01\nlambda2: 0.05\nseed: 0\n",
            encoding="utf-8",
        )
        assert main(["train", "rl", "--config", str(cfg), "--in", str(sar_dir)]) == 0
        assert (save / "q.model").exists()
        history = (save / "rl_history.csv").read_text().splitlines()
        assert len(history) == 3  # header + 2 epochs

        index = (sar_dir / "match_3_SAR_sequences.csv").read_text().splitlines()
        start_frame = int(index[1].split(",")[3])
        out_file = tmp_path / "qviz" / "frame.csv"
        assert main(
            ["export", "qviz", "--model", str(save / "q.model"), "--in", str(sar_dir),
             "--match", "3", "--frame", str(start_frame + 5), "--out", str(out_file)]
        ) == 0
        lines = out_file.read_text().strip().splitlines()
        assert lines and all(len(l.split(",")) == 13 for l in lines)

    def test_missing_frame_fails(self, sar_dir, tmp_path):
        save = tmp_path / "rl_run2"
        cfg = tmp_path / "rl2.yaml"
        cfg.write_text(f"save_path: {save}\nepochs: 1\nhidden_dim: [8]\n", encoding="utf-8")
        assert main(["train", "rl", "--config", str(cfg), "--in", str(sar_dir)]) == 0
        assert main(
            ["export", "qviz", "--model", str(save / "q.model"), "--in", str(sar_dir),
             "--match", "3", "--frame", "999999", "--out", str(tmp_path / "x.csv")]
        ) == 1


class TestLabeltoolIngestCli:
    def test_ste1_to_uied(self, tmp_path):
        ste1 = (
            "#STE-1\n#frame_rate,25.0\n#range,pitch\n"
            "frame,seconds,event_type,team,px,py,x,y\n"
            "50,2.000000,Short Pass,home,0,0,30.0,30.0\n"
            "75,3.000000,Dribble,home,0,0,35.0,32.0\n"
            "100,4.000000,Shot,home,0,0,90.0,34.0\n"
        )
        src = tmp_path / "annotations.csv"
        src.write_text(ste1, encoding="utf-8")
        out = tmp_path / "uied"
        assert main(
            ["preprocess", "uied", "--provider", "labeltool",
             "--event-path", str(src), "--out", str(out), "--max-workers", "1"]
        ) == 0
        manifest = json.loads((out / "preprocess_uied_manifest.json").read_text())
        assert manifest["inputs"]["dropped_unmapped"] == 0

"""Command-line entry point.

Subcommands: preprocess (uied | sar), split, train (event | rl),
search event, simulate, analyze (possutil | hpus | heatmap), and
export qviz. Every run writes a JSON manifest (inputs, config echo,
seed, version, wall time) alongside its outputs; every random choice
flows from an explicit or defaulted seed (STARLAB_SEED, else 0).

On-disk layout produced/consumed here:

* standardized events: one ``match_<id>_UIED.csv`` per match
* split manifests: ``train.txt``/``valid.txt``/``test.txt`` listing
  per-match CSV paths relative to the manifest
* frame-level data: ``match_<id>_SAR_events.csv`` / ``_SAR_tracking.csv``
  / ``_SAR_sequences.csv`` triples
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import re
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import analytics, artifacts, config as configmod, eventmodel, ingest, rl, sar, simulate, uied
from .core import PitchlabError, UiedEvent


def default_seed(explicit: Optional[int]) -> int:
    if explicit is not None:
        return explicit
    return int(os.environ.get("STARLAB_SEED", "0"))


# ---------------------------------------------------------------------------
# dataset discovery and loading

_UIED_PATTERN = re.compile(r"match_(\d+)_UIED\.csv$")
_SAR_EVENTS_PATTERN = re.compile(r"match_(\d+)_SAR_events\.csv$")


def uied_csv_path(out_dir: Path, match_id: int) -> Path:
    return out_dir / f"match_{match_id}_UIED.csv"


def load_uied_matches(path: Path) -> List[List[UiedEvent]]:
    """Per-match event lists from a dir, a split manifest, or one CSV."""
    path = Path(path)
    if path.is_dir():
        files = sorted(
            (int(m.group(1)), p)
            for p in path.iterdir()
            if (m := _UIED_PATTERN.search(p.name))
        )
        if not files:
            raise PitchlabError(f"no match_<id>_UIED.csv files under {path}")
        return [uied.read_uied_csv(p.read_bytes()) for _, p in files]
    if path.suffix == ".txt":
        matches = []
        for line in path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line:
                matches.append(uied.read_uied_csv((path.parent / line).read_bytes()))
        return matches
    events = uied.read_uied_csv(path.read_bytes())
    by_match: Dict[int, List[UiedEvent]] = {}
    for e in events:
        by_match.setdefault(e.match_id, []).append(e)
    return [by_match[mid] for mid in sorted(by_match)]


def load_sar_sequences(path: Path, match_id: Optional[int] = None):
    path = Path(path)
    triples = []
    for p in sorted(path.iterdir()):
        m = _SAR_EVENTS_PATTERN.search(p.name)
        if not m:
            continue
        mid = int(m.group(1))
        if match_id is not None and mid != match_id:
            continue
        base = p.name.replace("_SAR_events.csv", "")
        triples.append(
            (
                mid,
                p,
                path / f"{base}_SAR_tracking.csv",
                path / f"{base}_SAR_sequences.csv",
            )
        )
    if not triples:
        raise PitchlabError(f"no match_<id>_SAR_events.csv files under {path}")
    sequences = []
    for _, events_p, tracking_p, index_p in triples:
        sequences.extend(
            sar.load_sar_match(
                events_p.read_bytes(), tracking_p.read_bytes(), index_p.read_bytes()
            )
        )
    return sequences


# ---------------------------------------------------------------------------
# preprocess

def _parse_raw_events(args) -> Tuple[List[ingest.RawEvent], ingest.ParseReport]:
    report = ingest.ParseReport()
    event_path = Path(args.event_path)
    if args.provider == "wyscout":
        if not args.match_path:
            raise PitchlabError("wyscout ingestion needs --match-path")
        events = ingest.parse_wyscout(
            event_path.read_bytes(), Path(args.match_path).read_bytes(), report
        )
    elif args.provider == "statsbomb":
        events = []
        files = sorted(event_path.glob("*.json")) if event_path.is_dir() else [event_path]
        for f in files:
            stem_id = int(f.stem) if f.stem.isdigit() else 0
            events.extend(ingest.parse_statsbomb(f.read_bytes(), stem_id, report))
    elif args.provider == "generic":
        column_map = (
            ingest.DATASTADIUM_COLUMN_MAP
            if args.column_map == "datastadium"
            else ingest.NEUTRAL_COLUMN_MAP
        )
        events = ingest.parse_generic_event_csv(event_path.read_bytes(), column_map, report=report)
    elif args.provider == "labeltool":
        events = ingest.parse_labeltool_csv(event_path.read_bytes(), report)
    else:
        raise PitchlabError(f"unknown provider {args.provider!r}")
    return events, report


def cmd_preprocess_uied(args) -> int:
    t0 = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    raw_events, parse_report = _parse_raw_events(args)
    dataset = uied.convert_corpus(
        raw_events, max_workers=args.max_workers, on_unmapped=args.on_unmapped
    )
    outputs = []
    by_match: Dict[int, List[UiedEvent]] = {}
    for e in dataset.events:
        by_match.setdefault(e.match_id, []).append(e)
    for mid in sorted(by_match):
        path = uied_csv_path(out_dir, mid)
        path.write_bytes(uied.write_uied_csv(by_match[mid]))
        outputs.append(path.name)
    artifacts.write_run_manifest(
        out_dir,
        "preprocess uied",
        inputs={
            "provider": args.provider,
            "event_path": str(args.event_path),
            "match_path": str(args.match_path) if args.match_path else None,
            "events_in": dataset.report.events_in,
            "events_out": dataset.report.events_out,
            "dropped_unmapped": sum(dataset.report.dropped_unmapped.values()),
            "parse_warnings": dict(parse_report.warnings),
        },
        config_echo={"max_workers": args.max_workers, "on_unmapped": args.on_unmapped},
        seed=None,
        wall_time_s=time.time() - t0,
        outputs=outputs,
        warnings=[f"{k}: {v}" for k, v in dataset.report.warnings.items()],
    )
    return 0


def _convert_sar_task(task):
    mid, events, tracking, frame_rate, max_gap, epv_text = task
    grid = sar.read_epv_grid(epv_text) if epv_text else sar.default_epv()
    return mid, sar.convert_sar_match(events, tracking, frame_rate, max_gap, grid)


def cmd_preprocess_sar(args) -> int:
    t0 = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    drafts = sar.read_sar_generic_event_csv(Path(args.event_path).read_bytes())
    tracking_rows: List[ingest.RawTrackingRow] = []
    track_report = ingest.ParseReport()
    for track_path in (args.tracking_home, args.tracking_away):
        if track_path:
            rows, _ = ingest.parse_tracking_csv(
                Path(track_path).read_bytes(), args.frame_rate, report=track_report
            )
            tracking_rows.extend(rows)

    epv_text = Path(args.epv_grid).read_bytes() if args.epv_grid else None
    by_match: Dict[int, Tuple[list, list]] = {}
    for d in drafts:
        by_match.setdefault(d.match_id, ([], []))[0].append(d)
    for r in tracking_rows:
        if r.match_id in by_match:
            by_match[r.match_id][1].append(r)
        else:
            by_match.setdefault(r.match_id, ([], []))[1].append(r)
    # single-file tracking without match ids attaches to the only match
    if len(by_match) == 2 and 0 in by_match and not by_match[0][0]:
        orphan = by_match.pop(0)[1]
        only = next(iter(by_match))
        by_match[only][1].extend(orphan)

    tasks = [
        (mid, evs, trs, args.frame_rate, args.max_gap, epv_text)
        for mid, (evs, trs) in sorted(by_match.items())
    ]
    results = {}
    if args.max_workers > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.max_workers) as pool:
            for mid, match in pool.map(_convert_sar_task, tasks):
                results[mid] = match
    else:
        for task in tasks:
            mid, match = _convert_sar_task(task)
            results[mid] = match

    outputs = []
    total_sequences = 0
    for mid in sorted(results):
        match = results[mid]
        total_sequences += len(match.sequences)
        for suffix, data in (
            ("events", sar.write_sar_event_csv(match.events)),
            ("tracking", sar.write_sar_tracking_csv(match.tracking)),
            ("sequences", sar.write_sequence_index_csv(match.sequences)),
        ):
            path = out_dir / f"match_{mid}_SAR_{suffix}.csv"
            path.write_bytes(data)
            outputs.append(path.name)
    artifacts.write_run_manifest(
        out_dir,
        "preprocess sar",
        inputs={
            "event_path": str(args.event_path),
            "tracking_home": str(args.tracking_home),
            "tracking_away": str(args.tracking_away),
            "sequences": total_sequences,
            "tracking_rows": track_report.rows_out,
        },
        config_echo={
            "frame_rate": args.frame_rate,
            "max_gap": args.max_gap,
            "max_workers": args.max_workers,
            "epv_grid": str(args.epv_grid) if args.epv_grid else "default",
        },
        seed=None,
        wall_time_s=time.time() - t0,
        outputs=outputs,
    )
    return 0


def cmd_split(args) -> int:
    t0 = time.time()
    in_dir = Path(args.input)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ratios = tuple(float(r) for r in args.ratios.split(","))
    if len(ratios) != 3:
        raise PitchlabError(f"--ratios needs three comma-separated values, got {args.ratios}")
    files = {
        int(m.group(1)): p
        for p in in_dir.iterdir()
        if (m := _UIED_PATTERN.search(p.name))
    }
    if not files:
        raise PitchlabError(f"no match_<id>_UIED.csv files under {in_dir}")
    train, valid, test = uied.split_matches(sorted(files), ratios)
    outputs = []
    for name, ids in (("train", train), ("valid", valid), ("test", test)):
        manifest = out_dir / f"{name}.txt"
        lines = [os.path.relpath(files[mid], out_dir) for mid in ids]
        manifest.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        outputs.append(manifest.name)
    artifacts.write_run_manifest(
        out_dir,
        "split",
        inputs={"in": str(in_dir), "n_matches": len(files)},
        config_echo={"ratios": list(ratios), "sizes": [len(train), len(valid), len(test)]},
        seed=None,
        wall_time_s=time.time() - t0,
        outputs=outputs,
    )
    return 0


# ---------------------------------------------------------------------------
# training and search

def _event_train_setup(cfg: configmod.LoadedConfig, model_kind: str, seed: int):
    depth = 1 if model_kind in ("maj", "lem1") else 3
    seq_len = int(cfg.scalar("seq_len", 40) or 40)
    depth = min(depth, seq_len) if seq_len > 0 else depth
    train_matches = load_uied_matches(Path(cfg.scalar("train_path")))
    valid_matches = load_uied_matches(Path(cfg.scalar("valid_path")))
    train_config = eventmodel.TrainConfig(
        num_epoch=int(cfg.scalar("num_epoch", 30)),
        batch_size=int(cfg.scalar("batch_size", 256)),
        learning_rate=float(cfg.scalar("learning_rate", 0.001)),
        early_stop_patience=int(cfg.scalar("early_stop_patience", 5)),
        seed=seed,
    )
    return depth, train_matches, valid_matches, train_config


def cmd_train_event(args) -> int:
    t0 = time.time()
    cfg = configmod.load_config(args.config)
    for warning in cfg.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    seed = default_seed(args.seed if args.seed is not None else cfg.scalar("seed"))
    save_dir = Path(cfg.scalar("save_path", "."))
    save_dir.mkdir(parents=True, exist_ok=True)
    depth, train_matches, valid_matches, train_config = _event_train_setup(
        cfg, args.model, seed
    )
    outputs = []
    if args.model == "maj":
        model = eventmodel.fit_maj([e for m in train_matches for e in m])
        model_path = save_dir / "maj.model"
        artifacts.save_maj(model_path, model, cfg.values)
    else:
        chain = eventmodel.lem_init(
            depth,
            hidden_dim=int(cfg.scalar("hidden_dim", 64)),
            num_layers=int(cfg.scalar("num_layers", 1)),
            seed=seed,
        )
        history = eventmodel.train_lem(chain, train_matches, valid_matches, train_config)
        model = chain
        model_path = save_dir / f"{args.model}.model"
        artifacts.save_lem_chain(model_path, chain, cfg.values)
        metrics_path = save_dir / "metrics.csv"
        with metrics_path.open("w", encoding="utf-8", newline="") as f:
            f.write("model,epoch,train_loss,val_loss\n")
            for m in history:
                f.write(f"{m.model},{m.epoch},{m.train_loss:.9f},{m.val_loss:.9f}\n")
        outputs.append(metrics_path.name)
    outputs.insert(0, model_path.name)

    evaluation = analytics.evaluate_event_model(model, valid_matches)
    params, flops = analytics.model_report(model)
    eval_path = save_dir / "eval_metrics.csv"
    with eval_path.open("w", encoding="utf-8", newline="") as f:
        f.write("accuracy,macro_f1,time_mae,x_mae,y_mae,n_events,params,flops\n")
        f.write(
            f"{evaluation.accuracy:.6f},{evaluation.macro_f1:.6f},"
            f"{evaluation.time_mae:.6f},{evaluation.x_mae:.6f},{evaluation.y_mae:.6f},"
            f"{evaluation.n_events},{params},{flops}\n"
        )
    outputs.append(eval_path.name)
    artifacts.write_run_manifest(
        save_dir,
        "train event",
        inputs={"model": args.model, "config": str(args.config)},
        config_echo=cfg.values,
        seed=seed,
        wall_time_s=time.time() - t0,
        outputs=outputs,
        warnings=cfg.warnings,
    )
    return 0


def cmd_search_event(args) -> int:
    t0 = time.time()
    cfg = configmod.load_config(args.config)
    for warning in cfg.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if not cfg.scalar("optuna", True):
        print("warning: search requested with optuna: False in config", file=sys.stderr)
    seed = default_seed(args.seed if args.seed is not None else cfg.scalar("seed"))
    save_dir = Path(cfg.scalar("save_path", "."))
    save_dir.mkdir(parents=True, exist_ok=True)
    space = cfg.search_space()
    if not space:
        raise PitchlabError("no list-valued hyperparameter fields to search")
    n_trials = int(cfg.scalar("optuna_n_trials", 100))
    depth = 3 if cfg.scalar("model", "lem3") == "lem3" else 1
    train_matches = load_uied_matches(Path(cfg.scalar("train_path")))
    valid_matches = load_uied_matches(Path(cfg.scalar("valid_path")))
    base = eventmodel.TrainConfig(
        num_epoch=int(cfg.scalar("num_epoch", 20)),
        early_stop_patience=int(cfg.scalar("early_stop_patience", 5)),
        seed=seed,
    )
    best, trials = eventmodel.random_search(
        space, n_trials, seed, train_matches, valid_matches, depth, base
    )
    trials_path = save_dir / "search_trials.csv"
    keys = sorted(space)
    with trials_path.open("w", encoding="utf-8", newline="") as f:
        f.write("trial," + ",".join(keys) + ",val_loss\n")
        for t in trials:
            cells = [str(t["trial"])] + [str(t["config"][k]) for k in keys]
            f.write(",".join(cells) + f",{t['val_loss']:.9f}\n")
    best_path = save_dir / "best_config.yaml"
    with best_path.open("w", encoding="utf-8") as f:
        for key in keys:
            f.write(f"{key}: {best[key]}\n")
    artifacts.write_run_manifest(
        save_dir,
        "search event",
        inputs={"config": str(args.config), "n_trials": n_trials, "space": {k: list(v) for k, v in space.items()}},
        config_echo=cfg.values,
        seed=seed,
        wall_time_s=time.time() - t0,
        outputs=[trials_path.name, best_path.name],
        warnings=cfg.warnings,
    )
    return 0


def cmd_train_rl(args) -> int:
    t0 = time.time()
    cfg = configmod.load_config(args.config, configmod.RL_CONFIG_KEYS)
    for warning in cfg.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    seed = default_seed(args.seed if args.seed is not None else cfg.scalar("seed"))
    save_dir = Path(cfg.scalar("save_path", "."))
    save_dir.mkdir(parents=True, exist_ok=True)
    sequences = load_sar_sequences(Path(args.input))
    if len(sequences) < 3:
        raise PitchlabError(f"need at least 3 episodes to split, found {len(sequences)}")
    train_idx, valid_idx, test_idx = uied.split_matches(
        range(len(sequences)), (0.50, 0.05, 0.45)
    )
    train_seqs = [sequences[i] for i in train_idx]
    valid_seqs = [sequences[i] for i in valid_idx] or train_seqs[-1:]
    test_seqs = [sequences[i] for i in test_idx]

    hidden = cfg.get("hidden_dim", [64, 64])
    hidden_dims = tuple(int(h) for h in (hidden if isinstance(hidden, list) else [hidden]))
    rl_config = rl.RlConfig(
        gamma=float(cfg.scalar("gamma", 1.0)),
        lambda1=float(cfg.scalar("lambda1", 0.01)),
        lambda2=float(cfg.scalar("lambda2", 0.0001)),
        learning_rate=float(cfg.scalar("learning_rate", 0.001)),
        epochs=int(cfg.scalar("epochs", cfg.scalar("num_epoch", 20))),
        batch_size=int(cfg.scalar("batch_size", 256)),
        seed=seed,
        hidden_dims=hidden_dims,
    )
    q, history = rl.train_q(train_seqs, valid_seqs, rl_config)
    model_path = save_dir / "q.model"
    artifacts.save_mlp(model_path, q, kind="q_network", config_echo=cfg.values)
    history_path = save_dir / "rl_history.csv"
    with history_path.open("w", encoding="utf-8", newline="") as f:
        f.write("epoch,train_total,train_td,train_as,train_l1,valid_total,valid_td,valid_accuracy\n")
        for m in history:
            f.write(
                f"{m.epoch},{m.train_total:.9f},{m.train_td:.9f},{m.train_as:.9f},"
                f"{m.train_l1:.9f},{m.valid_total:.9f},{m.valid_td:.9f},{m.valid_accuracy:.6f}\n"
            )
    outputs = [model_path.name, history_path.name]
    if test_seqs:
        accuracy, td_loss = rl.evaluate_q_sequences(q, test_seqs, rl_config.gamma)
        test_path = save_dir / "rl_test_metrics.csv"
        test_path.write_text(
            f"action_accuracy,td_loss\n{accuracy:.6f},{td_loss:.9f}\n", encoding="utf-8"
        )
        outputs.append(test_path.name)
    artifacts.write_run_manifest(
        save_dir,
        "train rl",
        inputs={"config": str(args.config), "in": str(args.input),
                "episodes": len(sequences)},
        config_echo=cfg.values,
        seed=seed,
        wall_time_s=time.time() - t0,
        outputs=outputs,
        warnings=cfg.warnings,
    )
    return 0


# ---------------------------------------------------------------------------
# simulation, analytics, export

def cmd_simulate(args) -> int:
    t0 = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = default_seed(args.seed)
    model = artifacts.load_model(args.model)
    matches = load_uied_matches(Path(args.test))
    possessions = []
    for events in matches:
        possessions.extend(uied.group_possessions(events))
    rows = simulate.evaluate_simulation(
        model, possessions, mode=args.mode, max_steps=args.max_steps, seed=seed
    )
    out_path = out_dir / "simulation_loss.csv"
    out_path.write_bytes(simulate.write_simulation_loss_csv(rows))
    artifacts.write_run_manifest(
        out_dir,
        "simulate",
        inputs={"model": str(args.model), "test": str(args.test),
                "possessions": len(possessions),
                "coverage": simulate.possession_coverage(possessions, args.max_steps)},
        config_echo={"mode": args.mode, "max_steps": args.max_steps},
        seed=seed,
        wall_time_s=time.time() - t0,
        outputs=[out_path.name],
    )
    return 0


def cmd_analyze(args) -> int:
    t0 = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = artifacts.load_model(args.model) if args.model else None
    matches = load_uied_matches(Path(args.input))
    possessions = []
    for events in matches:
        possessions.extend(uied.group_possessions(events))
    outputs = []
    if args.kind in ("possutil", "hpus"):
        if model is None and args.kind == "possutil":
            raise PitchlabError("analyze possutil needs --model")
        if model is None:
            print("warning: no --model; poss_util columns zeroed", file=sys.stderr)
        scores = (
            analytics.score_possessions(model, possessions)
            if model is not None
            else [
                analytics.PossessionScore(
                    p.match_id, p.poss_id, p.team, 0.0, 0.0, *analytics.hpus(p)
                )
                for p in possessions
            ]
        )
        table_path = out_dir / "possession_scores.csv"
        table_path.write_bytes(analytics.write_possession_scores_csv(scores))
        outputs.append(table_path.name)
        if args.kind == "hpus":
            rows = analytics.aggregate_by_interval(
                possessions, scores, interval_minutes=args.interval_min
            )
            interval_path = out_dir / "hpus_intervals.csv"
            with interval_path.open("w", encoding="utf-8", newline="") as f:
                f.write("match_id,team,interval,hpus_mean,hpus_plus_mean,n_possessions\n")
                for r in rows:
                    f.write(
                        f"{r['match_id']},{r['team']},{r['interval']},"
                        f"{r['hpus_mean']:.6f},{r['hpus_plus_mean']:.6f},{r['n_possessions']}\n"
                    )
            outputs.append(interval_path.name)
    else:  # heatmap
        if model is None:
            raise PitchlabError("analyze heatmap needs --model")
        pool = [
            p
            for p in possessions
            if (args.match is None or p.match_id == args.match)
            and (args.poss is None or p.poss_id == args.poss)
        ]
        if not pool:
            raise PitchlabError("no possession matches the --match/--poss selection")
        depth = model.context_depth if isinstance(model, eventmodel.LemChain) else 1
        context = [eventmodel.as_context(e) for e in pool[0].events[:depth]]
        grid = analytics.heatmap(model, context)
        csv_path = out_dir / "heatmap.csv"
        csv_path.write_bytes(analytics.write_heatmap_csv(grid))
        svg_path = out_dir / "heatmap.svg"
        svg_path.write_bytes(analytics.render_heatmap_svg(grid))
        outputs.extend([csv_path.name, svg_path.name])
    artifacts.write_run_manifest(
        out_dir,
        f"analyze {args.kind}",
        inputs={"model": str(args.model) if args.model else None,
                "in": str(args.input), "possessions": len(possessions)},
        config_echo={"interval_min": args.interval_min,
                     "match": args.match, "poss": args.poss},
        seed=None,
        wall_time_s=time.time() - t0,
        outputs=outputs,
    )
    return 0


def cmd_export_qviz(args) -> int:
    t0 = time.time()
    q = artifacts.load_model(args.model)
    sequences = load_sar_sequences(Path(args.input), match_id=args.match)
    target = None
    frame_index = None
    for sequence in sequences:
        ids = [f.frame_id for f in sequence.frames]
        if args.frame in ids:
            target = sequence
            frame_index = ids.index(args.frame)
            break
    if target is None:
        raise PitchlabError(
            f"frame {args.frame} is not inside any episode of match {args.match}"
        )
    records = rl.export_q_viz(q, target, frame_index)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(rl.write_q_viz(records))
    artifacts.write_run_manifest(
        out_path.parent,
        "export qviz",
        inputs={"model": str(args.model), "in": str(args.input),
                "match": args.match, "frame": args.frame, "players": len(records)},
        config_echo={},
        seed=None,
        wall_time_s=time.time() - t0,
        outputs=[out_path.name],
    )
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pitchlab",
        description="Soccer event/tracking standardization, models and analytics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pre = sub.add_parser("preprocess", help="convert provider data")
    pre_sub = pre.add_subparsers(dest="schema", required=True)

    pre_uied = pre_sub.add_parser("uied", help="provider events -> standardized CSVs")
    pre_uied.add_argument("--provider", required=True,
                          choices=["wyscout", "statsbomb", "generic", "labeltool"])
    pre_uied.add_argument("--event-path", required=True)
    pre_uied.add_argument("--match-path", default=None)
    pre_uied.add_argument("--column-map", default="neutral",
                          choices=["neutral", "datastadium"])
    pre_uied.add_argument("--out", required=True)
    pre_uied.add_argument("--max-workers", type=int, default=1)
    pre_uied.add_argument("--on-unmapped", default="drop", choices=["drop", "fail"])
    pre_uied.set_defaults(func=cmd_preprocess_uied)

    pre_sar = pre_sub.add_parser("sar", help="frame-level events + tracking -> episodes")
    pre_sar.add_argument("--provider", default="generic", choices=["generic"])
    pre_sar.add_argument("--event-path", required=True)
    pre_sar.add_argument("--tracking-home", required=True)
    pre_sar.add_argument("--tracking-away", default=None)
    pre_sar.add_argument("--out", required=True)
    pre_sar.add_argument("--max-workers", type=int, default=1)
    pre_sar.add_argument("--frame-rate", type=float, default=sar.DEFAULT_FRAME_RATE)
    pre_sar.add_argument("--max-gap", type=int, default=sar.DEFAULT_MAX_GAP)
    pre_sar.add_argument("--epv-grid", default=None)
    pre_sar.set_defaults(func=cmd_preprocess_sar)

    split = sub.add_parser("split", help="partition matches into train/valid/test")
    split.add_argument("--ratios", required=True)
    split.add_argument("--in", dest="input", required=True)
    split.add_argument("--out", required=True)
    split.set_defaults(func=cmd_split)

    train = sub.add_parser("train", help="fit a model")
    train_sub = train.add_subparsers(dest="target", required=True)
    train_event = train_sub.add_parser("event", help="next-event models")
    train_event.add_argument("--model", required=True, choices=["maj", "lem1", "lem3"])
    train_event.add_argument("--config", required=True)
    train_event.add_argument("--seed", type=int, default=None)
    train_event.set_defaults(func=cmd_train_event)
    train_rl = train_sub.add_parser("rl", help="per-player Q-function")
    train_rl.add_argument("--config", required=True)
    train_rl.add_argument("--in", dest="input", required=True)
    train_rl.add_argument("--seed", type=int, default=None)
    train_rl.set_defaults(func=cmd_train_rl)

    search = sub.add_parser("search", help="random hyperparameter search")
    search_sub = search.add_subparsers(dest="target", required=True)
    search_event = search_sub.add_parser("event")
    search_event.add_argument("--config", required=True)
    search_event.add_argument("--seed", type=int, default=None)
    search_event.set_defaults(func=cmd_search_event)

    sim = sub.add_parser("simulate", help="possession rollouts vs truth")
    sim.add_argument("--model", required=True)
    sim.add_argument("--test", required=True)
    sim.add_argument("--mode", default="greedy", choices=["greedy", "sample"])
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--max-steps", type=int, default=simulate.MAX_SIM_STEPS)
    sim.add_argument("--out", default=".")
    sim.set_defaults(func=cmd_simulate)

    analyze = sub.add_parser("analyze", help="possession metrics and heat maps")
    analyze.add_argument("kind", choices=["possutil", "hpus", "heatmap"])
    analyze.add_argument("--model", default=None)
    analyze.add_argument("--in", dest="input", required=True)
    analyze.add_argument("--out", required=True)
    analyze.add_argument("--interval-min", type=float, default=5.0)
    analyze.add_argument("--match", type=int, default=None)
    analyze.add_argument("--poss", type=int, default=None)
    analyze.set_defaults(func=cmd_analyze)

    export = sub.add_parser("export", help="serialize model views")
    export_sub = export.add_subparsers(dest="target", required=True)
    export_qviz = export_sub.add_parser("qviz", help="directional Q-values per player")
    export_qviz.add_argument("--model", required=True)
    export_qviz.add_argument("--in", dest="input", required=True)
    export_qviz.add_argument("--match", type=int, required=True)
    export_qviz.add_argument("--frame", type=int, required=True)
    export_qviz.add_argument("--out", required=True)
    export_qviz.set_defaults(func=cmd_export_qviz)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PitchlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

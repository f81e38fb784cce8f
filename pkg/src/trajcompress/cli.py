"""Command-line interface.

Subcommands: preprocess, generate, train, compress, reconstruct, simplify,
evaluate, grid. Configuration comes from an optional JSON file plus flag
overrides; every run writes its resolved configuration beside its outputs.
Exit codes: 0 success, 1 configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from fractions import Fraction

import numpy as np

from . import autoencoder as ae
from .core import (GEOTEMPORAL, SPATIAL3D, Trajectory, normalize,
                   read_trajectories_csv, write_trajectories_csv)
from .estimator import LstmAutoencoder
from .experiment import (ConfigurationError, DataError, ExperimentConfig,
                         emit_report, run_grid, scenario_grid, synthetic_corpus)
from .metrics import (EUCLIDEAN_3D, HAVERSINE, MetricConfig, discrete_frechet,
                      dtw_dependent, dtw_independent, mean_pointwise,
                      write_metric_rows)
from .preprocess import PreprocessConfig, preprocess_log
from .simplify import (douglas_peucker, find_epsilon_for_target, td_tr,
                       write_simplified_csv)


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as e:
        raise ConfigurationError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigurationError("config file must hold a JSON object")
    return doc


def _write_resolved_config(out_dir, doc: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "resolved_config.json"), "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)


def _read_trajectories(path, mode=None):
    try:
        trajs = read_trajectories_csv(path, mode=mode)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise DataError(f"{path}: {e}") from e
    if not trajs:
        raise DataError(f"{path}: no trajectories found")
    return trajs


def _parse_ratio(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigurationError(f"bad ratio {text!r}") from e


def _cmd_generate(args) -> int:
    corpus = synthetic_corpus(args.kind, args.n, args.seed,
                              min_len=args.min_len, max_len=args.max_len,
                              artifacts=not args.clean)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "trajectories.csv")
    write_trajectories_csv(out_path, corpus)
    _write_resolved_config(args.out, {"command": "generate", "kind": args.kind,
                                      "n": args.n, "seed": args.seed,
                                      "min_len": args.min_len, "max_len": args.max_len,
                                      "artifacts": not args.clean})
    print(f"wrote {len(corpus)} trajectories to {out_path}")
    return 0


def _cmd_preprocess(args) -> int:
    cfg_doc = _load_config(args.config)
    try:
        pp = PreprocessConfig(**{k: tuple(v) if k == "bbox" else v
                                 for k, v in cfg_doc.get("preprocess", {}).items()})
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"bad preprocess config: {e}") from e
    try:
        with open(args.input) as f:
            trajectories, stats = preprocess_log(f, pp)
    except OSError as e:
        raise DataError(f"cannot read {args.input}: {e}") from e
    except ValueError as e:
        raise DataError(str(e)) from e
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, "trajectories.csv")
    write_trajectories_csv(out_csv, trajectories)
    with open(os.path.join(args.out, "summary.json"), "w") as f:
        f.write(stats.to_json())
    _write_resolved_config(args.out, {"command": "preprocess",
                                      "input": args.input,
                                      "preprocess": asdict(pp)})
    print(f"wrote {len(trajectories)} trajectories; summary.json has per-rule counts")
    return 0


def _infer_windows(trajs, seq_len: int) -> np.ndarray:
    from .core import chunk
    windows = [w.points for t in trajs for w in chunk(t, seq_len)]
    if not windows:
        raise DataError(f"no windows of length {seq_len} in input")
    return np.stack(windows)


def _cmd_train(args) -> int:
    trajs = _read_trajectories(args.input)
    if args.latent_dim is not None:
        latent = args.latent_dim
    elif args.ratio is not None:
        try:
            latent = ae.latent_dim_for_ratio(args.seq_len, _parse_ratio(args.ratio))
        except ValueError as e:
            raise ConfigurationError(str(e)) from e
    else:
        raise ConfigurationError("need --latent-dim or --ratio")
    X = _infer_windows(trajs, args.seq_len)
    est = LstmAutoencoder(seq_len=args.seq_len, latent_dim=latent,
                          hidden_size=args.hidden, loss=args.loss,
                          epochs=args.epochs, batch_size=args.batch_size,
                          learning_rate=args.learning_rate, seed=args.seed)
    est.fit(X)
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.json")
    ae.save_model(est.model_, model_path, seed=args.seed)
    _write_resolved_config(args.out, {"command": "train", "input": args.input,
                                      **est.get_params()})
    print(f"trained on {len(X)} windows; final loss {est.loss_history_[-1]:.6g}; "
          f"saved {model_path}")
    return 0


def _cmd_compress(args) -> int:
    model = _load_model(args.model)
    trajs = _read_trajectories(args.input)
    os.makedirs(args.out, exist_ok=True)
    count = 0
    for k, t in enumerate(trajs):
        if len(t) != model.seq_len:
            raise DataError(f"trajectory {t.traj_id or k} has {len(t)} points, "
                            f"model expects {model.seq_len}")
        code = ae.compress(model, t)
        code.mode = t.mode
        ae.write_latent_code(os.path.join(args.out, f"code_{k:05d}.bin"), code)
        count += 1
    _write_resolved_config(args.out, {"command": "compress", "model": args.model,
                                      "input": args.input, "codes": count})
    print(f"wrote {count} latent codes ({model.latent_dim} + 6 values each)")
    return 0


def _load_model(path):
    try:
        return ae.load_model(path)
    except OSError as e:
        raise DataError(f"cannot read model: {e}") from e
    except (ValueError, KeyError) as e:
        raise DataError(f"bad model file: {e}") from e


def _cmd_reconstruct(args) -> int:
    model = _load_model(args.model)
    names = sorted(n for n in os.listdir(args.codes) if n.endswith(".bin"))
    if not names:
        raise DataError(f"no .bin latent codes in {args.codes}")
    mode = args.dataset_mode or SPATIAL3D
    out = []
    for k, name in enumerate(names):
        code = ae.read_latent_code(os.path.join(args.codes, name), mode=mode)
        t = ae.reconstruct(model, code)
        t.traj_id = os.path.splitext(name)[0]
        out.append(t)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "reconstructed.csv")
    write_trajectories_csv(out_path, out)
    _write_resolved_config(args.out, {"command": "reconstruct", "model": args.model,
                                      "codes": args.codes, "dataset_mode": mode})
    print(f"reconstructed {len(out)} trajectories to {out_path}")
    return 0


def _cmd_simplify(args) -> int:
    trajs = _read_trajectories(args.input)
    simplify = td_tr if args.algo == "tdtr" else douglas_peucker
    results = []
    for t in trajs:
        if args.target_points is not None:
            search = find_epsilon_for_target(t, args.target_points, args.algo)
            eps = search.epsilon
        else:
            eps = args.epsilon
        results.append(simplify(t, eps))
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "simplified.csv")
    write_simplified_csv(out_path, results)
    _write_resolved_config(args.out, {"command": "simplify", "algo": args.algo,
                                      "epsilon": args.epsilon,
                                      "target_points": args.target_points,
                                      "input": args.input})
    kept = sum(len(s) for s in results)
    total = sum(len(t) for t in trajs)
    print(f"kept {kept}/{total} points across {len(results)} trajectories; "
          f"wrote {out_path}")
    return 0


def _cmd_evaluate(args) -> int:
    originals = _read_trajectories(args.original)
    others = _read_trajectories(args.other)
    if len(originals) != len(others):
        raise DataError(f"{len(originals)} originals vs {len(others)} others")
    cfg = MetricConfig(HAVERSINE if originals[0].mode == GEOTEMPORAL else EUCLIDEAN_3D)
    rows = []
    for t, o in zip(originals, others):
        tid = t.traj_id or "?"
        if len(t) == len(o):
            rows.append((tid, "mean_pointwise", args.method, mean_pointwise(t, o, cfg)))
        rows.append((tid, "frechet", args.method, discrete_frechet(t, o, cfg)))
        rows.append((tid, "dtw_d", args.method, dtw_dependent(t, o, cfg)))
        if args.dtw_independent:
            rows.append((tid, "dtw_i", args.method, dtw_independent(t, o, cfg)))
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "metrics.csv")
    write_metric_rows(out_path, rows)
    _write_resolved_config(args.out, {"command": "evaluate", "original": args.original,
                                      "other": args.other, "method": args.method})
    print(f"wrote {len(rows)} metric rows to {out_path}")
    return 0


def _parse_scenario_filter(text):
    try:
        seq_text, ratio_text = text.split(":")
        return int(seq_text), float(Fraction(ratio_text))
    except ValueError as e:
        raise ConfigurationError(
            f"bad --scenario {text!r}; expected <seq_len>:<ratio> like 20:4 or 20:20/3") from e


def _cmd_grid(args) -> int:
    doc = _load_config(args.config)
    cfg = ExperimentConfig.from_dict(doc.get("experiment", {}))
    if args.seed is not None:
        cfg.seed = args.seed
    scenarios = scenario_grid()
    if args.dataset_mode:
        scenarios = [s for s in scenarios if s.dataset_mode == args.dataset_mode]
    if args.scenario:
        wanted = _parse_scenario_filter(args.scenario)
        scenarios = [s for s in scenarios
                     if s.seq_len == wanted[0] and abs(s.ratio - wanted[1]) < 1e-9]
    if not scenarios:
        raise ConfigurationError("scenario filter matched nothing")

    corpora = {}
    modes = {s.dataset_mode for s in scenarios}
    if SPATIAL3D in modes:
        corpora[SPATIAL3D] = synthetic_corpus(
            "smooth3d", cfg.corpus_size, cfg.seed,
            min_len=cfg.corpus_min_len, max_len=cfg.corpus_max_len)
    if GEOTEMPORAL in modes:
        corpora[GEOTEMPORAL] = synthetic_corpus(
            "taxi-like", cfg.corpus_size, cfg.seed + 1,
            min_len=cfg.corpus_min_len, max_len=cfg.corpus_max_len, artifacts=False)

    report = run_grid(corpora, cfg, scenarios)
    formats = ("csv", "json") if args.format == "both" else (args.format,)
    written = emit_report(report, args.out, formats)
    _write_resolved_config(args.out, {"command": "grid",
                                      "experiment": asdict(cfg),
                                      "scenarios": [s.name for s in scenarios]})
    for res in report.results:
        line = f"{res.scenario.name}: achieved DP ratio {res.achieved_ratio:.3f}"
        ae_mean = res.summary.get("AE", {}).get("mean_pointwise")
        if ae_mean is not None:
            line += f", AE mean error {ae_mean:.6g}"
        print(line)
    print("wrote: " + ", ".join(written))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trajcompress",
                                description="Trajectory compression toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic corpus")
    g.add_argument("--kind", choices=["smooth3d", "taxi-like"], default="smooth3d")
    g.add_argument("--n", type=int, default=24)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--min-len", type=int, default=60)
    g.add_argument("--max-len", type=int, default=120)
    g.add_argument("--clean", action="store_true",
                   help="no injected idle blocks/gaps/spikes (taxi-like only)")
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_generate)

    pp = sub.add_parser("preprocess", help="clean a raw taxi CSV log")
    pp.add_argument("--input", required=True)
    pp.add_argument("--config", default=None)
    pp.add_argument("--out", required=True)
    pp.set_defaults(func=_cmd_preprocess)

    tr = sub.add_parser("train", help="train the autoencoder on trajectory CSV")
    tr.add_argument("--input", required=True)
    tr.add_argument("--seq-len", type=int, default=20)
    tr.add_argument("--latent-dim", type=int, default=None)
    tr.add_argument("--ratio", default=None, help="e.g. 4 or 20/3")
    tr.add_argument("--hidden", type=int, default=100)
    tr.add_argument("--loss", default="mse",
                    choices=["mse", "rescaled_euclidean", "equirect_time"])
    tr.add_argument("--epochs", type=int, default=50)
    tr.add_argument("--batch-size", type=int, default=32)
    tr.add_argument("--learning-rate", type=float, default=0.001)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--out", required=True)
    tr.set_defaults(func=_cmd_train)

    co = sub.add_parser("compress", help="encode trajectories to latent codes")
    co.add_argument("--model", required=True)
    co.add_argument("--input", required=True)
    co.add_argument("--out", required=True)
    co.set_defaults(func=_cmd_compress)

    re = sub.add_parser("reconstruct", help="decode latent codes to trajectories")
    re.add_argument("--model", required=True)
    re.add_argument("--codes", required=True)
    re.add_argument("--dataset-mode", choices=[SPATIAL3D, GEOTEMPORAL], default=None)
    re.add_argument("--out", required=True)
    re.set_defaults(func=_cmd_reconstruct)

    si = sub.add_parser("simplify", help="Douglas-Peucker / TD-TR simplification")
    si.add_argument("--input", required=True)
    si.add_argument("--algo", choices=["dp", "tdtr"], default="dp")
    group = si.add_mutually_exclusive_group(required=True)
    group.add_argument("--epsilon", type=float, default=None)
    group.add_argument("--target-points", type=int, default=None)
    si.add_argument("--out", required=True)
    si.set_defaults(func=_cmd_simplify)

    ev = sub.add_parser("evaluate", help="metric rows between two trajectory files")
    ev.add_argument("--original", required=True)
    ev.add_argument("--other", required=True)
    ev.add_argument("--method", default="other", help="method label for the rows")
    ev.add_argument("--dtw-independent", action="store_true")
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=_cmd_evaluate)

    gr = sub.add_parser("grid", help="run the 14-scenario evaluation grid")
    gr.add_argument("--config", default=None)
    gr.add_argument("--seed", type=int, default=None)
    gr.add_argument("--scenario", default=None, help="<seq_len>:<ratio> filter")
    gr.add_argument("--dataset-mode", choices=[SPATIAL3D, GEOTEMPORAL], default=None)
    gr.add_argument("--format", choices=["csv", "json", "both"], default="both")
    gr.add_argument("--out", required=True)
    gr.set_defaults(func=_cmd_grid)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

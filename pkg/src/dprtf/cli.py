"""Command-line pipeline: generate, train, localize, compare, inspect-feature.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import shutil
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as C
from .audio import SampleRateError, read_wav, write_wav
from .baselines import SteeringGrid
from .experiment import Localizer, azimuth_error, evaluate_trial, render_trial, summarize
from .pipeline import FEATURE_METHODS, extract_feature, pair_noise_profiles, spectrograms
from .regression import MappingModel, TrainingSet, train
from .sim import DEFAULT_PAIRS, RoomScene, build_training_set
from .stft import EmptyInputError

log = logging.getLogger("dprtf")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


class DataError(RuntimeError):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _prepare_out(out: Path, force: bool) -> None:
    if out.exists() and any(out.iterdir()):
        if not force:
            raise C.ConfigError(f"output directory {out} exists; use --force to overwrite")
        shutil.rmtree(out)
    out.mkdir(parents=True, exist_ok=True)


def _trial_seed(seed: int, cond_index: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, cond_index, trial]).generate_state(1)[0])


def _load_cfg(args, required=True) -> dict:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if args.config is None and not required:
        return C.load_config(None, overrides)
    return C.load_config(args.config, overrides)


def _read_dataset_config(dataset: Path) -> dict:
    path = dataset / "config.json"
    if not path.exists():
        raise DataError(f"{dataset} is not a generated dataset (no config.json)")
    return C.resolve_config(json.loads(path.read_text()))


# -- generate ---------------------------------------------------------------

def _render_entry(job):
    cfg, ci, trial, out = job
    stft_cfg = C.stft_config(cfg)
    cond = C.conditions(cfg)[ci]
    seed = _trial_seed(cfg["seed"], ci, trial)
    rec = render_trial(C.trial_setup(cfg), cond, seed, stft_cfg)
    stem = f"c{ci:02d}_t{trial:04d}"
    sig_path = Path(out) / "test" / f"{stem}.wav"
    noise_path = Path(out) / "test" / f"{stem}_noise.wav"
    write_wav(sig_path, rec.signals.T, rec.scene.fs)
    write_wav(noise_path, rec.noise_only.T if rec.noise_only is not None
              else np.zeros((int(cfg["test"]["noise_seconds"] * rec.scene.fs), 4)),
              rec.scene.fs)
    bins = list(C.estimator_config(cfg).bins)
    gt = np.array([[rec.ground_truth[p].dp_rtf[k] for p in DEFAULT_PAIRS] for k in bins])
    az, el, dist = rec.direction
    entry = {
        "id": stem, "condition": cond.name, "condition_index": ci, "trial": trial,
        "seed": seed, "t60": cond.t60, "snr_db": cond.snr_db, "distance": cond.distance,
        "azimuth": az, "elevation": el,
        "measured_snr_db": rec.measured_snr_db() if math.isfinite(cond.snr_db) else None,
        "itdg": [i.itdg for i in rec.infos], "drr_db": [i.drr_db for i in rec.infos],
        "scene": json.loads(rec.scene.to_json()),
        "signal": sig_path.name, "noise": noise_path.name,
        "signal_sha256": _sha256(sig_path), "noise_sha256": _sha256(noise_path),
    }
    return entry, gt


def cmd_generate(args) -> int:
    cfg = _load_cfg(args, required=False)
    out = Path(args.out or cfg["output_dir"])
    _prepare_out(out, args.force)
    print("resolved configuration:\n" + _dump(cfg), file=sys.stderr)
    (out / "config.json").write_text(_dump(cfg))
    (out / "training").mkdir()
    (out / "test").mkdir()

    stft_cfg = C.stft_config(cfg)
    grid = C.grid_directions(cfg)
    scene = C.training_scene(cfg)
    tr = cfg["training"]
    rirs = None
    for method in [m for m in FEATURE_METHODS if m in cfg["methods"]]:
        est = C.estimator_config(cfg)
        ts, rirs = build_training_set(scene, grid, tr["distance"], method=method,
                                      probe_seconds=tr["probe_seconds"], seed=cfg["seed"],
                                      cfg=stft_cfg, est_cfg=None if est.q is None else est,
                                      jobs=1, return_rirs=True)
        ts.save(out / "training" / f"{method}.npz")
    if "srp-phat" in cfg["methods"]:
        if rirs is None:
            _, rirs = build_training_set(scene, grid, tr["distance"], cfg=stft_cfg,
                                         probe_seconds=tr["probe_seconds"], seed=cfg["seed"],
                                         return_rirs=True)
        np.savez(out / "training" / "steering.npz", directions=grid, rirs=rirs)

    jobs = [(cfg, ci, t, str(out)) for ci in range(len(cfg["test"]["conditions"]))
            for t in range(cfg["test"]["trials"])]
    results = _map(_render_entry, jobs, args.jobs)
    entries = [e for e, _ in results]
    np.savez(out / "test" / "ground_truth.npz",
             ids=np.array([e["id"] for e in entries]),
             dp_rtf=np.array([g for _, g in results]))
    manifest = {"format": "dprtf-dataset", "version": 1, "seed": cfg["seed"],
                "n_training_directions": int(len(grid)), "pairs": [list(p) for p in DEFAULT_PAIRS],
                "entries": entries}
    (out / "manifest.json").write_text(_dump(manifest))
    print(f"wrote {len(entries)} test entries and {len(grid)} training directions to {out}")
    return EXIT_OK


def _map(fn, jobs, n_jobs):
    if n_jobs and n_jobs > 1:
        with ProcessPoolExecutor(n_jobs) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


# -- train ------------------------------------------------------------------

def cmd_train(args) -> int:
    dataset = Path(args.dataset)
    cfg = _read_dataset_config(dataset)
    if args.config is not None:
        cfg = _load_cfg(args)
    out = Path(args.out) if args.out else dataset / "models"
    out.mkdir(parents=True, exist_ok=True)
    reg = cfg["regression"]
    for method in [m for m in FEATURE_METHODS if m in cfg["methods"]]:
        path = dataset / "training" / f"{method}.npz"
        if not path.exists():
            raise DataError(f"missing training set {path}")
        ts = TrainingSet.load(path)
        model = train(ts, reg["n_components"], seed=cfg["seed"], ridge_scale=reg["ridge_scale"])
        model.meta["method"] = method
        (out / f"{method}.json").write_text(model.to_json())
        print(f"{method}: {model.n_components} components from {len(ts)} directions")
    return EXIT_OK


# -- localize ---------------------------------------------------------------

def _build_localizer(cfg, dataset: Path, models_dir: Path) -> Localizer:
    loc = Localizer(est_cfg=C.estimator_config(cfg), coh_cfg=C.coherence_config(cfg))
    dim = 2 * len(DEFAULT_PAIRS) * len(loc.est_cfg.bins)
    for method in [m for m in FEATURE_METHODS if m in cfg["methods"]]:
        path = models_dir / f"{method}.json"
        if not path.exists():
            raise DataError(f"missing model {path}")
        model = MappingModel.from_json(path.read_text())
        if model.feature_dim != dim:
            raise DataError(f"model {path.name} expects {model.feature_dim}-dimensional "
                            f"features, {method} produces {dim}")
        loc.models[method] = model
    if "srp-phat" in cfg["methods"]:
        z = np.load(dataset / "training" / "steering.npz")
        loc.steering = SteeringGrid.from_rirs(z["directions"], z["rirs"], C.stft_config(cfg),
                                              loc.est_cfg.bins)
    return loc


_LOC_CACHE: dict = {}


def _localize_entry(job):
    cfg, dataset, models_dir, entry = job
    stft_cfg = C.stft_config(cfg)
    key = (dataset, models_dir)
    if key not in _LOC_CACHE:
        _LOC_CACHE[key] = _build_localizer(cfg, Path(dataset), Path(models_dir))
    loc = _LOC_CACHE[key]
    fs = cfg["stft"]["sample_rate"]
    sig, _ = read_wav(Path(dataset) / "test" / entry["signal"], fs)
    noise, _ = read_wav(Path(dataset) / "test" / entry["noise"], fs)
    scene = RoomScene.from_json(json.dumps(entry["scene"]))
    gt = _GT_CACHE.get(dataset)
    if gt is None:
        z = np.load(Path(dataset) / "test" / "ground_truth.npz")
        gt = dict(zip(z["ids"].tolist(), z["dp_rtf"]))
        _GT_CACHE[dataset] = gt

    class _Rec:
        pass

    rec = _Rec()
    rec.signals = sig.T
    rec.noise_only = noise.T if math.isfinite(entry["snr_db"]) else None
    rec.scene = scene
    rec.ground_truth = {p: _GtView(gt[entry["id"]][:, i], loc.est_cfg.bins)
                        for i, p in enumerate(DEFAULT_PAIRS)}
    results = evaluate_trial(rec, cfg["methods"], loc, stft_cfg, t60=entry["t60"])
    rows = []
    for r in results:
        if r.direction is None:
            az_e, el_e, pred = 180.0, 90.0, None
        else:
            az_e = azimuth_error(r.direction[0], entry["azimuth"])
            el_e = abs(float(r.direction[1]) - entry["elevation"])
            pred = [float(v) for v in r.direction]
        rows.append({"id": entry["id"], "seed": entry["seed"], "method": r.method,
                     "condition": entry["condition"], "prediction": pred,
                     "azimuth_error": az_e, "elevation_error": el_e,
                     "feature_error": None if math.isnan(r.feature_error) else r.feature_error,
                     "observed_fraction": r.n_observed / r.n_dims if r.n_dims else None,
                     "seconds": r.seconds})
    return rows


_GT_CACHE: dict = {}


class _GtView:
    """Minimal stand-in for a ground-truth bundle indexed by absolute bin."""

    def __init__(self, values, bins):
        self._map = dict(zip(bins, values))

    @property
    def dp_rtf(self):
        return self

    def __getitem__(self, k):
        return self._map[int(k)]


def cmd_localize(args) -> int:
    dataset = Path(args.dataset)
    cfg = _read_dataset_config(dataset)
    models_dir = Path(args.models) if args.models else dataset / "models"
    out = Path(args.out) if args.out else dataset / "report"
    _prepare_out(out, args.force)
    manifest_path = dataset / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"missing {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    _build_localizer(cfg, dataset, models_dir)  # fail early on mismatches
    jobs = [(cfg, str(dataset), str(models_dir), e) for e in manifest["entries"]]
    rows = [r for chunk in _map(_localize_entry, jobs, args.jobs) for r in chunk]

    report_rows, timing = [], {}
    for method in cfg["methods"]:
        timing[method] = sum(r["seconds"] for r in rows if r["method"] == method)
        for cond in C.conditions(cfg):
            sel = [r for r in rows if r["method"] == method and r["condition"] == cond.name]
            fe = [r["feature_error"] for r in sel if r["feature_error"] is not None]
            summ = summarize([r["azimuth_error"] for r in sel],
                             [r["elevation_error"] for r in sel],
                             fe if fe else None)
            obs = [r["observed_fraction"] for r in sel if r["observed_fraction"] is not None]
            summ["observed_fraction_mean"] = float(np.mean(obs)) if obs else None
            report_rows.append({"method": method, "condition": cond.name, "t60": cond.t60,
                                "snr_db": cond.snr_db, "distance": cond.distance, **summ})
    trials = [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
    report = {"format": "dprtf-report", "version": 1, "config": cfg,
              "manifest_sha256": _sha256(manifest_path), "rows": report_rows,
              "trials": trials}
    (out / "report.json").write_text(_dump(report))
    _write_csv(out / "report.csv", report_rows)
    # wall-clock timing is kept apart so the report itself is reproducible byte for byte
    (out / "timing.json").write_text(_dump({"seconds_per_method": timing}))
    print(_format_rows(report_rows))
    return EXIT_OK


_CSV_FIELDS = ["method", "condition", "t60", "snr_db", "distance", "n", "azimuth_median",
               "azimuth_mean", "elevation_median", "elevation_mean", "outlier_rate",
               "feature_error_median", "observed_fraction_mean"]


def _write_csv(path, rows) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=_CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in _CSV_FIELDS})
    Path(path).write_text(buf.getvalue())


def _format_rows(rows) -> str:
    lines = [f"{'method':<10} {'condition':<24} {'azi':>7} {'ele':>7} {'outl':>6}"]
    for r in rows:
        lines.append(f"{r['method']:<10} {r['condition']:<24} {r['azimuth_mean']:7.2f} "
                     f"{r['elevation_mean']:7.2f} {r['outlier_rate']:6.2f}")
    return "\n".join(lines)


# -- compare ----------------------------------------------------------------

_SHARED_SECTIONS = ("stft", "estimator", "coherence", "regression", "training")


def compare_reports(reports: list[dict]) -> dict:
    """Methods x conditions x (azimuth, elevation) mean errors; best per column flagged."""
    base = reports[0]["config"]
    for rep in reports[1:]:
        diff = C.config_diff({k: base[k] for k in _SHARED_SECTIONS},
                             {k: rep["config"][k] for k in _SHARED_SECTIONS})
        if diff:
            raise C.ConfigError("reports use conflicting configurations:\n  " + "\n  ".join(diff))
    methods, conds, cells = [], [], {}
    for rep in reports:
        for row in rep["rows"]:
            if row["method"] not in methods:
                methods.append(row["method"])
            if row["condition"] not in conds:
                conds.append(row["condition"])
            cells[(row["method"], row["condition"])] = (row["azimuth_mean"],
                                                        row["elevation_mean"])
    best = {}
    for cond in conds:
        for j in range(2):
            vals = [cells[(m, cond)][j] for m in methods if (m, cond) in cells]
            best[(cond, j)] = min(vals) if vals else None
    table = []
    for m in methods:
        row = {"method": m}
        for cond in conds:
            for j, tag in enumerate(("Azi.", "Ele.")):
                v = cells.get((m, cond), (None, None))[j]
                row[f"{cond} {tag}"] = {"value": v, "best": v is not None and v == best[(cond, j)]}
        table.append(row)
    return {"methods": methods, "conditions": conds, "table": table}


def _format_table(cmp: dict) -> str:
    cols = [f"{c} {t}" for c in cmp["conditions"] for t in ("Azi.", "Ele.")]
    width = max(12, *(len(c) + 1 for c in cols))
    head = f"{'Method':<10}" + "".join(f"{c:>{width}}" for c in cols)
    lines = [head]
    for row in cmp["table"]:
        cells = []
        for c in cols:
            cell = row[c]
            if cell["value"] is None:
                txt = "-"
            else:
                txt = f"{cell['value']:.1f}" + ("*" if cell["best"] else "")
            cells.append(f"{txt:>{width}}")
        lines.append(f"{row['method']:<10}" + "".join(cells))
    return "\n".join(lines)


def cmd_compare(args) -> int:
    reports = []
    for p in args.reports:
        path = Path(p)
        if path.is_dir():
            path = path / "report.json"
        try:
            reports.append(json.loads(path.read_text()))
        except FileNotFoundError:
            raise DataError(f"report not found: {path}") from None
    cmp = compare_reports(reports)
    text = _format_table(cmp)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.json").write_text(_dump(cmp))
        (out / "comparison.txt").write_text(text + "\n")
    return EXIT_OK


# -- inspect-feature --------------------------------------------------------

def cmd_inspect(args) -> int:
    cfg = _load_cfg(args, required=False)
    stft_cfg = C.stft_config(cfg)
    est = C.estimator_config(cfg)
    if args.t60 is not None:
        est = replace(est, t60=args.t60)
    fs = cfg["stft"]["sample_rate"]
    sig, _ = read_wav(args.wav, fs)
    if sig.ndim != 2 or sig.shape[1] < 2:
        raise DataError(f"{args.wav}: need a multichannel recording")
    pairs = DEFAULT_PAIRS if sig.shape[1] >= 4 else ((0, 1),)
    noise = None
    if args.noise:
        nsig, _ = read_wav(args.noise, fs)
        noise = pair_noise_profiles(nsig.T, stft_cfg, pairs, est.resolve_q(stft_cfg))
    feat = extract_feature(args.method, spectrograms(sig.T, stft_cfg), pairs, noise, est,
                           C.coherence_config(cfg))
    text = feat.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dprtf", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="output directory"):
        sp.add_argument("--config", help="pipeline configuration (JSON)")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        sp.add_argument("--force", action="store_true", help="overwrite existing output")
        sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
        sp.add_argument("--out", help=out_help)

    g = sub.add_parser("generate", help="build training and test datasets")
    common(g)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="fit mapping models on a generated dataset")
    common(t, "model directory (default: DATASET/models)")
    t.add_argument("dataset")
    t.set_defaults(func=cmd_train)

    lo = sub.add_parser("localize", help="run every configured method over the test set")
    common(lo, "report directory (default: DATASET/report)")
    lo.add_argument("dataset")
    lo.add_argument("--models", help="model directory (default: DATASET/models)")
    lo.set_defaults(func=cmd_localize)

    c = sub.add_parser("compare", help="merge reports into a methods x conditions table")
    common(c)
    c.add_argument("reports", nargs="+")
    c.set_defaults(func=cmd_compare)

    i = sub.add_parser("inspect-feature", help="print the DP-RTF feature of a recording")
    common(i, "write the feature JSON here")
    i.add_argument("wav", help="multichannel WAV recording")
    i.add_argument("--noise", help="noise-only WAV recording for the noise profile")
    i.add_argument("--method", default="proposed", choices=FEATURE_METHODS)
    i.add_argument("--t60", type=float, help="reverberation time for the CTF length")
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except C.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, SampleRateError, EmptyInputError, FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    log.info("%s finished in %.1f s", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())

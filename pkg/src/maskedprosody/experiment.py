"""Config-driven experiment stages: features, training, probing, reporting.

Every stage reads one YAML config, writes its artifacts under the
configured output directory, and records itself in a run manifest
(config hash, artifact paths, status, wall-clock) so a finished run is
self-describing and reproducible.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
import warnings
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .audio import load_waveform
from .cache import FeatureCache
from .checkpoint import MpmCheckpoint
from .codec import default_codebooks, tokenize
from .cwt import CwtConfig, cwt_encode
from .errors import MaskedProsodyError, MissingArtifactError
from .features import FeatureConfig, extract_prosody
from .grid import EvalReport, TaskSpec, default_tasks, run_probe_grid, summarize
from .masking import MaskConfig
from .model import ModelConfig
from .probes import ProbeTrainConfig
from .representations import extract_representations
from .synthetic import LabeledUtterance, SynthConfig, generate_synthetic_corpus
from .training import TrainConfig, train_mpm

WORKERS_ENV = "MASKEDPROSODY_WORKERS"


@dataclass
class CorpusConfig:
    source: str = "synthetic"  # "synthetic" | "directory"
    directory: str | None = None
    synthetic: SynthConfig = field(default_factory=SynthConfig)


@dataclass
class ExperimentConfig:
    output_dir: str = "runs/experiment"
    deterministic: bool = True
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    codebook_size: int = 128
    strategies: list = field(default_factory=lambda: ["4", "16", "128", "random"])
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    probe: ProbeTrainConfig = field(default_factory=ProbeTrainConfig)
    cwt: CwtConfig = field(default_factory=CwtConfig)
    representations: list = field(
        default_factory=lambda: ["raw", "cwt", "mpm:4", "mpm:16", "mpm:128", "mpm:random"]
    )
    tasks: list = field(default_factory=lambda: [t.name for t in default_tasks(2)])
    probes: list = field(default_factory=lambda: ["linear", "conformer"])
    folds: int = 5
    seeds: list = field(default_factory=lambda: [0, 1, 2])

    def __post_init__(self):
        if not self.strategies or not self.representations or not self.tasks:
            raise ValueError("need at least one strategy, representation, and task")
        known = {"raw", "cwt"} | {f"mpm:{s}" for s in map(str, self.strategies)}
        unknown = [r for r in self.representations if r not in known]
        if unknown:
            raise ValueError(f"representations reference undefined strategies: {unknown}")


def _build_nested(cls, data: dict):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ValueError(f"{cls.__name__}: unknown config keys {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        ftype = fields[key].type
        if dataclasses.is_dataclass(_resolve(ftype)) and isinstance(value, dict):
            kwargs[key] = _build_nested(_resolve(ftype), value)
        elif key in ("duration_range", "pulse_rate_range", "pause_duration_range",
                     "syllables_per_word", "scales") and isinstance(value, list):
            kwargs[key] = tuple(value)
        elif key == "class_table":
            kwargs[key] = [tuple(row) for row in value]
        else:
            kwargs[key] = value
    return cls(**kwargs)


_NESTED = {
    "CorpusConfig": CorpusConfig,
    "SynthConfig": SynthConfig,
    "FeatureConfig": FeatureConfig,
    "ModelConfig": ModelConfig,
    "TrainConfig": TrainConfig,
    "ProbeTrainConfig": ProbeTrainConfig,
    "CwtConfig": CwtConfig,
}


def _resolve(ftype):
    if isinstance(ftype, str):
        return _NESTED.get(ftype, str)
    return ftype


def load_config(path) -> ExperimentConfig:
    data = yaml.safe_load(Path(path).read_text()) or {}
    return _build_nested(ExperimentConfig, data)


def config_hash(cfg) -> str:
    canon = json.dumps(asdict(cfg), sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


class RunManifest:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.path = Path(cfg.output_dir) / "run-manifest.json"
        if self.path.exists():
            self.data = json.loads(self.path.read_text())
        else:
            self.data = {"config_hash": config_hash(cfg), "stages": {}, "artifacts": []}
        self.data["config"] = asdict(cfg)
        self.data["versions"] = _versions()

    def record(self, stage: str, status: str, seconds: float, artifacts=()):
        self.data["config_hash"] = config_hash(self.cfg)
        self.data["stages"][stage] = {
            "status": status,
            "wall_seconds": round(seconds, 3),
            "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        }
        for art in artifacts:
            art = str(art)
            if art not in self.data["artifacts"]:
                self.data["artifacts"].append(art)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.data, indent=1, sort_keys=True, default=str))


def _versions() -> dict:
    import scipy
    import torch

    return {
        "maskedprosody": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "torch": torch.__version__,
        "feature_cache_format": "MPMFEAT1",
        "checkpoint_format": "MPMCKPT1",
    }


def _corpus_hash(cfg: ExperimentConfig) -> str:
    part = {"corpus": asdict(cfg.corpus), "features": asdict(cfg.features)}
    return hashlib.sha256(json.dumps(part, sort_keys=True, default=str).encode()).hexdigest()[:16]


def save_labels(path, labels: list[LabeledUtterance]) -> None:
    """Tabular labels manifest, one utterance per line.

    Columns (tab-separated): utterance_id, class, syllable_count,
    word_spans ("start:end" joined by ";"), prominence (csv), boundary
    (csv), frame_labels (0/1 string). Empty lists serialize as "-".
    """
    lines = ["# utterance_id\tclass\tsyllable_count\tword_spans\tprominence\tboundary\tframe_labels"]
    for lab in labels:
        spans = ";".join(f"{s}:{e}" for s, e in lab.word_spans) or "-"
        prom = ",".join(map(str, lab.prominence.tolist())) or "-"
        bound = ",".join(map(str, lab.boundary.tolist())) or "-"
        frames = "".join(map(str, lab.frame_labels.tolist())) or "-"
        lines.append(
            f"{lab.utterance_id}\t{lab.utterance_label}\t{lab.syllable_count}"
            f"\t{spans}\t{prom}\t{bound}\t{frames}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def load_labels(path) -> list[LabeledUtterance]:
    labels = []
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        uid, cls, count, spans, prom, bound, frames = line.split("\t")
        word_spans = (
            [] if spans == "-" else [tuple(map(int, s.split(":"))) for s in spans.split(";")]
        )
        labels.append(
            LabeledUtterance(
                utterance_id=uid,
                word_spans=word_spans,
                frame_labels=(
                    np.array([], dtype=np.int64)
                    if frames == "-"
                    else np.array([int(ch) for ch in frames], dtype=np.int64)
                ),
                prominence=(
                    np.array([], dtype=np.int64)
                    if prom == "-"
                    else np.array([int(x) for x in prom.split(",")], dtype=np.int64)
                ),
                boundary=(
                    np.array([], dtype=np.int64)
                    if bound == "-"
                    else np.array([int(x) for x in bound.split(",")], dtype=np.int64)
                ),
                utterance_label=int(cls),
                syllable_count=int(count),
            )
        )
    return labels


def _cache(cfg: ExperimentConfig) -> FeatureCache:
    return FeatureCache(Path(cfg.output_dir) / "features")


def labels_path(cfg: ExperimentConfig) -> Path:
    return Path(cfg.output_dir) / "labels.tsv"


def cmd_synth(cfg: ExperimentConfig) -> int:
    """Generate the synthetic corpus into the feature cache + labels manifest."""
    manifest = RunManifest(cfg)
    start = time.time()
    corpus = generate_synthetic_corpus(cfg.corpus.synthetic)
    cache = _cache(cfg)
    entries = []
    for track, lab in zip(corpus.tracks, corpus.labels):
        cache.put_track(lab.utterance_id, track)
        entries.append(
            {
                "utterance_id": lab.utterance_id,
                "duration_seconds": round(track.num_frames * track.hop_seconds, 4),
                "num_frames": track.num_frames,
            }
        )
    cache.write_manifest(entries, config_hash=_corpus_hash(cfg))
    save_labels(labels_path(cfg), corpus.labels)
    manifest.record(
        "synth", "ok", time.time() - start, [cache.directory, labels_path(cfg)]
    )
    return 0


def cmd_features(cfg: ExperimentConfig) -> int:
    """Extract contours into the cache; skips when the config hash matches."""
    manifest = RunManifest(cfg)
    start = time.time()
    cache = _cache(cfg)
    want_hash = _corpus_hash(cfg)
    try:
        if cache.read_manifest()["config_hash"] == want_hash:
            manifest.record("features", "cached", time.time() - start, [cache.directory])
            return 0
    except MissingArtifactError:
        pass

    if cfg.corpus.source == "synthetic":
        return cmd_synth(cfg)

    wav_dir = Path(cfg.corpus.directory or "")
    paths = sorted(wav_dir.glob("*.wav"))
    if not paths:
        raise MissingArtifactError(f"no .wav files under {wav_dir}")
    entries = []
    failures = []
    jobs = [(p, cfg.features) for p in paths]
    workers = int(os.environ.get(WORKERS_ENV, "1"))
    results = _map_jobs(_extract_one, jobs, workers)
    for path, result in zip(paths, results):
        if isinstance(result, Exception):
            failures.append((path, result))
            continue
        track = result
        uid = path.stem
        cache.put_track(uid, track)
        entries.append(
            {
                "utterance_id": uid,
                "duration_seconds": round(track.num_frames * track.hop_seconds, 4),
                "num_frames": track.num_frames,
            }
        )
    cache.write_manifest(entries, config_hash=want_hash)
    status = "ok" if not failures else f"partial ({len(failures)} unreadable)"
    for path, exc in failures:
        warnings.warn(f"skipped {path}: {exc}")
    manifest.record("features", status, time.time() - start, [cache.directory])
    return 0 if not failures else 2


def _extract_one(job):
    path, feature_cfg = job
    try:
        return extract_prosody(load_waveform(path), feature_cfg)
    except MaskedProsodyError as exc:
        return exc


def _map_jobs(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(job) for job in jobs]
    from multiprocessing import Pool

    with Pool(workers) as pool:
        return pool.map(fn, jobs)


def checkpoint_path(cfg: ExperimentConfig, strategy: str, seed: int) -> Path:
    return Path(cfg.output_dir) / "checkpoints" / f"mpm-{strategy}-s{seed}.ckpt"


def _load_tracks(cfg: ExperimentConfig):
    cache = _cache(cfg)
    ids = cache.ids()
    if not ids:
        raise MissingArtifactError("feature cache is empty; run the features stage first")
    return ids, [cache.get_track(uid) for uid in ids]


def cmd_train(cfg: ExperimentConfig, strategy: str, seeds=None) -> int:
    """Train one model per seed for the given corruption strategy."""
    manifest = RunManifest(cfg)
    start = time.time()
    strategy = str(strategy)
    mask_cfg = MaskConfig.parse(strategy)
    _, tracks = _load_tracks(cfg)
    codebooks = default_codebooks(cfg.codebook_size)
    token_tracks = [tokenize(t, codebooks) for t in tracks]
    model_cfg = dataclasses.replace(
        cfg.model, codebook_sizes={k: cb.size for k, cb in codebooks.items()}
    )
    artifacts = []
    for seed in seeds if seeds is not None else cfg.seeds:
        train_cfg = dataclasses.replace(
            cfg.train, seed=int(seed), deterministic=cfg.deterministic
        )
        ckpt, curve = train_mpm(token_tracks, mask_cfg, train_cfg, model_cfg)
        path = checkpoint_path(cfg, strategy, int(seed))
        path.parent.mkdir(parents=True, exist_ok=True)
        ckpt.save(path)
        curve_path = path.with_suffix(".loss.tsv")
        with open(curve_path, "w") as fh:
            fh.write("step\ttotal\tpitch\tenergy\tvad\n")
            for rec in curve:
                fh.write(
                    f"{rec['step']}\t{rec['total']:.6f}\t{rec['pitch']:.6f}"
                    f"\t{rec['energy']:.6f}\t{rec['vad']:.6f}\n"
                )
        artifacts += [path, curve_path]
    manifest.record(f"train[{strategy}]", "ok", time.time() - start, artifacts)
    return 0


def build_representations(cfg: ExperimentConfig, ids, tracks):
    """name -> list of (T, D) float32 matrices, or {seed: list} for MPM reps."""
    reps = {}
    codebooks = default_codebooks(cfg.codebook_size)
    for name in cfg.representations:
        if name == "raw":
            reps[name] = [
                np.stack([t.pitch, t.energy, t.vad.astype(np.float64)], axis=1).astype(np.float32)
                for t in tracks
            ]
        elif name == "cwt":
            reps[name] = [cwt_encode(t, cfg.cwt).astype(np.float32) for t in tracks]
        else:
            strategy = name.split(":", 1)[1]
            per_seed = {}
            for seed in cfg.seeds:
                path = checkpoint_path(cfg, strategy, int(seed))
                if not path.exists():
                    per_seed[int(seed)] = None
                    continue
                ckpt = MpmCheckpoint.load(path)
                token_tracks = [tokenize(t, ckpt.codebooks) for t in tracks]
                per_seed[int(seed)] = [
                    extract_representations(ckpt, tt) for tt in token_tracks
                ]
            if all(v is None for v in per_seed.values()):
                raise MissingArtifactError(
                    f"no checkpoints for representation {name!r}; run the train stage"
                )
            reps[name] = per_seed
    return reps


def _task_specs(cfg: ExperimentConfig, labels) -> list[TaskSpec]:
    num_classes = int(max(lab.utterance_label for lab in labels)) + 1
    by_name = {t.name: t for t in default_tasks(num_classes)}
    unknown = [t for t in cfg.tasks if t not in by_name]
    if unknown:
        raise ValueError(f"unknown tasks {unknown}; choose from {sorted(by_name)}")
    return [by_name[t] for t in cfg.tasks]


def report_path(cfg: ExperimentConfig) -> Path:
    return Path(cfg.output_dir) / "report.tsv"


def cmd_probe(cfg: ExperimentConfig) -> int:
    """Evaluate the full representation x task x probe grid."""
    manifest = RunManifest(cfg)
    start = time.time()
    if not labels_path(cfg).exists():
        raise MissingArtifactError(
            f"no labels manifest at {labels_path(cfg)}; run the synth/features stage"
        )
    labels = load_labels(labels_path(cfg))
    ids, tracks = _load_tracks(cfg)
    order = {uid: i for i, uid in enumerate(ids)}
    labels.sort(key=lambda lab: order[lab.utterance_id])
    reps = build_representations(cfg, ids, tracks)
    report = run_probe_grid(
        reps,
        labels,
        _task_specs(cfg, labels),
        probes=tuple(cfg.probes),
        folds=cfg.folds,
        seeds=[int(s) for s in cfg.seeds],
        probe_cfg=cfg.probe,
    )
    out = report_path(cfg)
    report.to_tsv(out)
    summary = Path(cfg.output_dir) / "summary.txt"
    summary.write_text(summarize(report))
    absent = sum(1 for r in report.rows if r.status != "ok")
    manifest.record("probe", "ok" if absent == 0 else f"partial ({absent} absent cells)",
                    time.time() - start, [out, summary])
    return 0 if absent == 0 else 2


def cmd_sweep(cfg: ExperimentConfig) -> int:
    """Features + per-strategy training + one merged probe grid."""
    manifest = RunManifest(cfg)
    start = time.time()
    rc = cmd_features(cfg)
    failures = []
    for strategy in map(str, cfg.strategies):
        if f"mpm:{strategy}" not in cfg.representations:
            continue
        try:
            cmd_train(cfg, strategy)
        except MaskedProsodyError as exc:
            failures.append((strategy, exc))
            warnings.warn(f"strategy {strategy} failed: {exc}")
    probe_rc = cmd_probe(cfg)
    status = "ok" if not failures and rc == 0 and probe_rc == 0 else "partial"
    manifest.record("sweep", status, time.time() - start, [report_path(cfg)])
    return 0 if status == "ok" else 2


def cmd_report(report_file, out_dir=None) -> int:
    """Render tables and plots from a saved report."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    report = EvalReport.from_tsv(report_file)
    out = Path(out_dir or Path(report_file).parent)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.txt").write_text(summarize(report))

    agg = report.aggregate()
    tasks = sorted({k[1] for k in agg})
    # metric vs mask size, one panel per task
    for task in tasks:
        keys = [k for k in agg if k[1] == task and k[0].startswith("mpm:")]
        if not keys:
            continue
        metrics = sorted({k[3] for k in keys})
        fig, axes = plt.subplots(1, len(metrics), figsize=(4 * len(metrics), 3), squeeze=False)
        for ax, metric in zip(axes[0], metrics):
            for probe in sorted({k[2] for k in keys}):
                pts = []
                for key in keys:
                    if key[2] != probe or key[3] != metric:
                        continue
                    strategy = key[0].split(":", 1)[1]
                    x = 129 if strategy == "random" else int(strategy)
                    pts.append((x, agg[key]["mean"], agg[key]["std"], strategy))
                if not pts:
                    continue
                pts.sort()
                xs = [p[0] for p in pts]
                ax.errorbar(xs, [p[1] for p in pts], yerr=[p[2] for p in pts],
                            marker="o", capsize=3, label=probe)
                ax.set_xticks(xs, [p[3] for p in pts])
            ax.set_xlabel("mask length (frames)")
            ax.set_ylabel(metric)
            ax.set_title(task)
            ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(out / f"mask-size-{task}.png", dpi=120)
        plt.close(fig)

    # loss curves if the sibling checkpoints directory has any
    curve_files = sorted(Path(report_file).parent.glob("checkpoints/*.loss.tsv"))
    if curve_files:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for cf in curve_files:
            rows = [line.split("\t") for line in cf.read_text().splitlines()[1:]]
            steps = [int(r[0]) for r in rows]
            losses = [float(r[1]) for r in rows]
            ax.plot(steps, losses, label=cf.stem.replace(".loss", ""), linewidth=0.9)
        ax.set_xlabel("step")
        ax.set_ylabel("total loss")
        ax.legend(fontsize=6)
        fig.tight_layout()
        fig.savefig(out / "loss-curves.png", dpi=120)
        plt.close(fig)
    return 0

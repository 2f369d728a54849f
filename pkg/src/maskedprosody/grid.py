"""Cross-product probe evaluation over representations and tasks.

The protocol is paired: fold assignments and probe training seeds are
functions of (task, fold, seed) only, never of the representation being
scored, so per-cell differences between representations are attributable
to the features themselves.
"""

from __future__ import annotations

import warnings
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingArtifactError
from .metrics import (
    count_syllables_from_frames,
    f1_binary,
    kfold_split,
    pearson_corr,
    ser,
    weighted_unweighted_accuracy,
)
from .probes import ProbeSpec, ProbeTrainConfig, predict, predict_sequences, train_probe
from .representations import aggregate_spans
from .synthetic import LabeledUtterance

METRIC_COLUMNS = ("ser", "corr", "f1", "wa", "ua")
REPORT_COLUMNS = (
    "representation",
    "strategy",
    "task",
    "probe",
    "fold",
    "seed",
    "status",
) + METRIC_COLUMNS


@dataclass(frozen=True)
class TaskSpec:
    name: str
    granularity: str  # frame | span | utterance
    num_classes: int
    metrics: tuple[str, ...]
    mode: str = "classification"  # "counting" scores per-utterance pulse counts


def default_tasks(num_classes: int) -> list[TaskSpec]:
    return [
        TaskSpec("utterance-class", "utterance", num_classes, ("wa", "ua")),
        TaskSpec("frame-pulse", "frame", 2, ("f1",)),
        TaskSpec("word-prominence", "span", 2, ("f1",)),
        TaskSpec("word-boundary", "span", 2, ("f1",)),
        TaskSpec("syllable-count", "frame", 2, ("ser", "corr"), mode="counting"),
    ]


@dataclass
class EvalRow:
    representation: str
    strategy: str
    task: str
    probe: str
    fold: int
    seed: int
    status: str = "ok"
    metrics: dict = field(default_factory=dict)


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)

    def aggregate(self) -> dict:
        """(representation, task, probe, metric) -> {mean, std, n} over folds and seeds."""
        groups: dict = {}
        for row in self.rows:
            if row.status != "ok":
                continue
            for metric, value in row.metrics.items():
                groups.setdefault((row.representation, row.task, row.probe, metric), []).append(
                    value
                )
        return {
            key: {"mean": float(np.mean(vals)), "std": float(np.std(vals)), "n": len(vals)}
            for key, vals in groups.items()
        }

    def to_tsv(self, path) -> None:
        lines = ["\t".join(REPORT_COLUMNS)]
        for row in self.rows:
            cells = [
                row.representation,
                row.strategy,
                row.task,
                row.probe,
                str(row.fold),
                str(row.seed),
                row.status,
            ]
            cells += [
                format(row.metrics[m], ".10g") if m in row.metrics else "-"
                for m in METRIC_COLUMNS
            ]
            lines.append("\t".join(cells))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_tsv(cls, path) -> "EvalReport":
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0].split("\t") != list(REPORT_COLUMNS):
            raise MissingArtifactError(f"{path}: not an evaluation report")
        rows = []
        for line in lines[1:]:
            cells = line.split("\t")
            metrics = {
                m: float(v)
                for m, v in zip(METRIC_COLUMNS, cells[7:])
                if v != "-"
            }
            rows.append(
                EvalRow(cells[0], cells[1], cells[2], cells[3], int(cells[4]), int(cells[5]), cells[6], metrics)
            )
        return cls(rows)


def _stable_seed(*parts) -> int:
    return zlib.crc32("|".join(str(p) for p in parts).encode()) & 0x7FFFFFFF


def strategy_of(representation: str) -> str:
    return representation.split(":", 1)[1] if ":" in representation else "-"


def _task_features(frames_per_utt, task: TaskSpec, labels: list[LabeledUtterance]):
    """Flatten per-utterance frame matrices into probe inputs for one task."""
    if task.granularity == "utterance":
        X = np.stack([
            aggregate_spans(f, [(0, f.shape[0])])[0] for f in frames_per_utt
        ])
        y = np.array([lab.utterance_label for lab in labels])
        owner = np.arange(len(labels))
        return X, y, owner
    if task.granularity == "span":
        X, y, owner = [], [], []
        for i, (f, lab) in enumerate(zip(frames_per_utt, labels)):
            if not lab.word_spans:
                continue
            X.append(aggregate_spans(f, lab.word_spans))
            y.append(lab.prominence if task.name == "word-prominence" else lab.boundary)
            owner.extend([i] * len(lab.word_spans))
        return np.concatenate(X), np.concatenate(y), np.array(owner)
    X = np.concatenate(frames_per_utt)
    y = np.concatenate([lab.frame_labels for lab in labels])
    owner = np.concatenate(
        [np.full(f.shape[0], i) for i, f in enumerate(frames_per_utt)]
    )
    return X, y, owner


def _linear_cell(frames_per_utt, task, labels, train_utts, test_utts, cfg, probe_seed):
    X, y, owner = _task_features(frames_per_utt, task, labels)
    train_rows = np.isin(owner, train_utts)
    test_rows = np.isin(owner, test_utts)
    spec = ProbeSpec("linear", task.granularity, X.shape[1], task.num_classes)
    probe = train_probe(X[train_rows], y[train_rows], spec, cfg, probe_seed)
    preds, probs = predict(probe, X[test_rows])
    if task.mode == "counting":
        return _score_counting(probs, owner[test_rows], test_utts, labels)
    return _score_classification(task, preds, y[test_rows])


def _conformer_cell(frames_per_utt, task, labels, train_utts, test_utts, cfg, probe_seed):
    seqs = [frames_per_utt[i] for i in train_utts]
    spec = ProbeSpec(
        "conformer", task.granularity, frames_per_utt[0].shape[1], task.num_classes
    )
    if task.granularity == "utterance":
        train_labels = [labels[i].utterance_label for i in train_utts]
    elif task.granularity == "span":
        key = "prominence" if task.name == "word-prominence" else "boundary"
        keep = [i for i in train_utts if labels[i].word_spans]
        seqs = [frames_per_utt[i] for i in keep]
        train_labels = [(labels[i].word_spans, getattr(labels[i], key)) for i in keep]
    else:
        train_labels = [labels[i].frame_labels for i in train_utts]
    probe = train_probe(seqs, train_labels, spec, cfg, probe_seed)

    test_seqs = [frames_per_utt[i] for i in test_utts]
    if task.granularity == "utterance":
        preds, _ = predict_sequences(probe, test_seqs)
        golds = np.array([labels[i].utterance_label for i in test_utts])
        return _score_classification(task, preds, golds)
    if task.granularity == "span":
        key = "prominence" if task.name == "word-prominence" else "boundary"
        keep = [i for i in test_utts if labels[i].word_spans]
        preds, _ = predict_sequences(
            probe, [frames_per_utt[i] for i in keep], spans=[labels[i].word_spans for i in keep]
        )
        golds = np.concatenate([getattr(labels[i], key) for i in keep])
        return _score_classification(task, np.concatenate(preds), golds)
    preds, probs = predict_sequences(probe, test_seqs)
    if task.mode == "counting":
        flat_probs = np.concatenate([p for p in probs])
        owner = np.concatenate(
            [np.full(len(p), i) for p, i in zip(probs, test_utts)]
        )
        return _score_counting(flat_probs, owner, test_utts, labels)
    golds = np.concatenate([labels[i].frame_labels for i in test_utts])
    return _score_classification(task, np.concatenate(preds), golds)


def _score_classification(task, preds, golds):
    metrics = {}
    if "f1" in task.metrics:
        metrics["f1"] = f1_binary(preds, golds)
    if "wa" in task.metrics or "ua" in task.metrics:
        wa, ua = weighted_unweighted_accuracy(preds, golds, task.num_classes)
        metrics["wa"], metrics["ua"] = wa, ua
    return metrics


def _score_counting(probs, owner, test_utts, labels):
    actual, predicted = [], []
    for i in test_utts:
        p = probs[owner == i][:, 1]
        predicted.append(count_syllables_from_frames(p))
        actual.append(labels[i].syllable_count)
    out = {"ser": ser(actual, predicted)}
    try:
        out["corr"] = pearson_corr(actual, predicted)
    except Exception:
        out["corr"] = 0.0
    return out


def run_probe_grid(
    representations: dict,
    labels: list[LabeledUtterance],
    tasks: list[TaskSpec],
    probes=("linear", "conformer"),
    folds: int = 5,
    seeds=(0, 1, 2),
    probe_cfg: ProbeTrainConfig | None = None,
) -> EvalReport:
    """Evaluate every (representation, task, probe, fold, seed) cell.

    ``representations`` maps a name to either a list of per-utterance
    (T, D) matrices (shared across seeds) or {seed: list} when the
    representation itself depends on the seed (one checkpoint per seed).
    Cells whose representation is missing are reported with
    status="absent" rather than dropped.
    """
    probe_cfg = probe_cfg or ProbeTrainConfig()
    ids = [lab.utterance_id for lab in labels]
    report = EvalReport()
    for task in tasks:
        for seed in seeds:
            assignment = kfold_split(ids, folds, seed=_stable_seed(task.name, seed))
            fold_of = np.array([assignment[i] for i in ids])
            for fold in range(folds):
                train_utts = np.nonzero(fold_of != fold)[0]
                test_utts = np.nonzero(fold_of == fold)[0]
                probe_seed = _stable_seed(task.name, fold, seed)
                for rep_name, payload in representations.items():
                    frames = payload.get(seed) if isinstance(payload, dict) else payload
                    for probe_kind in probes:
                        row = EvalRow(
                            representation=rep_name,
                            strategy=strategy_of(rep_name),
                            task=task.name,
                            probe=probe_kind,
                            fold=fold,
                            seed=seed,
                        )
                        if frames is None:
                            row.status = "absent"
                            warnings.warn(
                                f"representation {rep_name!r} missing for seed {seed}"
                            )
                        else:
                            cell = _linear_cell if probe_kind == "linear" else _conformer_cell
                            row.metrics = cell(
                                frames, task, labels, train_utts, test_utts, probe_cfg, probe_seed
                            )
                        report.rows.append(row)
    return report


def summarize(report: EvalReport) -> str:
    """Human-readable per-task table of mean +- std for every cell group."""
    agg = report.aggregate()
    tasks = sorted({k[1] for k in agg})
    lines = []
    for task in tasks:
        lines.append(f"== {task} ==")
        keys = sorted(k for k in agg if k[1] == task)
        width = max((len(f"{k[0]} [{k[2]}]") for k in keys), default=10) + 2
        for key in keys:
            rep, _, probe, metric = key
            stats = agg[key]
            lines.append(
                f"  {(rep + ' [' + probe + ']').ljust(width)}"
                f"{metric:>6}: {stats['mean']:.4f} +- {stats['std']:.4f} (n={stats['n']})"
            )
        lines.append("")
    return "\n".join(lines)

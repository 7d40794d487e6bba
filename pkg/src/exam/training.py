"""Losses, Adam, the epoch loop with early stopping, checkpointing."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from . import checkpoint as ckpt
from . import config as cfg
from . import metrics as mt
from .autodiff import Tensor
from .data import BatchIterator, DatasetSplit, Instance, Vocabulary
from .errors import NonFiniteGradientError
from .model import BaseModel

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


# -- losses ------------------------------------------------------------------


def cross_entropy_loss(p: Tensor, labels) -> Tensor:
    """Mean over the batch of -log p[label]; p holds probability rows."""
    labels = np.asarray(labels, dtype=np.int64)
    onehot = np.zeros(p.shape, dtype=p.dtype)
    onehot[np.arange(p.shape[0]), labels] = 1.0
    picked = ad.tensor_sum(ad.mul(p, Tensor(onehot, dtype=p.dtype)), axis=-1)
    return ad.negate(ad.mean(ad.log(picked)))


def cross_entropy_from_logits(logits: Tensor, labels) -> Tensor:
    """Fused softmax + cross entropy (the training fast path)."""
    return ad.softmax_cross_entropy(logits, labels)


def multihot(label_sets: Sequence[frozenset], num_classes: int,
             dtype=np.float32) -> np.ndarray:
    out = np.zeros((len(label_sets), num_classes), dtype=dtype)
    for i, labels in enumerate(label_sets):
        out[i, sorted(labels)] = 1.0
    return out


def binary_loss(p: Tensor, label_sets: Sequence[frozenset]) -> Tensor:
    """Per-class binary cross entropy, summed over classes and averaged
    over the batch; p holds per-class sigmoid outputs."""
    l = Tensor(multihot(label_sets, p.shape[-1], dtype=p.dtype), dtype=p.dtype)
    pos = ad.mul(l, ad.log(p))
    neg = ad.mul(ad.sub(ad.ensure_tensor(np.array(1.0, dtype=p.dtype)), l),
                 ad.log(ad.sub(ad.ensure_tensor(np.array(1.0, dtype=p.dtype)), p)))
    per_instance = ad.tensor_sum(ad.add(pos, neg), axis=-1)
    return ad.negate(ad.mean(per_instance))


# -- optimizer ---------------------------------------------------------------


class Adam:
    """Adam with bias correction; embedding-style tables whose gradient
    touched only some rows get a lazy (rows-only) moment update."""

    def __init__(self, params: dict[str, Tensor], lr: float,
                 beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
                 eps: float = ADAM_EPS):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def step(self):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            rows = p.touched_rows()
            if rows is not None:
                g = g[rows]
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradientError(name)
            m = self.m[name]
            v = self.v[name]
            if rows is None:
                m += (1.0 - self.beta1) * (g - m)
                v += (1.0 - self.beta2) * (g * g - v)
                p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            else:
                m[rows] += (1.0 - self.beta1) * (g - m[rows])
                v[rows] += (1.0 - self.beta2) * (g * g - v[rows])
                p.data[rows] -= (
                    self.lr * (m[rows] / c1) / (np.sqrt(v[rows] / c2) + self.eps)
                )


def clip_global_norm(params: dict[str, Tensor], max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most max_norm."""
    total = 0.0
    for p in params.values():
        if p.grad is not None:
            total += float(np.sum(p.grad.astype(np.float64) ** 2))
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for p in params.values():
            if p.grad is not None:
                p.grad *= scale
    return norm


# -- evaluation helpers ------------------------------------------------------


def predict_probs(model: BaseModel, instances: Sequence[Instance],
                  batch_size: int = 256) -> np.ndarray:
    """(N, c) probabilities, computed without graph recording."""
    out = []
    with ad.no_grad():
        for start in range(0, len(instances), batch_size):
            chunk = instances[start:start + batch_size]
            ids = np.stack([inst.ids for inst in chunk])
            out.append(model.probabilities(ids).data)
    return np.concatenate(out) if out else np.zeros((0, model.config.classes))


def evaluate(model: BaseModel, instances: Sequence[Instance],
             batch_size: int = 256) -> mt.EvalSummary:
    """Task-appropriate summary: accuracy, or the ranked-retrieval triple."""
    model.check_labels(list(instances))
    probs = predict_probs(model, instances, batch_size)
    if model.config.task == cfg.TASK_MULTICLASS:
        preds = probs.argmax(axis=-1).tolist()
        return mt.evaluate_multiclass(preds, [inst.label for inst in instances])
    ranked = [
        mt.RankedPrediction(mt.top_k_from_scores(row), frozenset(inst.label))
        for row, inst in zip(probs, instances)
    ]
    return mt.evaluate_multilabel(ranked, model.config.precision_log_base)


# -- the training loop -------------------------------------------------------


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_metric: float
    seconds: float


@dataclass
class TrainReport:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_metric: float = float("-inf")
    best_checkpoint: Optional[str] = None
    stop_reason: str = ""

    def to_json_dict(self) -> dict:
        return {
            "epochs": [
                {"epoch": r.epoch, "train_loss": r.train_loss,
                 "val_metric": r.val_metric, "seconds": round(r.seconds, 3)}
                for r in self.epochs
            ],
            "best_epoch": self.best_epoch,
            "best_metric": self.best_metric,
            "best_checkpoint": self.best_checkpoint,
            "stop_reason": self.stop_reason,
        }


def train_step(model: BaseModel, batch: list[Instance], optimizer: Adam) -> float:
    """One forward/backward/update over a batch; returns the batch loss."""
    ids = np.stack([inst.ids for inst in batch])
    optimizer.zero_grad()
    if model.config.task == cfg.TASK_MULTICLASS:
        labels = np.array([inst.label for inst in batch], dtype=np.int64)
        loss = cross_entropy_from_logits(model.logits(ids), labels)
    else:
        probs = ad.sigmoid(model.logits(ids))
        loss = binary_loss(probs, [inst.label for inst in batch])
    loss_value = loss.item()
    loss.backward()
    clip = model.config.grad_clip
    if clip is not None:
        clip_global_norm(optimizer.params, clip)
    optimizer.step()
    return loss_value


def train(model: BaseModel, split: DatasetSplit, batches: BatchIterator,
          vocab: Vocabulary, checkpoint_dir: Optional[str] = None,
          eval_batch_size: int = 256) -> TrainReport:
    """Epoch loop with validation-based early stopping.

    Keeps a checkpoint of the best validation metric so far; stops after
    `patience` non-improving validations or at max_epochs. A non-finite
    loss or gradient aborts training with the last good checkpoint intact.
    """
    config = model.config
    model.check_labels(split.train)
    optimizer = Adam(model.parameters(), lr=config.lr)
    report = TrainReport()
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        start = time.perf_counter()
        losses = []
        aborted = False
        for batch in batches.epoch(epoch):
            try:
                loss_value = train_step(model, batch, optimizer)
            except NonFiniteGradientError as exc:
                report.stop_reason = f"aborted: {exc}"
                aborted = True
                break
            if not np.isfinite(loss_value):
                report.stop_reason = "aborted: non-finite training loss"
                aborted = True
                break
            losses.append(loss_value)
        if aborted:
            break
        val_metric = evaluate(model, split.validation, eval_batch_size).primary_metric
        report.epochs.append(EpochRecord(
            epoch=epoch,
            train_loss=float(np.mean(losses)) if losses else float("nan"),
            val_metric=val_metric,
            seconds=time.perf_counter() - start,
        ))
        if val_metric > report.best_metric:
            report.best_metric = val_metric
            report.best_epoch = epoch
            stale = 0
            if checkpoint_dir is not None:
                ckpt.save(model, vocab, checkpoint_dir)
                report.best_checkpoint = str(checkpoint_dir)
        else:
            stale += 1
            if stale > config.patience:
                report.stop_reason = "early_stop"
                break
    if not report.stop_reason:
        report.stop_reason = "max_epochs"
    return report

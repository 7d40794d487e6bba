"""Command-line entry point: train, eval, predict, export-interaction.

Exit codes: 0 success, 2 usage/validation problem, 3 runtime failure.
"""

from __future__ import annotations

import csv
import json
import os
import sys

import click
import numpy as np

from . import checkpoint as ckpt
from . import config as cfg
from . import data as dt
from . import model as mdl
from . import training
from .errors import ExamError

VALIDATION_BASENAME = {"multiclass": "validation.csv", "multilabel": "validation.tsv"}


def _fail(message: str, code: int = 2):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_pairs(path: str, config: cfg.RunConfig):
    if not os.path.isfile(path):
        _fail(f"data file not found: {path}")
    if config.task == cfg.TASK_MULTICLASS:
        return dt.load_multiclass_csv(path, config.classes)
    return dt.load_multilabel_tsv(path, config.classes)


def _write_validation_file(instances, config: cfg.RunConfig, directory: str) -> str:
    """Persist the validation split in its task's file format so the saved
    checkpoint's reported metric can be reproduced with `eval`."""
    path = os.path.join(directory, VALIDATION_BASENAME[config.task])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if config.task == cfg.TASK_MULTICLASS:
            writer = csv.writer(fh, quoting=csv.QUOTE_ALL)
            for inst in instances:
                writer.writerow([inst.label + 1, " ".join(inst.raw_tokens), ""])
        else:
            for inst in instances:
                labels = ",".join(str(i) for i in sorted(inst.label))
                fh.write(f"{' '.join(inst.raw_tokens)}\t{labels}\n")
    return path


@click.group()
def main():
    """Interaction-matrix text classifier."""


@main.command("train")
@click.option("--config", "config_path", required=True,
              type=click.Path(), help="JSON run configuration.")
def cmd_train(config_path):
    """Train a model and write a checkpoint directory plus report.json."""
    try:
        config = cfg.load_config(config_path)
        if config.train_data is None:
            _fail("config: train_data is required for training")
        if config.checkpoint_dir is None:
            _fail("config: checkpoint_dir is required for training")
        pairs = _load_pairs(config.train_data, config)
        if not pairs:
            _fail(f"no usable rows in {config.train_data}")
        token_lists = [dt.tokenize(text) for _, text in pairs]
        vocab = dt.build_vocabulary(token_lists, config.min_count)
        instances = [
            dt.Instance(ids=dt.encode(toks, vocab, config.text_len, config.pad_side),
                        label=label, raw_tokens=toks)
            for (label, _), toks in zip(pairs, token_lists)
        ]
        split, batches = dt.split_and_batch(
            instances, config.val_fraction, config.batch_size, config.seed)
        model = mdl.build_model(config, len(vocab),
                                np.random.default_rng(config.seed))
    except ExamError as exc:
        _fail(str(exc))

    os.makedirs(config.checkpoint_dir, exist_ok=True)
    _write_validation_file(split.validation, config, config.checkpoint_dir)
    try:
        report = training.train(model, split, batches, vocab,
                                checkpoint_dir=config.checkpoint_dir)
    except ExamError as exc:
        _fail(str(exc), code=3)
    report_path = os.path.join(config.checkpoint_dir, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2)
        fh.write("\n")
    click.echo(json.dumps({
        "best_epoch": report.best_epoch,
        "best_metric": report.best_metric,
        "stop_reason": report.stop_reason,
        "checkpoint": config.checkpoint_dir,
        "report": report_path,
    }))
    if report.stop_reason.startswith("aborted"):
        sys.exit(3)


@main.command("eval")
@click.option("--checkpoint", "checkpoint_dir", required=True, type=click.Path())
@click.option("--data", "data_path", required=True, type=click.Path())
def cmd_eval(checkpoint_dir, data_path):
    """Evaluate a checkpoint on a data file; prints a metrics JSON object."""
    try:
        model, vocab, config = ckpt.load(checkpoint_dir)
        pairs = _load_pairs(data_path, config)
        if not pairs:
            _fail(f"no usable rows in {data_path}")
        instances = dt.make_instances(pairs, vocab, config.text_len, config.pad_side)
        summary = training.evaluate(model, instances)
    except ExamError as exc:
        _fail(str(exc))
    click.echo(json.dumps(summary.to_json_dict()))


def _encode_text(text: str, vocab, config: cfg.RunConfig) -> dt.Instance:
    tokens = dt.tokenize(text)
    return dt.Instance(
        ids=dt.encode(tokens, vocab, config.text_len, config.pad_side),
        label=0 if config.task == cfg.TASK_MULTICLASS else frozenset({0}),
        raw_tokens=tokens,
    )


@main.command("predict")
@click.option("--checkpoint", "checkpoint_dir", required=True, type=click.Path())
@click.option("--text", required=True)
def cmd_predict(checkpoint_dir, text):
    """Print the top-ranked classes with probabilities for one text."""
    try:
        model, vocab, config = ckpt.load(checkpoint_dir)
    except ExamError as exc:
        _fail(str(exc))
    inst = _encode_text(text, vocab, config)
    probs = training.predict_probs(model, [inst])[0]
    order = np.lexsort((np.arange(probs.size), -probs))[: min(5, probs.size)]
    click.echo(json.dumps({
        "task": config.task,
        "predictions": [
            {"class": model.class_names[i], "id": int(i),
             "probability": round(float(probs[i]), 6)}
            for i in order
        ],
    }))


@main.command("export-interaction")
@click.option("--checkpoint", "checkpoint_dir", required=True, type=click.Path())
@click.option("--text", required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def cmd_export_interaction(checkpoint_dir, text, out_path):
    """Write the class-by-word interaction matrix for one text as JSON."""
    try:
        model, vocab, config = ckpt.load(checkpoint_dir)
        record = mdl.export_interaction(_encode_text(text, vocab, config), model)
    except ExamError as exc:
        _fail(str(exc))
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(record.to_json_dict(), fh)
        fh.write("\n")
    click.echo(out_path)


if __name__ == "__main__":
    main()

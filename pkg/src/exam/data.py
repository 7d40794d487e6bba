"""Tokenization, vocabulary, dataset loading, padding, splitting, batching."""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DataError

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace with punctuation chars separated
    into standalone tokens. Empty text gives an empty list."""
    return _TOKEN_RE.findall(text.lower())


class Vocabulary:
    """Bidirectional token<->id map; ids 0 and 1 are reserved pad/unk."""

    def __init__(self, tokens: Sequence[str] = ()):
        self.id_to_token: list[str] = [PAD_TOKEN, UNK_TOKEN, *tokens]
        self.token_to_id: dict[str, int] = {
            t: i for i, t in enumerate(self.id_to_token)
        }
        if len(self.token_to_id) != len(self.id_to_token):
            raise DataError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def token_of(self, idx: int) -> str:
        return self.id_to_token[idx]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for token in self.id_to_token:
                fh.write(token + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if lines[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise DataError(f"{path}: first two lines must be {PAD_TOKEN} and {UNK_TOKEN}")
        return cls(lines[2:])


def build_vocabulary(corpus: Iterable[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Frequency-sorted vocabulary (ties broken lexicographically).

    Tokens below min_count are dropped and will encode to the unk id.
    """
    if min_count < 1:
        raise ConfigError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    for tokens in corpus:
        counts.update(tokens)
    kept = [t for t, c in counts.items() if c >= min_count]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocabulary(kept)


Label = Union[int, frozenset]


@dataclass
class Instance:
    """A fixed-length id sequence with its label and the original tokens."""

    ids: np.ndarray
    label: Label
    raw_tokens: list[str] = field(default_factory=list)


def encode(tokens: Sequence[str], vocab: Vocabulary, n: int,
           pad_side: str = "suffix") -> np.ndarray:
    """Token strings to a length-n id array.

    Over-long input keeps the first n tokens when padding on the suffix
    side (multi-class convention) and the last n when padding on the
    prefix side (multi-label convention, recency-preserving).
    """
    if n < 1:
        raise ConfigError(f"sequence length must be >= 1, got {n}")
    if pad_side not in ("suffix", "prefix"):
        raise ConfigError(f"pad_side must be 'suffix' or 'prefix', got {pad_side!r}")
    ids = [vocab.id_of(t) for t in tokens]
    if len(ids) > n:
        ids = ids[:n] if pad_side == "suffix" else ids[-n:]
    out = np.full(n, PAD_ID, dtype=np.int64)
    if pad_side == "suffix":
        out[: len(ids)] = ids
    else:
        out[n - len(ids):] = ids
    return out


def load_multiclass_csv(path, num_classes: int) -> list[tuple[int, str]]:
    """Rows of "class","title","description" with 1-based class index.

    Returns (0-based label, title + " " + description) pairs.
    """
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) < 3:
                raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                cls = int(row[0])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer class {row[0]!r}") from None
            if not 1 <= cls <= num_classes:
                raise DataError(
                    f"{path}:{lineno}: class {cls} outside [1, {num_classes}]"
                )
            out.append((cls - 1, f"{row[1]} {row[2]}"))
    return out


def load_multilabel_tsv(path, num_classes: int) -> list[tuple[frozenset, str]]:
    """Lines of text<TAB>comma-separated 0-based label ids."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected exactly one tab")
            text, label_field = parts
            if not label_field.strip():
                raise DataError(f"{path}:{lineno}: empty label field")
            try:
                labels = frozenset(int(x) for x in label_field.split(","))
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad label field {label_field!r}") from None
            for lab in labels:
                if not 0 <= lab < num_classes:
                    raise DataError(
                        f"{path}:{lineno}: label {lab} outside [0, {num_classes})"
                    )
            out.append((labels, text))
    return out


@dataclass
class DatasetSplit:
    train: list[Instance]
    validation: list[Instance]
    test: list[Instance] = field(default_factory=list)


class BatchIterator:
    """Reshuffles the training order each epoch with an epoch-derived seed;
    the final partial batch is kept."""

    def __init__(self, instances: list[Instance], batch_size: int, seed: int):
        if batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
        self.instances = instances
        self.batch_size = batch_size
        self.seed = seed

    def epoch(self, epoch_index: int) -> Iterator[list[Instance]]:
        order = np.random.default_rng((self.seed, epoch_index)).permutation(
            len(self.instances)
        )
        for start in range(0, len(order), self.batch_size):
            yield [self.instances[i] for i in order[start:start + self.batch_size]]


def split_and_batch(data: list[Instance], val_fraction: float, batch_size: int,
                    seed: int, test: Optional[list[Instance]] = None,
                    ) -> tuple[DatasetSplit, BatchIterator]:
    """Deterministic shuffled train/validation split plus a batch iterator
    over the training part."""
    if not 0.0 < val_fraction < 1.0:
        raise ConfigError(f"val_fraction must be in (0, 1), got {val_fraction}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(data))
    n_val = int(round(len(data) * val_fraction))
    val = [data[i] for i in order[:n_val]]
    train = [data[i] for i in order[n_val:]]
    split = DatasetSplit(train=train, validation=val, test=list(test or []))
    return split, BatchIterator(train, batch_size, seed)


def make_instances(pairs: Sequence[tuple[Label, str]], vocab: Vocabulary,
                   n: int, pad_side: str) -> list[Instance]:
    """Tokenize + encode loader output into model-ready instances."""
    out = []
    for label, text in pairs:
        tokens = tokenize(text)
        out.append(Instance(ids=encode(tokens, vocab, n, pad_side),
                            label=label, raw_tokens=tokens))
    return out

"""Word-level encoders producing H with one row per token position.

Three variants: a GRU over the token sequence, a region embedding where
each word's context matrix weights its neighbours before a window max,
and a raw embedding lookup (the bag-of-words special case).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError

EMBED_INIT_RANGE = 0.05

GRU_STANDARD = "standard"
GRU_AS_PRINTED = "as_printed"


@dataclass
class GruParams:
    """Gate matrices acting on the concatenated [h_prev, e_t] vector.

    M_z: update gate, M_r: reset gate, M_h: candidate state. All three
    are (k_hidden + k_embed) x k_hidden; the initial state is zero.
    """

    M_z: Tensor
    M_r: Tensor
    M_h: Tensor

    @property
    def hidden_size(self) -> int:
        return self.M_z.shape[1]

    @classmethod
    def init(cls, rng: np.random.Generator, k_embed: int, k_hidden: int,
             dtype=np.float32) -> "GruParams":
        shape = (k_hidden + k_embed, k_hidden)
        return cls(
            M_z=ad.glorot_uniform(rng, shape, dtype=dtype, name="gru.M_z"),
            M_r=ad.glorot_uniform(rng, shape, dtype=dtype, name="gru.M_r"),
            M_h=ad.glorot_uniform(rng, shape, dtype=dtype, name="gru.M_h"),
        )


@dataclass
class RegionParams:
    """Word embeddings plus per-word context matrices of width 2s+1."""

    E: Tensor  # (v, k)
    U: Tensor  # (v, 2s+1, k)
    s: int

    @property
    def width(self) -> int:
        return 2 * self.s + 1

    @classmethod
    def init(cls, rng: np.random.Generator, vocab_size: int, k: int, s: int,
             dtype=np.float32) -> "RegionParams":
        if s < 0:
            raise ConfigError(f"region radius must be >= 0, got {s}")
        E = ad.uniform(rng, (vocab_size, k), -EMBED_INIT_RANGE, EMBED_INIT_RANGE,
                       dtype=dtype, name="region.E")
        U = ad.uniform(rng, (vocab_size, 2 * s + 1, k), -EMBED_INIT_RANGE,
                       EMBED_INIT_RANGE, dtype=dtype, name="region.U")
        return cls(E=E, U=U, s=s)


def _as_batch(ids) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    return ids[None, :] if ids.ndim == 1 else ids


def gru_encode(ids, params: GruParams, embeddings: Tensor,
               variant: str = GRU_STANDARD) -> Tensor:
    """Run the GRU over the id sequence; returns H of shape (B, n, k_hidden).

    variant 'standard' applies the reset gate to the prior state inside the
    candidate; 'as_printed' drops the reset gate and reuses M_r as the
    candidate matrix.
    """
    if variant not in (GRU_STANDARD, GRU_AS_PRINTED):
        raise ConfigError(f"unknown gru variant {variant!r}")
    ids = _as_batch(ids)
    batch, n = ids.shape
    k_h = params.hidden_size
    h = ad.zeros((batch, k_h), dtype=embeddings.dtype)
    rows = []
    for i in range(n):
        e_i = ad.embedding_lookup(embeddings, ids[:, i])
        x = ad.concat([h, e_i], axis=1)
        z = ad.sigmoid(ad.matmul(x, params.M_z))
        if variant == GRU_STANDARD:
            r = ad.sigmoid(ad.matmul(x, params.M_r))
            xc = ad.concat([ad.mul(r, h), e_i], axis=1)
            h_cand = ad.tanh(ad.matmul(xc, params.M_h))
        else:
            h_cand = ad.tanh(ad.matmul(x, params.M_r))
        # h = (1 - z) * h + z * h_cand
        h = ad.add(h, ad.mul(z, ad.sub(h_cand, h)))
        rows.append(h)
    return ad.stack(rows, axis=1)


def region_encode(ids, params: RegionParams) -> Tensor:
    """Region embedding: H row i is the element-wise max over the window
    [i-s, i+s] of K_{w_i, t} * e_{w_{i+t}}, out-of-range offsets skipped.
    """
    ids = _as_batch(ids)
    _, n = ids.shape
    offsets = np.arange(-params.s, params.s + 1)
    pos = np.arange(n)[:, None] + offsets[None, :]        # (n, w)
    valid = (pos >= 0) & (pos < n)
    ctx_ids = ids[:, np.clip(pos, 0, n - 1)]              # (B, n, w)
    e_ctx = ad.embedding_lookup(params.E, ctx_ids)        # (B, n, w, k)
    u = ad.embedding_lookup(params.U, ids)                # (B, n, w, k)
    return ad.region_pool(e_ctx, u, valid)


def embed_only(ids, E: Tensor) -> Tensor:
    """H is the raw word embeddings (bag-of-words encoder)."""
    return ad.embedding_lookup(E, _as_batch(ids))

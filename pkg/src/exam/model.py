"""Interaction layer, aggregation layer, model assembly, and baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import config as cfg
from . import encoders
from .autodiff import Tensor
from .data import PAD_ID, PAD_TOKEN, Instance
from .errors import ContractError, ShapeError, UnsupportedModelError


def interact(H: Tensor, T: Tensor) -> Tensor:
    """Interaction matrix I = T @ H^T.

    H: (n, k) or batched (B, n, k); T: (c, k). Entry [s, t] is the dot
    product between class s and word t representations.
    """
    if H.shape[-1] != T.shape[-1]:
        raise ShapeError(
            f"encoder width {H.shape[-1]} does not match class width {T.shape[-1]}"
        )
    axes = None if H.ndim == 2 else (0, 2, 1)
    return ad.matmul(T, ad.transpose(H, axes))


@dataclass
class AggregationParams:
    """Shared two-layer MLP mapping a class's interaction row to a logit."""

    W1: Tensor  # (n, h)
    b: Tensor   # (1, h)
    W2: Tensor  # (h, 1)

    @classmethod
    def init(cls, rng: np.random.Generator, n: int, h: int,
             dtype=np.float32) -> "AggregationParams":
        return cls(
            W1=ad.glorot_uniform(rng, (n, h), dtype=dtype, name="agg.W1"),
            b=ad.zeros((1, h), dtype=dtype, requires_grad=True, name="agg.b"),
            W2=ad.glorot_uniform(rng, (h, 1), dtype=dtype, name="agg.W2"),
        )


def aggregate(I: Tensor, params: AggregationParams) -> Tensor:
    """Per-class logits: ReLU(I_{s,:} W1 + b) W2, same MLP for every class.

    I: (c, n) or (B, c, n); returns (c,)-shaped logits as (1, c) or (B, c).
    """
    if I.shape[-1] != params.W1.shape[0]:
        raise ShapeError(
            f"interaction row length {I.shape[-1]} does not match "
            f"W1 rows {params.W1.shape[0]}"
        )
    A = ad.relu(ad.add(ad.matmul(I, params.W1), params.b))
    o = ad.matmul(A, params.W2)
    if o.ndim == 3:
        return ad.reshape(o, (o.shape[0], o.shape[1]))
    return ad.reshape(o, (1, o.shape[0]))


@dataclass
class InteractionRecord:
    """A class-by-word interaction matrix annotated for visualization."""

    matrix: np.ndarray        # (c, n)
    tokens: list[str]         # length n
    class_names: list[str]    # length c
    padding_mask: list[bool]  # length n, True at padding columns

    def to_json_dict(self) -> dict:
        return {
            "class_names": self.class_names,
            "tokens": self.tokens,
            "padding_mask": self.padding_mask,
            "matrix": [[float(x) for x in row] for row in self.matrix],
        }


class BaseModel:
    """Shared surface: logits/probabilities over batched id arrays."""

    kind: str

    def __init__(self, config: cfg.RunConfig, vocab_size: int):
        self.config = config
        self.vocab_size = vocab_size
        self.class_names = config.effective_class_names()

    def parameters(self) -> dict[str, Tensor]:
        raise NotImplementedError

    def encode(self, ids) -> Tensor:
        raise NotImplementedError

    def logits(self, ids) -> Tensor:
        raise NotImplementedError

    def probabilities(self, ids) -> Tensor:
        """Softmax rows for multi-class, per-class sigmoid for multi-label."""
        out = self.logits(ids)
        if self.config.task == cfg.TASK_MULTICLASS:
            return ad.softmax_row(out)
        return ad.sigmoid(out)

    def check_labels(self, instances: list[Instance]) -> None:
        multiclass = self.config.task == cfg.TASK_MULTICLASS
        for inst in instances:
            if multiclass != isinstance(inst.label, (int, np.integer)):
                raise ContractError(
                    f"{self.config.task} model fed a label of type "
                    f"{type(inst.label).__name__}"
                )

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def _build_encoder_params(self, rng: np.random.Generator):
        c = self.config
        if c.encoder == cfg.ENCODER_REGION:
            self.region = encoders.RegionParams.init(
                rng, self.vocab_size, c.embed_dim, c.region_radius)
        elif c.encoder == cfg.ENCODER_GRU:
            self.E = ad.uniform(rng, (self.vocab_size, c.embed_dim),
                                -encoders.EMBED_INIT_RANGE,
                                encoders.EMBED_INIT_RANGE, name="E")
            self.gru = encoders.GruParams.init(rng, c.embed_dim, c.gru_hidden)
        else:
            self.E = ad.uniform(rng, (self.vocab_size, c.embed_dim),
                                -encoders.EMBED_INIT_RANGE,
                                encoders.EMBED_INIT_RANGE, name="E")

    def _encoder_params(self) -> dict[str, Tensor]:
        c = self.config
        if c.encoder == cfg.ENCODER_REGION:
            return {"region.E": self.region.E, "region.U": self.region.U}
        if c.encoder == cfg.ENCODER_GRU:
            return {"E": self.E, "gru.M_z": self.gru.M_z,
                    "gru.M_r": self.gru.M_r, "gru.M_h": self.gru.M_h}
        return {"E": self.E}

    def encode(self, ids) -> Tensor:  # noqa: F811 - shared implementation
        c = self.config
        if c.encoder == cfg.ENCODER_REGION:
            return encoders.region_encode(ids, self.region)
        if c.encoder == cfg.ENCODER_GRU:
            return encoders.gru_encode(ids, self.gru, self.E,
                                       variant=c.gru_variant)
        return encoders.embed_only(ids, self.E)


class ExamModel(BaseModel):
    """Encoder -> word/class interaction matrix -> shared MLP aggregation."""

    kind = cfg.MODEL_EXAM

    def __init__(self, config: cfg.RunConfig, vocab_size: int,
                 rng: np.random.Generator):
        super().__init__(config, vocab_size)
        self._build_encoder_params(rng)
        k_out = config.encoder_width
        self.T = ad.glorot_uniform(rng, (config.classes, k_out), name="T")
        self.agg = AggregationParams.init(rng, config.text_len, config.hidden)

    def parameters(self) -> dict[str, Tensor]:
        out = self._encoder_params()
        out.update({"T": self.T, "agg.W1": self.agg.W1, "agg.b": self.agg.b,
                    "agg.W2": self.agg.W2})
        return out

    def interaction(self, ids) -> Tensor:
        H = self.encode(ids)
        I = interact(H, self.T)
        if self.config.mask_padding_interactions:
            ids_arr = encoders._as_batch(ids)
            keep = (ids_arr != PAD_ID).astype(H.dtype)[:, None, :]
            I = ad.mul(I, Tensor(keep, dtype=H.dtype))
        return I

    def logits(self, ids) -> Tensor:
        return aggregate(self.interaction(ids), self.agg)


class FastTextModel(BaseModel):
    """Mean-pooled embeddings followed by one linear layer."""

    kind = cfg.MODEL_FASTTEXT

    def __init__(self, config: cfg.RunConfig, vocab_size: int,
                 rng: np.random.Generator):
        super().__init__(config, vocab_size)
        self._build_encoder_params(rng)
        self.W = ad.glorot_uniform(rng, (config.embed_dim, config.classes),
                                   name="W")
        self.b = ad.zeros((1, config.classes), requires_grad=True, name="b")

    def parameters(self) -> dict[str, Tensor]:
        out = self._encoder_params()
        out.update({"W": self.W, "b": self.b})
        return out

    def logits(self, ids) -> Tensor:
        f = ad.mean_rows(self.encode(ids))      # (B, k)
        return ad.add(ad.matmul(f, self.W), self.b)


class EncoderOnlyModel(BaseModel):
    """Ablation baseline: encoder, element-wise max pool, one FC layer."""

    kind = cfg.MODEL_ENCODER_ONLY

    def __init__(self, config: cfg.RunConfig, vocab_size: int,
                 rng: np.random.Generator):
        super().__init__(config, vocab_size)
        self._build_encoder_params(rng)
        self.W = ad.glorot_uniform(rng, (config.encoder_width, config.classes),
                                   name="W")
        self.b = ad.zeros((1, config.classes), requires_grad=True, name="b")

    def parameters(self) -> dict[str, Tensor]:
        out = self._encoder_params()
        out.update({"W": self.W, "b": self.b})
        return out

    def logits(self, ids) -> Tensor:
        pooled = ad.max_over_axis(self.encode(ids), axis=-2)   # (B, k)
        return ad.add(ad.matmul(pooled, self.W), self.b)


def fasttext_forward(ids, E: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """Logits of the plain bag-of-words linear model: mean(E[ids]) W + b."""
    f = ad.mean_rows(encoders.embed_only(ids, E))
    return ad.add(ad.matmul(f, W), b)


def exam_average_aggregation_forward(ids, E: Tensor, T: Tensor,
                                     b: Tensor) -> Tensor:
    """Interaction route with average aggregation: mean_t I[s, t] + b_s.

    With T = W^T this is numerically identical to fasttext_forward; the
    MLP aggregation generalizes exactly this linear special case.
    """
    H = encoders.embed_only(ids, E)
    I = interact(H, T)                 # (B, c, n)
    return ad.add(ad.mean(I, axis=-1), b)


def encoder_only_forward(H: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """Max-pool the word rows of H and apply one FC layer."""
    pooled = ad.max_over_axis(H, axis=-2)
    return ad.add(ad.matmul(pooled, W), b)


def build_model(config: cfg.RunConfig, vocab_size: int,
                rng: np.random.Generator) -> BaseModel:
    classes = {
        cfg.MODEL_EXAM: ExamModel,
        cfg.MODEL_FASTTEXT: FastTextModel,
        cfg.MODEL_ENCODER_ONLY: EncoderOnlyModel,
    }
    return classes[config.model](config, vocab_size, rng)


def export_interaction(instance: Instance, model: BaseModel) -> InteractionRecord:
    """The class-by-word interaction matrix for one instance, annotated
    with token strings, class names, and a padding-column mask."""
    if not isinstance(model, ExamModel):
        raise UnsupportedModelError(
            f"interaction export needs the interaction model, got {model.kind!r}"
        )
    with ad.no_grad():
        I = model.interaction(instance.ids[None, :])
    n = model.config.text_len
    toks = list(instance.raw_tokens)
    if len(toks) > n:
        toks = toks[:n] if model.config.pad_side == "suffix" else toks[-n:]
    pad = [PAD_TOKEN] * (n - len(toks))
    tokens = toks + pad if model.config.pad_side == "suffix" else pad + toks
    return InteractionRecord(
        matrix=np.asarray(I.data[0], dtype=np.float64),
        tokens=tokens,
        class_names=list(model.class_names),
        padding_mask=[bool(i == PAD_ID) for i in instance.ids],
    )

"""Checkpoint save/load: round trips and corruption handling."""

import json

import numpy as np
import pytest

from exam import checkpoint as ckpt
from exam import data as dt
from exam import model as mdl
from exam import training as tr
from exam.errors import CheckpointError

from synth import keyword_pairs, pipeline, toy_config


@pytest.fixture
def saved(tmp_path, rng):
    config = toy_config(classes=3)
    pairs = keyword_pairs(40, 3, seed=2)
    vocab, instances = pipeline(pairs, config)
    model = mdl.build_model(config, len(vocab), rng)
    directory = tmp_path / "ck"
    ckpt.save(model, vocab, directory)
    return model, vocab, instances, directory


class TestRoundTrip:
    def test_all_parameters_restored(self, saved):
        model, _, _, directory = saved
        loaded, _, _ = ckpt.load(directory)
        for name, p in model.parameters().items():
            restored = loaded.parameters()[name]
            assert np.allclose(p.data, restored.data, atol=1e-7), name

    def test_evaluation_metric_reproduced(self, saved):
        model, _, instances, directory = saved
        loaded, _, _ = ckpt.load(directory)
        before = tr.evaluate(model, instances).primary_metric
        after = tr.evaluate(loaded, instances).primary_metric
        assert abs(before - after) <= 1e-7

    def test_vocab_and_config_survive(self, saved):
        model, vocab, _, directory = saved
        _, loaded_vocab, loaded_config = ckpt.load(directory)
        assert loaded_vocab.id_to_token == vocab.id_to_token
        assert loaded_config.classes == model.config.classes
        assert loaded_config.encoder == model.config.encoder

    def test_probabilities_reproduced_exactly(self, saved):
        # float32 params serialize as float32: bit-exact restore
        model, _, instances, directory = saved
        loaded, _, _ = ckpt.load(directory)
        ids = np.stack([inst.ids for inst in instances[:8]])
        from exam import autodiff as ad

        with ad.no_grad():
            a = model.probabilities(ids).data
            b = loaded.probabilities(ids).data
        assert np.array_equal(a, b)


class TestErrorCases:
    def test_missing_directory(self, tmp_path):
        with pytest.raises(CheckpointError, match="not a checkpoint"):
            ckpt.load(tmp_path / "nope")

    def test_unsupported_format_version(self, saved):
        _, _, _, directory = saved
        meta = json.loads((directory / "meta.json").read_text())
        meta["format_version"] = 99
        (directory / "meta.json").write_text(json.dumps(meta))
        with pytest.raises(CheckpointError, match="format"):
            ckpt.load(directory)

    def test_truncated_weights(self, saved):
        _, _, _, directory = saved
        blob = (directory / "weights.bin").read_bytes()
        (directory / "weights.bin").write_bytes(blob[: len(blob) // 2])
        with pytest.raises(CheckpointError, match="truncated"):
            ckpt.load(directory)

    def test_extra_weights(self, saved):
        _, _, _, directory = saved
        with open(directory / "weights.bin", "ab") as fh:
            fh.write(np.ones(4, dtype="<f4").tobytes())
        with pytest.raises(CheckpointError, match="extra data"):
            ckpt.load(directory)

    def test_vocab_size_mismatch(self, saved):
        _, _, _, directory = saved
        lines = (directory / "vocab.txt").read_text().splitlines()
        (directory / "vocab.txt").write_text("\n".join(lines + ["extra"]) + "\n")
        with pytest.raises(CheckpointError, match="vocab size"):
            ckpt.load(directory)

    def test_manifest_shape_mismatch(self, saved):
        _, _, _, directory = saved
        meta = json.loads((directory / "meta.json").read_text())
        meta["manifest"][0]["shape"][0] += 1
        (directory / "meta.json").write_text(json.dumps(meta))
        with pytest.raises(CheckpointError, match="shape"):
            ckpt.load(directory)

    def test_manifest_name_mismatch(self, saved):
        _, _, _, directory = saved
        meta = json.loads((directory / "meta.json").read_text())
        meta["manifest"][0]["name"] = "bogus"
        (directory / "meta.json").write_text(json.dumps(meta))
        with pytest.raises(CheckpointError, match="names"):
            ckpt.load(directory)

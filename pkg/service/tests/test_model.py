import json

import pytest
import torch

from policy_service.model import (
    ArtifactError,
    ModelConfig,
    NextRuleModel,
    batch_tensors,
    load_artifact,
    masked_probs,
    save_artifact,
)
from policy_service.vocab import valid_mask


class TestForward:
    def test_logit_shape(self, tiny_model):
        rules, lengths, cond = batch_tensors([[0], [0, 1, 5]], [(0.0, 0.0), (1.0, -1.0)])
        logits = tiny_model(rules, lengths, cond)
        assert logits.shape == (2, 9)

    def test_unconditioned_ignores_condition(self):
        torch.manual_seed(1)
        model = NextRuleModel(ModelConfig(recurrent_units=16, conditioned=False))
        model.eval()
        a = masked_probs(model, [0, 1], 0, 0)
        b = masked_probs(model, [0, 1], 9, -9)
        assert a == b

    def test_conditioned_uses_condition(self):
        torch.manual_seed(1)
        model = NextRuleModel(ModelConfig(recurrent_units=16, conditioned=True))
        model.eval()
        a = masked_probs(model, [0, 1], 0, 0)
        b = masked_probs(model, [0, 1], 9, -9)
        assert a != b


class TestMaskedProbs:
    def test_mask_support_and_sum(self, tiny_model):
        for prefix in ([0], [0, 5], [0, 1], [0, 4, 5, 8, 6]):
            probs = masked_probs(tiny_model, prefix, -2, 2)
            mask = valid_mask(prefix)
            assert abs(sum(probs) - 1.0) < 1e-6
            assert all(p == 0.0 for p, m in zip(probs, mask) if not m)
            assert all(p > 0.0 for p, m in zip(probs, mask) if m)

    def test_serving_determinism(self, tiny_model):
        a = masked_probs(tiny_model, [0, 1, 5], 3, -1)
        b = masked_probs(tiny_model, [0, 1, 5], 3, -1)
        assert all(abs(x - y) < 1e-7 for x, y in zip(a, b))


class TestArtifacts:
    def test_save_load_roundtrip(self, tiny_model, tmp_path):
        save_artifact(tmp_path / "m", tiny_model, {"note": "test"})
        loaded = load_artifact(tmp_path / "m")
        assert masked_probs(loaded, [0, 5], 1, 1) == masked_probs(tiny_model, [0, 5], 1, 1)
        assert loaded.config == tiny_model.config

    def test_vocab_hash_mismatch_is_hard_error(self, tiny_model, tmp_path):
        save_artifact(tmp_path / "m", tiny_model, {})
        cfg_path = tmp_path / "m" / "config.json"
        cfg = json.loads(cfg_path.read_text())
        cfg["vocab_hash"] = "0" * 64
        cfg_path.write_text(json.dumps(cfg))
        with pytest.raises(ArtifactError):
            load_artifact(tmp_path / "m")

    def test_missing_artifact(self, tmp_path):
        with pytest.raises(ArtifactError):
            load_artifact(tmp_path / "nope")

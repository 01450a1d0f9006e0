import pytest
import torch

from policy_service import ModelConfig, TrainConfig, train
from policy_service.data import Sequence
from policy_service.model import masked_probs

from service_support import collision_free_subset


class TestOverfitSmoke:
    def test_memorizes_ten_expressions(self, desk_sequences):
        seqs = collision_free_subset(desk_sequences, 10, seed=3)
        assert len(seqs) == 10
        model, metrics = train(
            seqs, seqs,
            ModelConfig(recurrent_units=64),
            TrainConfig(max_steps=6000, eval_every=500, patience=12,
                        batch_size=64, val_examples=1024, seed=1),
        )
        assert metrics["final_train_accuracy"] >= 0.99, metrics["final_train_accuracy"]


class TestLearningProgress:
    def test_validation_loss_drops_twenty_percent(self, desk_sequences):
        model, metrics = train(
            desk_sequences[:400], desk_sequences[400:600],
            ModelConfig(recurrent_units=32),
            TrainConfig(max_steps=800, eval_every=200, batch_size=64,
                        val_examples=1024, seed=0),
        )
        drop = 1 - metrics["best_val_loss"] / metrics["initial_val_loss"]
        assert drop >= 0.20, f"validation loss only dropped {100 * drop:.1f}%"


class TestDivergenceGuard:
    def test_nan_loss_aborts(self, desk_sequences, monkeypatch):
        # The guard's contract: a non-finite loss aborts with diagnostics.
        import policy_service.training as training_mod

        def nan_loss(model, batch):
            return torch.tensor(float("nan"), requires_grad=True)

        monkeypatch.setattr(training_mod, "_masked_loss", nan_loss)
        with pytest.raises(RuntimeError, match="diverged at step 1"):
            train(desk_sequences[:50], desk_sequences[:50],
                  ModelConfig(recurrent_units=16),
                  TrainConfig(max_steps=10, eval_every=10, seed=0))


class TestDeterminism:
    def test_same_seed_same_model(self, desk_sequences):
        results = []
        for _ in range(2):
            model, _ = train(desk_sequences[:60], desk_sequences[:60],
                             ModelConfig(recurrent_units=16),
                             TrainConfig(max_steps=60, eval_every=30, seed=4,
                                         val_examples=256))
            results.append(masked_probs(model, [0, 1], 1, -1))
        assert results[0] == results[1]

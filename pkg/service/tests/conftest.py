import pytest
import torch

from policy_service import ModelConfig, NextRuleModel, read_corpus

from service_support import DESK_DIR

torch.set_num_threads(4)


@pytest.fixture(scope="session")
def desk_sequences():
    if not (DESK_DIR / "train.jsonl").exists():
        pytest.skip("desk corpus not present")
    return read_corpus(DESK_DIR / "train.jsonl")


@pytest.fixture(scope="session")
def tiny_model():
    torch.manual_seed(0)
    model = NextRuleModel(ModelConfig(recurrent_units=16))
    model.eval()
    return model

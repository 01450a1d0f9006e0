import pytest

from support import DATA_DIR


@pytest.fixture(scope="session")
def desk_corpus():
    from asymreg.corpus import read_jsonl

    path = DATA_DIR / "train.jsonl"
    if not path.exists():
        pytest.skip("desk corpus not built; run scripts/make_desk_corpus.py")
    return read_jsonl(path)


@pytest.fixture(scope="session")
def desk_holdout():
    from asymreg.corpus import read_jsonl

    path = DATA_DIR / "holdout_m_le4.jsonl"
    if not path.exists():
        pytest.skip("desk corpus not built; run scripts/make_desk_corpus.py")
    return read_jsonl(path)

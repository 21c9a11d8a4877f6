import json
import logging

import pytest

from flexhub.agents.sac.agent import SacAgent, load_checkpoint
from flexhub.agents.sac.networks import SacHyperparameters
from flexhub.persistence.checkpoints import CheckpointRegistry
from flexhub.persistence.storage import MemoryStorage, TinyDBStorage, create_storage_backend


@pytest.fixture(params=["memory", "tinydb"])
def storage(request, tmp_path):
    backend = MemoryStorage() if request.param == "memory" else TinyDBStorage(tmp_path / "state" / "state.json")
    yield backend
    backend.close()


def test_key_value_operations(storage):
    assert storage.get("missing") is None
    assert not storage.exists("a")
    assert storage.set("a", {"episode": 3})
    assert storage.exists("a")
    assert storage.get("a") == {"episode": 3}
    storage.set("a", {"episode": 4})
    assert storage.get("a") == {"episode": 4}
    assert storage.delete("a")
    assert not storage.delete("a")
    assert storage.get("a") is None


def test_pattern_lookup(storage):
    storage.set("checkpoint:run:final", 1)
    storage.set("checkpoint:run:best", 2)
    storage.set("checkpoint:other:best", 3)
    assert storage.get_pattern("checkpoint:run:*") == {"checkpoint:run:final": 1, "checkpoint:run:best": 2}
    assert storage.get_pattern("checkpoint:other:best") == {"checkpoint:other:best": 3}
    assert storage.get_pattern("nothing*") == {}


def test_tinydb_persists_to_disk(tmp_path):
    path = tmp_path / "state.json"
    db = TinyDBStorage(path)
    db.set("checkpoint:r:final", {"episode": 7})
    db.close()
    assert "checkpoint:r:final" in path.read_text()
    reopened = TinyDBStorage(path)
    assert reopened.get("checkpoint:r:final") == {"episode": 7}
    reopened.close()


def test_backend_factory(tmp_path, caplog):
    assert isinstance(create_storage_backend("memory", tmp_path / "x.json"), MemoryStorage)
    tiny = create_storage_backend("TinyDB", tmp_path / "x.json")
    assert isinstance(tiny, TinyDBStorage)
    tiny.close()
    with caplog.at_level(logging.WARNING, logger="flexhub.persistence.storage"):
        assert isinstance(create_storage_backend("redis", tmp_path / "y.json"), MemoryStorage)
    assert "Unknown backend type 'redis'" in caplog.text


def _agent():
    return SacAgent(4, 2, SacHyperparameters(hidden_sizes=[8], batch_size=4, buffer_capacity=16))


def test_registry_save_and_lookup(tmp_path):
    registry = CheckpointRegistry(MemoryStorage(), tmp_path / "checkpoints", run="demo")
    path = registry.save("final", _agent(), 12, -4.5)
    assert path == tmp_path / "checkpoints" / "final.pt"
    entry = registry.get("final")
    assert entry["episode"] == 12 and entry["return"] == -4.5
    assert entry["path"] == str(path)
    assert set(registry.entries()) == {"final"}
    assert load_checkpoint(path).has_buffer
    with pytest.raises(ValueError):
        registry.path_for("latest")


def test_best_checkpoint_only_on_improvement(tmp_path):
    registry = CheckpointRegistry(MemoryStorage(), tmp_path, run="demo")
    agent = _agent()
    assert registry.offer_best(agent, 1, -10.0)
    assert not registry.offer_best(agent, 2, -12.0)
    assert not registry.offer_best(agent, 3, -10.0)
    assert registry.offer_best(agent, 4, -8.0)
    assert registry.best_return == -8.0
    assert registry.get("best")["episode"] == 4
    loaded = load_checkpoint(tmp_path / "best.pt")
    assert not loaded.has_buffer
    assert loaded.best_return == -8.0


def test_registry_on_tinydb(tmp_path):
    db = TinyDBStorage(tmp_path / "state.json")
    registry = CheckpointRegistry(db, tmp_path / "checkpoints", run="demo")
    registry.save("last_good", _agent(), 5)
    db.close()
    document = json.loads((tmp_path / "state.json").read_text())
    values = [doc["value"] for doc in document["_default"].values()]
    assert values[0]["episode"] == 5
    assert values[0]["path"].endswith("last_good.pt")

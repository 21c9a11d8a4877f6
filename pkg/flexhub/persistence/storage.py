"""
Storage abstraction layer for different backends (memory, TinyDB).
"""
import logging
import threading
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional

from tinydb import Query, TinyDB
from tinydb.storages import JSONStorage

logger = logging.getLogger(__name__)


class StorageBackend(ABC):
    """Abstract key-value storage backend."""

    @abstractmethod
    def get(self, key: str) -> Optional[Any]:
        """Get value by key."""

    @abstractmethod
    def set(self, key: str, value: Any) -> bool:
        """Set value by key."""

    @abstractmethod
    def delete(self, key: str) -> bool:
        """Delete key."""

    @abstractmethod
    def exists(self, key: str) -> bool:
        """Check if key exists."""

    @abstractmethod
    def get_pattern(self, pattern: str) -> Dict[str, Any]:
        """Get all keys matching ``prefix*`` or an exact key."""

    def close(self):
        pass


def _matches(key: str, pattern: str) -> bool:
    if pattern.endswith('*'):
        return key.startswith(pattern[:-1])
    return key == pattern


class MemoryStorage(StorageBackend):
    """In-memory storage backend."""

    def __init__(self):
        self.data: Dict[str, Any] = {}
        self._lock = threading.Lock()

    def get(self, key: str) -> Optional[Any]:
        with self._lock:
            return self.data.get(key)

    def set(self, key: str, value: Any) -> bool:
        with self._lock:
            self.data[key] = value
            return True

    def delete(self, key: str) -> bool:
        with self._lock:
            return self.data.pop(key, None) is not None

    def exists(self, key: str) -> bool:
        with self._lock:
            return key in self.data

    def get_pattern(self, pattern: str) -> Dict[str, Any]:
        with self._lock:
            return {k: v for k, v in self.data.items() if _matches(k, pattern)}


class TinyDBStorage(StorageBackend):
    """TinyDB storage backend; one document per key."""

    def __init__(self, db_path: Path):
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self.db = TinyDB(self.db_path, storage=JSONStorage, indent=2)
        self._lock = threading.Lock()

    def get(self, key: str) -> Optional[Any]:
        with self._lock:
            doc = self.db.get(Query().key == key)
            return doc.get('value') if doc else None

    def set(self, key: str, value: Any) -> bool:
        with self._lock:
            self.db.upsert({'key': key, 'value': value}, Query().key == key)
            return True

    def delete(self, key: str) -> bool:
        with self._lock:
            return len(self.db.remove(Query().key == key)) > 0

    def exists(self, key: str) -> bool:
        with self._lock:
            return self.db.contains(Query().key == key)

    def get_pattern(self, pattern: str) -> Dict[str, Any]:
        with self._lock:
            docs = self.db.search(Query().key.test(_matches, pattern))
            return {doc['key']: doc['value'] for doc in docs}

    def close(self):
        self.db.close()


def create_storage_backend(backend_type: str, db_path: Path) -> StorageBackend:
    """Create storage backend based on type."""
    backend_type = backend_type.lower()

    if backend_type == "memory":
        return MemoryStorage()
    elif backend_type == "tinydb":
        return TinyDBStorage(db_path)
    else:
        logger.warning(f"Unknown backend type '{backend_type}', using memory storage")
        return MemoryStorage()

from __future__ import annotations

import asyncio
import json
import sqlite3
import threading
from pathlib import Path
from typing import Any, Dict, Optional


class CacheStore:
    """SQLite-backed cache of finished episodes, keyed by job digest."""

    def __init__(self, path: str) -> None:
        self.path = path
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.execute(
            "CREATE TABLE IF NOT EXISTS episodes (key TEXT PRIMARY KEY, payload TEXT)"
        )
        self._conn.commit()

    async def get_episode(self, key: str) -> Optional[Dict[str, Any]]:
        return await asyncio.to_thread(self.lookup, key)

    async def set_episode(self, key: str, payload: Dict[str, Any]) -> None:
        await asyncio.to_thread(self.store, key, payload)

    def lookup(self, key: str) -> Optional[Dict[str, Any]]:
        with self._lock:
            row = self._conn.execute(
                "SELECT payload FROM episodes WHERE key = ?", (key,)
            ).fetchone()
        if not row:
            return None
        try:
            return json.loads(row[0])
        except json.JSONDecodeError:
            return None

    def store(self, key: str, payload: Dict[str, Any]) -> None:
        serialized = json.dumps(payload)
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO episodes (key, payload) VALUES (?, ?)",
                (key, serialized),
            )
            self._conn.commit()

    def __len__(self) -> int:
        with self._lock:
            return int(self._conn.execute("SELECT COUNT(*) FROM episodes").fetchone()[0])

    def close(self) -> None:
        with self._lock:
            self._conn.close()

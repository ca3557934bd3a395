"""Structured audit log: one JSON line per pipeline event."""

from __future__ import annotations

import datetime
import hashlib
import json
import os
import threading


def text_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class AuditLog:
    """Append-only JSONL sink; a None path disables writing but keeps history."""

    def __init__(self, path: str | None = None, keep_in_memory: bool = True):
        self.path = path
        self._lock = threading.Lock()
        self._memory: list[dict] = [] if keep_in_memory else None
        if path:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)

    def record(self, stage: str, **fields) -> dict:
        entry = {"ts": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                 "stage": stage}
        entry.update(fields)
        with self._lock:
            if self._memory is not None:
                self._memory.append(entry)
            if self.path:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, sort_keys=True, default=str) + "\n")
        return entry

    def entries(self) -> list[dict]:
        with self._lock:
            return list(self._memory or [])

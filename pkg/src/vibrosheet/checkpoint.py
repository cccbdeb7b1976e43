"""Append-only checkpoint log for resumable sweeps."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

_LOG_NAME = "checkpoint.jsonl"


class CheckpointStore:
    """JSONL log of completed grid points, valid only for one sweep spec hash.

    Each line is ``{"hash": ..., "index": ..., "record": {...}}``. Lines written for
    a different spec, and a torn final line from an interrupted run, are ignored.
    """

    def __init__(self, directory: Path, spec_hash: str) -> None:
        self._dir = directory
        self._dir.mkdir(parents=True, exist_ok=True)
        self._path = self._dir / _LOG_NAME
        self._hash = spec_hash

    @property
    def path(self) -> Path:
        return self._path

    def _lines(self) -> list[dict[str, Any]]:
        try:
            text = self._path.read_text()
        except FileNotFoundError:
            return []
        entries: list[dict[str, Any]] = []
        for line in text.splitlines():
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                continue
            if isinstance(entry, dict):
                entries.append(entry)
        return entries

    def load(self) -> dict[int, dict[str, Any]]:
        """Return completed records for this spec, keyed by grid index."""
        done: dict[int, dict[str, Any]] = {}
        for entry in self._lines():
            if entry.get("hash") != self._hash:
                continue
            index, record = entry.get("index"), entry.get("record")
            if isinstance(index, int) and isinstance(record, dict):
                done[index] = record
        return done

    def append(self, index: int, record: dict[str, Any]) -> None:
        """Record one completed grid point."""
        line = json.dumps({"hash": self._hash, "index": index, "record": record}, allow_nan=True)
        with open(self._path, "a") as f:
            f.write(line + "\n")
            f.flush()

    def clear(self) -> None:
        """Drop the whole log."""
        self._path.unlink(missing_ok=True)

    def stats(self) -> dict[str, Any]:
        """Return checkpoint statistics."""
        entries = self._lines()
        matching = sum(1 for e in entries if e.get("hash") == self._hash)
        size = self._path.stat().st_size if self._path.exists() else 0
        return {
            "entries": matching,
            "stale_entries": len(entries) - matching,
            "path": str(self._path),
            "size_bytes": size,
        }

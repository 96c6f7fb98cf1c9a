"""Embedded persistence for registrations, contexts, priorities, policies,
and experiment records.

One sqlite file behind a narrow put/get/list/purge interface; a
server-backed implementation could replace it without touching callers.
Writes are serialized through an internal lock (single writer, many
readers) and committed per call, so every acknowledged write survives an
abrupt process death.

Experiment records declare references (context snapshot, policy, scenario);
purge never removes a record that a retained experiment still references.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from dataclasses import dataclass, field
from typing import Mapping

KIND_REGISTRATION = "registration"
KIND_CONTEXT = "context"
KIND_PRIORITY = "priority"
KIND_POLICY = "policy"
KIND_EXPERIMENT = "experiment"


class NotFoundError(KeyError):
    pass


class ConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class Registration:
    entity_id: str
    kind: str  # FSS | MBS | SU
    scenario_id: str
    latitude_deg: float
    longitude_deg: float
    parameters: Mapping[str, object] = field(default_factory=dict)
    registered_at: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("FSS", "MBS", "SU"):
            raise ConstraintError(f"unknown registration kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "entity_id": self.entity_id,
            "kind": self.kind,
            "scenario_id": self.scenario_id,
            "latitude_deg": self.latitude_deg,
            "longitude_deg": self.longitude_deg,
            "parameters": dict(self.parameters),
            "registered_at": self.registered_at,
        }


@dataclass(frozen=True)
class RetentionPolicy:
    """Max age in seconds per record kind; None keeps records forever."""

    max_age_s: Mapping[str, float | None] = field(
        default_factory=lambda: {
            KIND_POLICY: None,
            KIND_CONTEXT: 90 * 24 * 3600.0,
            KIND_PRIORITY: 90 * 24 * 3600.0,
            KIND_REGISTRATION: None,
            KIND_EXPERIMENT: None,
        }
    )


_SCHEMA = """
CREATE TABLE IF NOT EXISTS records (
    kind TEXT NOT NULL,
    id TEXT NOT NULL,
    created_at REAL NOT NULL,
    payload TEXT NOT NULL,
    PRIMARY KEY (kind, id)
);
CREATE TABLE IF NOT EXISTS refs (
    kind TEXT NOT NULL,
    id TEXT NOT NULL,
    ref_kind TEXT NOT NULL,
    ref_id TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS refs_target ON refs (ref_kind, ref_id);
"""


class Store:
    def __init__(self, path: str = ":memory:") -> None:
        self.path = path
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(path, check_same_thread=False)
        with self._lock:
            self._conn.executescript(_SCHEMA)
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def put(
        self,
        kind: str,
        entity_id: str,
        payload: Mapping[str, object],
        created_at: float,
        refs: Mapping[str, str] | None = None,
    ) -> None:
        blob = json.dumps(dict(payload), sort_keys=True)
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO records (kind, id, created_at, payload) "
                "VALUES (?, ?, ?, ?)",
                (kind, entity_id, created_at, blob),
            )
            self._conn.execute(
                "DELETE FROM refs WHERE kind = ? AND id = ?", (kind, entity_id)
            )
            for ref_kind, ref_id in (refs or {}).items():
                self._conn.execute(
                    "INSERT INTO refs (kind, id, ref_kind, ref_id) VALUES (?, ?, ?, ?)",
                    (kind, entity_id, ref_kind, ref_id),
                )
            self._conn.commit()

    def get(self, kind: str, entity_id: str) -> dict:
        with self._lock:
            row = self._conn.execute(
                "SELECT payload FROM records WHERE kind = ? AND id = ?",
                (kind, entity_id),
            ).fetchone()
        if row is None:
            raise NotFoundError(f"{kind}/{entity_id} not found")
        return json.loads(row[0])

    def list(
        self,
        kind: str,
        since: float | None = None,
        until: float | None = None,
    ) -> list[tuple[str, dict]]:
        query = "SELECT id, payload FROM records WHERE kind = ?"
        args: list[object] = [kind]
        if since is not None:
            query += " AND created_at >= ?"
            args.append(since)
        if until is not None:
            query += " AND created_at <= ?"
            args.append(until)
        query += " ORDER BY created_at, id"
        with self._lock:
            rows = self._conn.execute(query, args).fetchall()
        return [(r[0], json.loads(r[1])) for r in rows]

    def register(self, registration: Registration) -> None:
        """Registration insert with the one-receiver-per-scenario constraint."""
        if registration.kind == "FSS":
            with self._lock:
                rows = self._conn.execute(
                    "SELECT id, payload FROM records WHERE kind = ?",
                    (KIND_REGISTRATION,),
                ).fetchall()
            for entity_id, blob in rows:
                doc = json.loads(blob)
                if (
                    doc.get("kind") == "FSS"
                    and doc.get("scenario_id") == registration.scenario_id
                    and doc.get("entity_id") != registration.entity_id
                ):
                    raise ConstraintError(
                        f"scenario {registration.scenario_id!r} already has a "
                        f"registered FSS ({doc.get('entity_id')!r})"
                    )
        self.put(
            KIND_REGISTRATION,
            f"{registration.kind}:{registration.scenario_id}:{registration.entity_id}",
            registration.to_dict(),
            created_at=registration.registered_at,
        )

    def purge(self, retention: RetentionPolicy, now: float) -> int:
        """Delete expired records; anything referenced by a retained
        experiment is kept regardless of its own age."""
        deleted = 0
        with self._lock:
            horizon = retention.max_age_s.get(KIND_EXPERIMENT)
            if horizon is not None:
                cur = self._conn.execute(
                    "SELECT id FROM records WHERE kind = ? AND created_at < ?",
                    (KIND_EXPERIMENT, now - horizon),
                )
                expired = [r[0] for r in cur.fetchall()]
                for eid in expired:
                    self._conn.execute(
                        "DELETE FROM records WHERE kind = ? AND id = ?",
                        (KIND_EXPERIMENT, eid),
                    )
                    self._conn.execute(
                        "DELETE FROM refs WHERE kind = ? AND id = ?",
                        (KIND_EXPERIMENT, eid),
                    )
                    deleted += 1
            for kind, max_age in retention.max_age_s.items():
                if kind == KIND_EXPERIMENT or max_age is None:
                    continue
                cur = self._conn.execute(
                    "SELECT id FROM records WHERE kind = ? AND created_at < ? "
                    "AND NOT EXISTS (SELECT 1 FROM refs WHERE ref_kind = ? AND ref_id = records.id)",
                    (kind, now - max_age, kind),
                )
                expired = [r[0] for r in cur.fetchall()]
                for rid in expired:
                    self._conn.execute(
                        "DELETE FROM records WHERE kind = ? AND id = ?", (kind, rid)
                    )
                    deleted += 1
            self._conn.commit()
        return deleted

    def export_csv(self, kind: str) -> str:
        """Flat CSV dump of one record kind (union of top-level scalar keys)."""
        entries = self.list(kind)
        keys: list[str] = []
        for _, doc in entries:
            for key, value in doc.items():
                if isinstance(value, (str, int, float, bool, type(None))) and key not in keys:
                    keys.append(key)
        lines = ["id," + ",".join(keys)]
        for entity_id, doc in entries:
            cells = [entity_id]
            for key in keys:
                value = doc.get(key)
                if value is None:
                    cells.append("")
                elif isinstance(value, bool):
                    cells.append("true" if value else "false")
                else:
                    cells.append(str(value))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

# database.py
from __future__ import annotations

import json
import logging
import sqlite3
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

import dateutil.parser

logger = logging.getLogger("SpinorMetrology")


class CheckpointStore:
    """Per-point results of a sweep, keyed by a run key derived from its parameters.

    Rows are JSON; Python's float repr round-trips, so a resumed sweep writes
    the same aggregate file as an uninterrupted one.
    """

    def __init__(self, db_path: str):
        self.db_path = db_path
        self.conn: sqlite3.Connection | None = None
        self.init_db()

    def get_connection(self) -> sqlite3.Connection:
        if self.conn is None:
            self.conn = sqlite3.connect(self.db_path)
            self.conn.row_factory = sqlite3.Row
        return self.conn

    def init_db(self) -> None:
        conn = self.get_connection()
        cursor = conn.cursor()

        cursor.execute(
            """
            CREATE TABLE IF NOT EXISTS runs (
                run_key TEXT PRIMARY KEY,
                command TEXT NOT NULL,
                started_at TIMESTAMP NOT NULL,
                manifest TEXT
            )
            """
        )

        cursor.execute(
            """
            CREATE TABLE IF NOT EXISTS points (
                run_key TEXT NOT NULL,
                idx INTEGER NOT NULL,
                payload TEXT NOT NULL,
                PRIMARY KEY (run_key, idx)
            )
            """
        )

        cursor.execute(
            """
            CREATE TABLE IF NOT EXISTS failures (
                run_key TEXT NOT NULL,
                idx INTEGER NOT NULL,
                error_type TEXT NOT NULL,
                message TEXT,
                failed_at TIMESTAMP NOT NULL,
                PRIMARY KEY (run_key, idx)
            )
            """
        )

        conn.commit()

    @staticmethod
    def _normalize_timestamp(value) -> str:
        if value is None:
            return datetime.now(timezone.utc).isoformat()
        if isinstance(value, datetime):
            dt = value
        else:
            try:
                dt = dateutil.parser.parse(str(value))
            except (ValueError, TypeError, OverflowError):
                logger.warning(f"Could not parse timestamp '{value}', using current time")
                return datetime.now(timezone.utc).isoformat()
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.astimezone(timezone.utc).isoformat()

    def start_run(self, run_key: str, command: str, manifest: Optional[Dict[str, Any]] = None,
                  started_at=None) -> bool:
        """Register a run; returns True when the key already existed (a resume)."""
        conn = self.get_connection()
        cursor = conn.cursor()
        cursor.execute("SELECT started_at FROM runs WHERE run_key = ?", (run_key,))
        row = cursor.fetchone()
        if row:
            logger.info(f"Resuming run {run_key[:12]} started at {self.get_run_started_at(run_key)}")
            return True
        cursor.execute(
            "INSERT INTO runs (run_key, command, started_at, manifest) VALUES (?, ?, ?, ?)",
            (run_key, command, self._normalize_timestamp(started_at), json.dumps(manifest or {})),
        )
        conn.commit()
        return False

    def get_run_started_at(self, run_key: str) -> Optional[datetime]:
        cursor = self.get_connection().cursor()
        cursor.execute("SELECT started_at FROM runs WHERE run_key = ?", (run_key,))
        row = cursor.fetchone()
        if not row:
            return None
        try:
            return dateutil.parser.parse(row["started_at"])
        except (ValueError, TypeError, OverflowError):
            return None

    def completed_indices(self, run_key: str) -> set[int]:
        cursor = self.get_connection().cursor()
        cursor.execute("SELECT idx FROM points WHERE run_key = ?", (run_key,))
        return {row["idx"] for row in cursor.fetchall()}

    def save_point(self, run_key: str, idx: int, payload: Dict[str, Any]) -> None:
        conn = self.get_connection()
        conn.execute(
            "INSERT OR REPLACE INTO points (run_key, idx, payload) VALUES (?, ?, ?)",
            (run_key, int(idx), json.dumps(payload)),
        )
        conn.execute("DELETE FROM failures WHERE run_key = ? AND idx = ?", (run_key, int(idx)))
        conn.commit()

    def record_failure(self, run_key: str, idx: int, error_type: str, message: str = "",
                       failed_at=None) -> None:
        conn = self.get_connection()
        conn.execute(
            "INSERT OR REPLACE INTO failures (run_key, idx, error_type, message, failed_at) VALUES (?, ?, ?, ?, ?)",
            (run_key, int(idx), error_type, message, self._normalize_timestamp(failed_at)),
        )
        conn.commit()

    def failed_points(self, run_key: str) -> Dict[int, Dict[str, str]]:
        cursor = self.get_connection().cursor()
        cursor.execute(
            "SELECT idx, error_type, message, failed_at FROM failures WHERE run_key = ? ORDER BY idx", (run_key,)
        )
        return {
            row["idx"]: {"error_type": row["error_type"], "message": row["message"], "failed_at": row["failed_at"]}
            for row in cursor.fetchall()
        }

    def load_points(self, run_key: str) -> List[Dict[str, Any]]:
        """Stored rows in index order; unreadable rows are skipped with a warning."""
        cursor = self.get_connection().cursor()
        cursor.execute("SELECT idx, payload FROM points WHERE run_key = ? ORDER BY idx", (run_key,))
        rows: List[Dict[str, Any]] = []
        for row in cursor.fetchall():
            try:
                rows.append(json.loads(row["payload"]))
            except (json.JSONDecodeError, TypeError):
                logger.warning(f"Dropping unreadable checkpoint row {row['idx']} of run {run_key[:12]}")
        return rows

    def close(self) -> None:
        if self.conn:
            self.conn.close()
            self.conn = None

import hashlib
import json
import logging
import sqlite3
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from typing import List, Optional

from supportlab.errors import SupportLabError

logger = logging.getLogger(__name__)


class StoreError(SupportLabError):
    """The experiment store could not be read or written."""


@dataclass
class RunRecord:
    id: str
    command: str
    sha256: str
    config: dict
    status: str  # running, done, failed
    created_at: datetime
    completed_at: Optional[datetime] = None
    report_csv: Optional[str] = None
    report_json: Optional[str] = None
    wall_time: Optional[float] = None
    error: Optional[str] = None
    metadata: dict = field(default_factory=dict)


def run_key(command: str, config: dict) -> str:
    """SHA-256 of the canonical JSON of (command, config)."""
    payload = json.dumps({"command": command, "config": config}, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def new_run(command: str, config: dict) -> RunRecord:
    return RunRecord(id=str(uuid.uuid4()), command=command, sha256=run_key(command, config), config=config,
                     status="running", created_at=datetime.now())


class ExperimentStore:
    def __init__(self, db_path: str = ":memory:"):
        self.db_path = db_path
        try:
            self._init_db()
            logger.info("Experiment store initialized", extra={"db_path": db_path})
        except sqlite3.Error as e:
            logger.error("Failed to initialize experiment store", extra={
                "db_path": db_path,
                "error": str(e),
                "error_type": type(e).__name__
            })
            raise StoreError(f"Experiment store initialization failed: {e}") from e

    def _connect(self) -> sqlite3.Connection:
        return sqlite3.connect(self.db_path)

    def _init_db(self):
        # A fresh in-memory database per connection would lose the table.
        if self.db_path == ":memory:":
            self._memory = sqlite3.connect(":memory:")
            self._connect = lambda: self._memory
        with self._connect() as conn:
            conn.execute('''
                CREATE TABLE IF NOT EXISTS runs (
                    id TEXT PRIMARY KEY,
                    command TEXT NOT NULL,
                    sha256 TEXT NOT NULL,
                    config TEXT NOT NULL,
                    status TEXT NOT NULL,
                    created_at TEXT NOT NULL,
                    completed_at TEXT,
                    report_csv TEXT,
                    report_json TEXT,
                    wall_time REAL,
                    error TEXT,
                    metadata TEXT
                )
            ''')
            conn.execute('CREATE INDEX IF NOT EXISTS idx_runs_sha256 ON runs(sha256)')

    def save_run(self, record: RunRecord):
        logger.debug("Saving run record", extra={"run_id": record.id, "status": record.status})
        try:
            with self._connect() as conn:
                conn.execute('''
                    INSERT OR REPLACE INTO runs
                    (id, command, sha256, config, status, created_at, completed_at, report_csv, report_json,
                     wall_time, error, metadata)
                    VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                ''', (
                    record.id,
                    record.command,
                    record.sha256,
                    json.dumps(record.config, sort_keys=True, default=str),
                    record.status,
                    record.created_at.isoformat(),
                    record.completed_at.isoformat() if record.completed_at else None,
                    record.report_csv,
                    record.report_json,
                    record.wall_time,
                    record.error,
                    json.dumps(record.metadata, sort_keys=True, default=str),
                ))
            logger.info("Run record saved", extra={"run_id": record.id, "status": record.status})
        except sqlite3.Error as e:
            logger.error("Database error saving run", extra={
                "run_id": record.id,
                "error": str(e),
                "error_type": type(e).__name__,
                "db_path": self.db_path
            })
            raise StoreError(f"Failed to save run record: {e}") from e

    @staticmethod
    def _from_row(row) -> RunRecord:
        return RunRecord(
            id=row[0],
            command=row[1],
            sha256=row[2],
            config=json.loads(row[3]),
            status=row[4],
            created_at=datetime.fromisoformat(row[5]),
            completed_at=datetime.fromisoformat(row[6]) if row[6] else None,
            report_csv=row[7],
            report_json=row[8],
            wall_time=row[9],
            error=row[10],
            metadata=json.loads(row[11]) if row[11] else {},
        )

    def _query_one(self, sql: str, args: tuple) -> Optional[RunRecord]:
        try:
            with self._connect() as conn:
                row = conn.execute(sql, args).fetchone()
        except sqlite3.Error as e:
            logger.error("Database error retrieving run", extra={"error": str(e), "db_path": self.db_path})
            raise StoreError(f"Failed to retrieve run record: {e}") from e
        if row is None:
            return None
        try:
            return self._from_row(row)
        except (json.JSONDecodeError, ValueError) as e:
            logger.error("Failed to parse run record", extra={"run_id": row[0], "error": str(e)})
            return None

    def get_run(self, run_id: str) -> Optional[RunRecord]:
        return self._query_one('SELECT * FROM runs WHERE id = ?', (run_id,))

    def get_completed_by_sha(self, sha256: str) -> Optional[RunRecord]:
        """Latest finished run for a configuration hash."""
        return self._query_one(
            "SELECT * FROM runs WHERE sha256 = ? AND status = 'done' ORDER BY created_at DESC LIMIT 1", (sha256,))

    def list_runs(self, limit: int = 20) -> List[RunRecord]:
        try:
            with self._connect() as conn:
                rows = conn.execute('SELECT * FROM runs ORDER BY created_at DESC LIMIT ?', (limit,)).fetchall()
        except sqlite3.Error as e:
            raise StoreError(f"Failed to list runs: {e}") from e
        return [self._from_row(row) for row in rows]

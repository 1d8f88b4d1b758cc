import json
import logging
import os
import sqlite3
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np

DB_FILE = "checks.db"

# Configure logging for the Queue module
logger = logging.getLogger("CheckQueue")
logger.setLevel(logging.INFO)


def _plain(value):
    """json.dumps fallback for the numeric types that reach check payloads."""
    if isinstance(value, (Fraction, np.floating)):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return np.asarray(value, dtype=float).tolist()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    raise TypeError(f"not serializable: {type(value).__name__}")


def dumps(payload: Any, **kwargs) -> str:
    return json.dumps(payload, default=_plain, **kwargs)


def get_connection(db_path: str = DB_FILE):
    """Establishes a connection to the SQLite database."""
    try:
        conn = sqlite3.connect(db_path, timeout=10)  # 10s timeout to wait for locks
        conn.row_factory = sqlite3.Row
        return conn
    except Exception as e:
        logger.error(f"Failed to connect to DB: {e}")
        return None


def init_db(db_path: str = DB_FILE):
    """Creates the checks table, dropping anything left from an earlier run."""
    conn = get_connection(db_path)
    if not conn:
        return

    try:
        cursor = conn.cursor()
        cursor.execute("DROP TABLE IF EXISTS checks")
        cursor.execute("""
            CREATE TABLE checks (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                position INTEGER NOT NULL,
                check_id TEXT NOT NULL,
                status TEXT DEFAULT 'pending',
                result TEXT,
                error TEXT,
                elapsed REAL,
                worker TEXT
            )
        """)
        cursor.execute("CREATE INDEX IF NOT EXISTS idx_status_position ON checks(status, position)")
        conn.commit()
        logger.debug(f"Check queue initialized at {db_path}")
    except Exception as e:
        logger.error(f"❌ Check queue initialization failed: {e}")
    finally:
        conn.close()


def add_check(position: int, check_id: str, db_path: str = DB_FILE) -> bool:
    conn = get_connection(db_path)
    if not conn:
        return False

    try:
        conn.execute("INSERT INTO checks (position, check_id, status) VALUES (?, ?, 'pending')",
                     (position, check_id))
        conn.commit()
        logger.debug(f"📥 Check queued: {check_id}")
        return True
    except Exception as e:
        logger.error(f"❌ Failed to queue check {check_id}: {e}")
        return False
    finally:
        conn.close()


def get_next_check(worker: str, db_path: str = DB_FILE) -> Optional[Dict[str, Any]]:
    """
    Claims the lowest pending position atomically.
    Returns the row as a dict or None when the queue is drained.
    """
    conn = get_connection(db_path)
    if not conn:
        return None

    try:
        conn.execute("BEGIN IMMEDIATE")
        cursor = conn.cursor()
        cursor.execute("""
            SELECT id, position, check_id
            FROM checks
            WHERE status = 'pending'
            ORDER BY position ASC
            LIMIT 1
        """)
        row = cursor.fetchone()

        if row:
            cursor.execute("UPDATE checks SET status = 'running', worker = ? WHERE id = ?", (worker, row["id"]))
            conn.commit()
            return {"id": row["id"], "position": row["position"], "check_id": row["check_id"]}
        conn.rollback()
        return None

    except Exception as e:
        logger.error(f"❌ Error claiming next check: {e}")
        try:
            conn.rollback()
        except sqlite3.Error:
            pass
        return None
    finally:
        conn.close()


def complete_check(row_id: int, result: Dict[str, Any], elapsed: float, db_path: str = DB_FILE):
    conn = get_connection(db_path)
    if not conn:
        return

    try:
        conn.execute("UPDATE checks SET status = 'done', result = ?, elapsed = ? WHERE id = ?",
                     (dumps(result, sort_keys=True), elapsed, row_id))
        conn.commit()
    except Exception as e:
        logger.error(f"❌ Failed to store result of check {row_id}: {e}")
    finally:
        conn.close()


def fail_check(row_id: int, error_msg: str, elapsed: float, db_path: str = DB_FILE):
    """A check that raised; the runs are deterministic so there is no retry."""
    conn = get_connection(db_path)
    if not conn:
        return

    try:
        conn.execute("UPDATE checks SET status = 'error', error = ?, elapsed = ? WHERE id = ?",
                     (error_msg, elapsed, row_id))
        conn.commit()
        logger.error(f"⛔ Check {row_id} raised: {error_msg.splitlines()[-1] if error_msg else ''}")
    except Exception as e:
        logger.error(f"❌ Failed to mark check {row_id} as errored: {e}")
    finally:
        conn.close()


def collect_results(db_path: str = DB_FILE) -> List[Dict[str, Any]]:
    """Every row in queue order; results decoded."""
    conn = get_connection(db_path)
    if not conn:
        return []

    try:
        rows = conn.execute("SELECT * FROM checks ORDER BY position ASC").fetchall()
        out = []
        for row in rows:
            out.append({
                "position": row["position"],
                "check_id": row["check_id"],
                "status": row["status"],
                "result": json.loads(row["result"]) if row["result"] else None,
                "error": row["error"],
                "elapsed": row["elapsed"] or 0.0,
            })
        return out
    except Exception as e:
        logger.error(f"❌ Failed to read results: {e}")
        return []
    finally:
        conn.close()


def pending_count(db_path: str = DB_FILE) -> int:
    conn = get_connection(db_path)
    if not conn:
        return 0
    try:
        row = conn.execute("SELECT COUNT(*) AS n FROM checks WHERE status IN ('pending', 'running')").fetchone()
        return int(row["n"])
    finally:
        conn.close()


def remove_db(db_path: str):
    if os.path.exists(db_path):
        os.remove(db_path)

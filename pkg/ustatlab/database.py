import logging
import sqlite3
from contextlib import contextmanager

from .errors import ConfigError
from .harness import CSV_FIELDS, ExperimentResult

logger = logging.getLogger(__name__)

# --- Ledger Setup and Management ---

DB_FILE = "ustatlab_runs.db"


def connect_to_db(db_path=DB_FILE):
    """Establishes a connection to the SQLite ledger."""
    try:
        conn = sqlite3.connect(db_path)
    except sqlite3.Error as e:
        raise ConfigError(f"unwritable path {db_path}: {e}") from e
    conn.row_factory = sqlite3.Row  # Allows accessing columns by name
    return conn


@contextmanager
def get_db_connection(db_path=DB_FILE):
    """
    A context manager for handling ledger connections.
    It ensures the connection is automatically closed.
    """
    conn = connect_to_db(db_path)
    try:
        yield conn
    finally:
        conn.close()


def create_tables(db_path=DB_FILE):
    """Creates the results table if it doesn't already exist."""
    with get_db_connection(db_path) as conn:
        cursor = conn.cursor()
        cursor.execute("""
        CREATE TABLE IF NOT EXISTS results (
            config_hash TEXT NOT NULL,
            seed INTEGER NOT NULL,
            n INTEGER NOT NULL,
            R INTEGER NOT NULL,
            d2_full REAL,
            d2_linear REAL,
            rms_remainder REAL,
            mean_square REAL,
            sigma_sq_used REAL,
            sigma_source TEXT,
            applicable INTEGER,
            degeneracy_order INTEGER,
            wall_ms INTEGER,
            kernel TEXT,
            process TEXT,
            recorded_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
            PRIMARY KEY (config_hash, n)
        );
        """)
        conn.commit()


def record_result(result: ExperimentResult, db_path=DB_FILE) -> int:
    """Stores every row of a result, replacing earlier rows with the same (config_hash, n)."""
    create_tables(db_path)
    columns = CSV_FIELDS + ("kernel", "process")
    placeholders = ", ".join(["?"] * len(columns))
    rows = [
        tuple(row.csv_values().values()) + (result.config.kernel, result.config.process)
        for row in result.rows
    ]
    with get_db_connection(db_path) as conn:
        try:
            conn.executemany(
                f"INSERT OR REPLACE INTO results ({', '.join(columns)}) VALUES ({placeholders})", rows)
            conn.commit()
        except sqlite3.Error as e:
            conn.rollback()
            raise ConfigError(f"Ledger error while recording {result.config_hash}: {e}") from e
    logger.info("Recorded %d rows for %s in %s", len(rows), result.config_hash, db_path)
    return len(rows)


def fetch_rows(db_path=DB_FILE, config_hash=None, kernel=None) -> list:
    """Returns stored rows as dicts, optionally filtered by config hash or kernel name."""
    create_tables(db_path)
    query = "SELECT * FROM results"
    clauses, params = [], []
    if config_hash:
        clauses.append("config_hash = ?")
        params.append(config_hash)
    if kernel:
        clauses.append("kernel = ?")
        params.append(kernel)
    if clauses:
        query += " WHERE " + " AND ".join(clauses)
    query += " ORDER BY config_hash, n"
    with get_db_connection(db_path) as conn:
        cursor = conn.cursor()
        cursor.execute(query, params)
        rows = [dict(row) for row in cursor.fetchall()]
    for row in rows:
        row["applicable"] = bool(row["applicable"])
    return rows

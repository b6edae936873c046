import logging
import sqlite3
from pathlib import Path

from flask import current_app, g

logger = logging.getLogger(__name__)

DATABASE = 'results/ledger.db'

RUN_FIELDS = ('case_study', 'config_id', 'run_index', 'seed', 'status', 'error',
              'front_size', 'evaluations', 'started_at', 'finished_at')


def get_db_connection(database=None):
    """Get database connection"""
    path = Path(database or DATABASE)
    path.parent.mkdir(parents=True, exist_ok=True)
    conn = sqlite3.connect(str(path))
    conn.row_factory = sqlite3.Row
    return conn


def init_database(database=None):
    """Create the run ledger table"""
    conn = get_db_connection(database)
    try:
        conn.execute('''
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                case_study TEXT NOT NULL,
                config_id TEXT NOT NULL,
                run_index INTEGER NOT NULL,
                seed INTEGER,
                status TEXT NOT NULL,
                error TEXT,
                front_size INTEGER DEFAULT 0,
                evaluations INTEGER DEFAULT 0,
                started_at TIMESTAMP,
                finished_at TIMESTAMP,
                recorded_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        ''')
        conn.commit()
        logger.debug("run ledger ready at %s", database or DATABASE)
    finally:
        conn.close()


def get_db():
    """Connection bound to the current request"""
    if 'db' not in g:
        g.db = get_db_connection(current_app.config['DATABASE'])
    return g.db


def close_db(e=None):
    """Close database connection"""
    db = g.pop('db', None)
    if db is not None:
        db.close()


def init_app(app):
    """Initialize database for Flask app"""
    app.teardown_appcontext(close_db)
    init_database(app.config['DATABASE'])


def record_run(row, database=None):
    """Insert one run outcome; returns its ledger id"""
    conn = get_db_connection(database)
    try:
        cursor = conn.execute(
            f"INSERT INTO runs ({', '.join(RUN_FIELDS)}) VALUES ({', '.join('?' for _ in RUN_FIELDS)})",
            tuple(row.get(name) for name in RUN_FIELDS),
        )
        conn.commit()
        return cursor.lastrowid
    finally:
        conn.close()


def list_runs(conn, case_study=None, status=None):
    """Ledger rows, newest first, optionally filtered"""
    clauses, params = [], []
    if case_study is not None:
        clauses.append('case_study = ?')
        params.append(case_study)
    if status is not None:
        clauses.append('status = ?')
        params.append(status)
    where = f"WHERE {' AND '.join(clauses)}" if clauses else ''
    rows = conn.execute(f'SELECT * FROM runs {where} ORDER BY id DESC', params).fetchall()
    return [dict(row) for row in rows]


def run_summary(conn):
    """Run counts per case study and configuration"""
    rows = conn.execute('''
        SELECT case_study, config_id,
               COUNT(*) AS runs,
               SUM(CASE WHEN status = 'ok' THEN 1 ELSE 0 END) AS ok,
               SUM(CASE WHEN status != 'ok' THEN 1 ELSE 0 END) AS failed,
               MAX(finished_at) AS last_finished
        FROM runs
        GROUP BY case_study, config_id
        ORDER BY case_study, config_id
    ''').fetchall()
    return [dict(row) for row in rows]

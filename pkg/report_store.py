
import sqlite3
import json
import logging
from typing import Dict, List, Any, Optional

logger = logging.getLogger(__name__)

MAX_STORED_REPORTS = 500


class ReportStore:
    def __init__(self, db_path: str = 'valkit_reports.db'):
        self.db_path = db_path
        self.init_tables()

    def get_connection(self):
        conn = sqlite3.connect(self.db_path, timeout=30.0)
        conn.execute('PRAGMA foreign_keys = ON')
        return conn

    def init_tables(self):
        conn = self.get_connection()
        cursor = conn.cursor()

        # One row per recorded command run
        cursor.execute('''
            CREATE TABLE IF NOT EXISTS reports (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                command TEXT NOT NULL,
                args TEXT NOT NULL,
                result TEXT NOT NULL,
                seed INTEGER,
                success INTEGER NOT NULL DEFAULT 1,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        ''')

        cursor.execute('''
            CREATE INDEX IF NOT EXISTS idx_reports_command ON reports (command, id)
        ''')

        conn.commit()
        conn.close()

    def save_report(self, command: str, args: Dict[str, Any], result: Dict[str, Any],
                    seed: Optional[int] = None) -> int:
        """Store one run; returns the new row id"""
        conn = self.get_connection()
        cursor = conn.cursor()

        cursor.execute('''
            INSERT INTO reports (command, args, result, seed, success)
            VALUES (?, ?, ?, ?, ?)
        ''', (command, json.dumps(args, default=str), json.dumps(result, default=str), seed,
              1 if result.get('success', True) else 0))
        report_id = cursor.lastrowid

        # Keep only the newest reports to prevent unbounded growth
        cursor.execute('''
            DELETE FROM reports
            WHERE id NOT IN (
                SELECT id FROM reports
                ORDER BY id DESC
                LIMIT ?
            )
        ''', (MAX_STORED_REPORTS,))

        conn.commit()
        conn.close()
        logger.info(f"✅ Recorded {command} report #{report_id}")
        return report_id

    def _rows(self, query: str, params) -> List[Dict[str, Any]]:
        conn = self.get_connection()
        cursor = conn.cursor()
        cursor.execute(query, params)

        reports = []
        for report_id, command, args_json, result_json, seed, success, created_at in cursor.fetchall():
            try:
                args = json.loads(args_json)
                result = json.loads(result_json)
            except json.JSONDecodeError:
                logger.warning(f"⚠️ Skipping unreadable report #{report_id}")
                continue
            reports.append({
                'id': report_id,
                'command': command,
                'args': args,
                'result': result,
                'seed': seed,
                'success': bool(success),
                'created_at': created_at
            })

        conn.close()
        return reports

    def get_recent_reports(self, limit: int = 10) -> List[Dict[str, Any]]:
        """Newest first"""
        return self._rows('''
            SELECT id, command, args, result, seed, success, created_at
            FROM reports
            ORDER BY id DESC
            LIMIT ?
        ''', (limit,))

    def get_reports_for_command(self, command: str, limit: int = 10) -> List[Dict[str, Any]]:
        return self._rows('''
            SELECT id, command, args, result, seed, success, created_at
            FROM reports
            WHERE command = ?
            ORDER BY id DESC
            LIMIT ?
        ''', (command, limit))

    def get_last_report(self, command: str) -> Optional[Dict[str, Any]]:
        rows = self.get_reports_for_command(command, 1)
        return rows[0] if rows else None

#!/usr/bin/env python3
"""Tests for the sqlite report ledger"""

import sys
sys.path.append('.')

import pytest

import report_store
from report_store import ReportStore


@pytest.fixture
def store(tmp_path):
    return ReportStore(str(tmp_path / "reports.db"))


def test_save_and_fetch(store):
    first = store.save_report('galois', {'group': 'lex(Z)'}, {'success': True, 'descriptor': 'x'}, seed=0)
    second = store.save_report('cut', {'action': 'gap'}, {'success': False, 'error': 'bad'})
    assert second > first

    recent = store.get_recent_reports()
    assert [r['id'] for r in recent] == [second, first]
    assert recent[0]['success'] is False
    assert recent[1]['args'] == {'group': 'lex(Z)'}
    assert recent[1]['seed'] == 0

    assert [r['command'] for r in store.get_reports_for_command('galois')] == ['galois']
    assert store.get_last_report('cut')['result']['error'] == 'bad'
    assert store.get_last_report('qe') is None


def test_prunes_old_reports(store, monkeypatch):
    monkeypatch.setattr(report_store, 'MAX_STORED_REPORTS', 3)
    ids = [store.save_report('oag', {'i': i}, {'success': True}) for i in range(5)]
    rows = store.get_recent_reports(limit=10)
    assert [r['id'] for r in rows] == ids[:1:-1]


def test_unreadable_rows_are_skipped(store):
    store.save_report('oag', {}, {'success': True})
    conn = store.get_connection()
    conn.execute("INSERT INTO reports (command, args, result) VALUES ('oag', '{', '{}')")
    conn.commit()
    conn.close()
    assert len(store.get_recent_reports()) == 1


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))

#!/usr/bin/env python3
"""Tests for the JSON API in app.py"""

import sys
sys.path.append('.')

import pytest

from app import app


@pytest.fixture
def client(tmp_path, monkeypatch):
    monkeypatch.setenv("VALKIT_DB_PATH", str(tmp_path / "reports.db"))
    app.config['TESTING'] = True
    with app.test_client() as client:
        yield client


def test_health(client):
    response = client.get('/health')
    assert response.status_code == 200
    assert 'qe' in response.get_json()['commands']


def test_qe_endpoint(client):
    response = client.post('/api/qe', json={'group': 'lex(Q)', 'formula': 'exists x. y < x /\\ x < z'})
    assert response.status_code == 200
    body = response.get_json()
    assert body['success'] and body['result'] == 'y < z'


def test_hensel_endpoint(client):
    response = client.post('/api/hensel', json={'action': 'lift', 'field': 'Q_5', 'poly': 'X^2 - 6',
                                                'start': '1', 'prec': 4})
    assert response.get_json()['approximation'] == '73/28'


def test_failures_return_400(client):
    response = client.post('/api/oag', json={'action': 'info', 'group': 'lex(Z)', 'prime': 4})
    assert response.status_code == 400
    assert not response.get_json()['success']

    response = client.post('/api/cut', json={'action': 'gap', 'field': 'Q((t^lex(Z)))'})
    assert response.status_code == 400
    assert response.get_json()['usage']

    response = client.post('/api/unknown', json={})
    assert response.status_code == 400


def test_record_then_history(client):
    response = client.post('/api/galois', json={'group': 'lex(Q)', 'record': True})
    assert response.get_json()['report_id'] == 1
    history = client.get('/api/history?command=galois').get_json()
    assert history['count'] == 1
    assert history['reports'][0]['result']['descriptor'] == 'ℤ/2ℤ'


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))

import pytest

from decision_stream.config import settings
from decision_stream.database import DatabaseManager, get_db_manager


@pytest.fixture
def db(tmp_path):
    return DatabaseManager(f"sqlite:///{tmp_path / 'runs.db'}")


def run_data(command, error=10.0):
    return {
        'command': command,
        'task': 'classification',
        'p_lim': 0.05,
        'test_family': 'nonparametric',
        'split_mode': 'exact',
        'merge_enabled': True,
        'seed': 0,
        'metric': 'accuracy',
        'error': error,
        'depth': 3,
        'node_count': 9,
    }


def test_record_and_filter_runs(db):
    first = db.record_run(run_data('train'))
    second = db.record_run(run_data('tune', error=5.0))
    assert second > first

    runs = db.get_runs()
    assert [run.command for run in runs] == ['train', 'tune']
    assert runs[0].created_at is not None
    assert [run.error for run in db.get_runs('tune')] == [5.0]
    assert len(db.get_runs(limit=1)) == 1


def test_sweep_points_belong_to_a_run(db):
    run_id = db.record_run(run_data('tune'))
    db.record_sweep(run_id, [(0.01, 20.0), (0.05, 12.5)])
    other = db.record_run(run_data('tune'))

    points = db.get_sweep(run_id)
    assert [(p.p_lim, p.error) for p in points] == [(0.01, 20.0), (0.05, 12.5)]
    assert db.get_sweep(other) == []


def test_registry_disabled_without_url(monkeypatch):
    monkeypatch.setattr(settings, "DS_DB_URL", None)
    assert get_db_manager() is None


def test_registry_follows_configured_url(monkeypatch, tmp_path):
    url = f"sqlite:///{tmp_path / 'a.db'}"
    monkeypatch.setattr(settings, "DS_DB_URL", url)
    manager = get_db_manager()
    assert manager is get_db_manager()
    monkeypatch.setattr(settings, "DS_DB_URL", f"sqlite:///{tmp_path / 'b.db'}")
    assert get_db_manager() is not manager

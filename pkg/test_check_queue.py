from fractions import Fraction

import numpy as np
import pytest

import check_queue
import worker


@pytest.fixture
def db(tmp_path):
    path = str(tmp_path / "checks.db")
    check_queue.init_db(path)
    return path


def test_claims_follow_queue_position(db):
    for position, check_id in [(2, "c"), (0, "a"), (1, "b")]:
        assert check_queue.add_check(position, check_id, db)
    claimed = [check_queue.get_next_check("w", db)["check_id"] for _ in range(3)]
    assert claimed == ["a", "b", "c"]
    assert check_queue.get_next_check("w", db) is None
    assert check_queue.pending_count(db) == 3


def test_results_and_errors_are_collected(db):
    check_queue.add_check(0, "space.decomposition", db)
    check_queue.add_check(1, "axioms.process", db)
    first = check_queue.get_next_check("w", db)
    second = check_queue.get_next_check("w", db)
    check_queue.complete_check(first["id"], {"status": "pass", "value": Fraction(1, 3)}, 0.5, db)
    check_queue.fail_check(second["id"], "Traceback\nValueError: boom", 0.1, db)
    rows = check_queue.collect_results(db)
    assert [r["status"] for r in rows] == ["done", "error"]
    assert rows[0]["result"]["value"] == pytest.approx(1 / 3)
    assert rows[1]["error"].endswith("boom")
    assert check_queue.pending_count(db) == 0


def test_dumps_handles_numeric_payloads():
    text = check_queue.dumps({"a": np.float64(0.5), "b": np.arange(2), "c": np.bool_(True), "d": (1, 2)},
                             sort_keys=True)
    assert text == '{"a": 0.5, "b": [0.0, 1.0], "c": true, "d": [1, 2]}'
    with pytest.raises(TypeError):
        check_queue.dumps({"x": object()})


def test_init_db_starts_from_an_empty_queue(db):
    check_queue.add_check(0, "stale", db)
    check_queue.init_db(db)
    assert check_queue.collect_results(db) == []


def test_thread_cap_honours_the_environment(monkeypatch):
    monkeypatch.setenv(worker.THREADS_ENV, "2")
    assert worker.thread_cap(8) == 2
    assert worker.thread_cap(1) == 1
    monkeypatch.setenv(worker.THREADS_ENV, "lots")
    assert worker.thread_cap(3) == 3
    monkeypatch.delenv(worker.THREADS_ENV)
    assert worker.thread_cap(5) == 5


@pytest.mark.parametrize("threads", [1, 3])
def test_workers_drain_the_queue(db, threads):
    ids = ["one", "two", "three", "four"]
    for position, check_id in enumerate(ids):
        check_queue.add_check(position, check_id, db)

    def runner(check_id):
        if check_id == "three":
            raise RuntimeError("three is unlucky")
        return {"status": "pass", "id": check_id}

    worker.run_workers(db, runner, threads)
    rows = check_queue.collect_results(db)
    assert [r["check_id"] for r in rows] == ids
    assert [r["status"] for r in rows] == ["done", "done", "error", "done"]
    assert "three is unlucky" in rows[2]["error"]
    assert rows[3]["result"] == {"id": "four", "status": "pass"}

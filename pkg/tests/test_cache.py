import pytest
import unittest.mock as mock
import datetime, sqlite3, threading

import predim.cache as cache
import predim.utils as utils

REQUEST = {"command": "delta", "inputs": [{"name": "m.pm", "sha256": "00"}], "options": {"set": "a"}}
KEY = utils.request_key(REQUEST)

@pytest.fixture()
def cache_test():
    executor = mock.MagicMock()
    concrete_cache = mock.MagicMock()
    c = cache.Cache(executor, concrete_cache)
    report_expected = {"command": "delta", "result": {"delta": 1}}
    executor.fetch.return_value = report_expected
    concrete_cache.get_from_cache.return_value = None
    return c, executor, concrete_cache, report_expected

def _as_bytes(report):
    return utils.canonical_json(report).encode("utf-8")

def test_Cache_notInCache_requests(cache_test):
    c, executor, ccache, _ = cache_test
    c.fetch(REQUEST)
    executor.fetch.assert_called_with(REQUEST)
    ccache.get_from_cache.assert_called_with(KEY)

def test_Cache_notInCache_places(cache_test):
    c, executor, ccache, expected = cache_test
    report = c.fetch(REQUEST)
    assert report == expected
    ccache.place_in_cache.assert_called_with(KEY, "delta", _as_bytes(expected))

def test_Cache_doesNotPlaceNone(cache_test):
    c, executor, ccache, _ = cache_test
    executor.fetch.return_value = None
    assert c.fetch(REQUEST) is None
    assert ccache.place_in_cache.call_count == 0

def test_Cache_inCacheDoesntRequest(cache_test):
    c, executor, ccache, expected = cache_test
    ccache.get_from_cache.return_value = (_as_bytes(expected), None)
    report = c.fetch(REQUEST)
    assert report == expected
    assert executor.fetch.call_count == 0

def test_Cache_withTimeout(cache_test):
    c, executor, ccache, expected = cache_test
    c.expire_time = datetime.timedelta(days=1)
    now = datetime.datetime(2016,4,10,12,30)
    ccache.get_from_cache.return_value = (_as_bytes(expected), now)

    with mock.patch("datetime.datetime") as datetime_mock:
        datetime_mock.now.return_value = now
        report = c.fetch(REQUEST)
        assert executor.fetch.call_count == 0
        assert report == expected

def test_Cache_withTimeout_doesExpire(cache_test):
    c, executor, ccache, expected = cache_test
    c.expire_time = datetime.timedelta(days=1)
    now = datetime.datetime(2016,4,10,12,30)
    ccache.get_from_cache.return_value = (b"{}", now)

    with mock.patch("datetime.datetime") as datetime_mock:
        datetime_mock.now.return_value = now + datetime.timedelta(days=1, minutes=1)
        report = c.fetch(REQUEST)
        executor.fetch.assert_called_with(REQUEST)
        ccache.place_in_cache.assert_called_with(KEY, "delta", _as_bytes(expected))
        assert report == expected


@pytest.fixture
def db_filename(tmp_path):
    return str(tmp_path / "test.db")

@pytest.fixture
def db_cache(db_filename):
    c = cache.SQLiteCache(db_filename)
    try:
        yield c
    finally:
        c.close()

def test_database_exists(db_filename):
    assert cache.database_exists(db_filename) == False

    sqlite3.connect(db_filename).close()
    assert cache.database_exists(db_filename) == False

    conn = sqlite3.connect(db_filename)
    conn.execute("CREATE table reports (name)")
    conn.execute("CREATE table other (thing)")
    conn.close()
    assert cache.database_exists(db_filename) == True

def test_database_created(db_filename, db_cache):
    assert cache.database_exists(db_filename)

def test_sqcache_emplace(db_cache):
    assert db_cache.get_from_cache("spam") is None

    now = datetime.datetime(2016,4,10,12,30)
    strftime = datetime.datetime.strftime
    strptime = datetime.datetime.strptime
    with mock.patch("datetime.datetime") as datetime_mock:
        datetime_mock.now.return_value = now
        datetime_mock.strftime = strftime
        datetime_mock.strptime = strptime
        db_cache.place_in_cache("spam", "delta", b"eggs")
        db_cache.place_in_cache("spam1", "closure", b"eggs1")
        assert db_cache.get_from_cache("spam") == (b"eggs", now)
        assert db_cache.get_from_cache("spam1") == (b"eggs1", now)

def test_sqcache_query(db_cache):
    assert db_cache.query() == []

    now = datetime.datetime.now()
    db_cache.place_in_cache("spam", "delta", b"eggs")

    q = db_cache.query()
    assert len(q) == 1
    assert q[0][:2] == ("spam", "delta")
    assert abs((q[0][2] - now).total_seconds()) < 2

    db_cache.place_in_cache("spam1", "closure", b"eggs")
    q = db_cache.query()
    assert len(q) == 2
    assert set(key for key, _, _ in q) == {"spam", "spam1"}

def test_sqcache_update(db_cache):
    db_cache.place_in_cache("spam", "delta", b"eggs")
    db_cache.place_in_cache("spam", "delta", b"ham")
    q = db_cache.query()
    assert len(q) == 1
    assert q[0][0] == "spam"
    assert db_cache.get_from_cache("spam")[0] == b"ham"

def test_sqcache_remove(db_cache):
    db_cache.place_in_cache("spam", "delta", b"eggs")
    db_cache.place_in_cache("spam1", "delta", b"eggs")
    assert len(db_cache.query()) == 2

    db_cache.remove("spam")
    q = db_cache.query()
    assert len(q) == 1
    assert q[0][0] == "spam1"

def test_sqcache_purge(db_cache):
    db_cache.place_in_cache("spam", "delta", b"eggs")
    db_cache.place_in_cache("spam1", "delta", b"eggs")
    assert db_cache.purge(datetime.timedelta(days=1)) == 0
    assert len(db_cache.query()) == 2
    assert db_cache.purge(datetime.timedelta(seconds=-10)) == 2
    assert db_cache.query() == []

def test_sqcache_multi_threading(db_cache):
    db_cache.place_in_cache("spam", "delta", b"eggs")

    barrier = threading.Barrier(2)
    def task():
        db_cache.remove("spam")
        barrier.wait()

    threading.Thread(target=task).start()
    barrier.wait(timeout=5)

    assert len(db_cache.query()) == 0

def test_Cache_with_sqlite(db_cache):
    executor = mock.MagicMock()
    executor.fetch.return_value = {"result": [1, 2]}
    c = cache.Cache(executor, db_cache)
    assert c.fetch(REQUEST) == {"result": [1, 2]}
    assert c.fetch(REQUEST) == {"result": [1, 2]}
    assert executor.fetch.call_count == 1
    assert db_cache.query()[0][:2] == (KEY, "delta")

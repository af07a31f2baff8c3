"""
cache
~~~~~

Provides a base class for caching reports which are associated with a
"request" object.  Concrete implementation using a sqlite database.

A "request" is any JSON-serialisable description of a command run (the
command name, the manifest texts, the flags and the seed).  Its key is the
SHA-256 of the canonical JSON form, see :func:`predim.utils.request_key`.
Reports are stored as the canonical JSON bytes.
"""

import datetime as _datetime
import json as _json
import logging as _logging
import sqlite3 as _sqlite3
import os as _os
from . import utils as _utils

_logger = _logging.getLogger(__name__)


class Executor():
    """A base class for running a request, if the cache does not already hold
    its report.  Any class with this interface will work.
    """

    def fetch(self, request):
        """Run the request, returning a report (a `dict`).  May return `None`
        when the result should not be cached.
        """
        raise NotImplementedError()


class ConcreteCache():
    """Storage for report bytes keyed by request key.  Each row carries the
    command name and the time the report was written.
    """
    def get_from_cache(self, key):
        """Look up a report by request key.

        :return: Pair of (report_bytes, create_time), or `None` if absent
        """
        raise NotImplementedError()

    def place_in_cache(self, key, command, data):
        """Write the report bytes to the cache, using the current time as the
        creation time."""
        raise NotImplementedError()

    def query(self):
        """List everything in the cache.

        :return: List of triples `(key, command, create_time)`
        """
        raise NotImplementedError()

    def remove(self, key):
        """Drop the report stored under `key`, if any."""
        raise NotImplementedError()


class Cache(Executor):
    """Implements the business logic of memoising reports, deferring to two
    members for storing/retrieving reports and for computing new ones.

    :param executor: The :class:`Executor` which runs requests missing from,
      or expired in, the store.
    :param cache: The :class:`ConcreteCache` instance to use for storing
      reports.
    """
    def __init__(self, executor, cache):
        self._executor = executor
        self._cache = cache
        self._expire_time = None

    @property
    def expire_time(self):
        """The duration after which cached reports are recomputed.  `None`
        indicates no time-out.
        """
        return self._expire_time

    @expire_time.setter
    def expire_time(self, duration):
        self._expire_time = duration

    def fetch(self, request):
        key = _utils.request_key(request)

        cached = self._cache.get_from_cache(key)
        if self.expire_time is not None and cached is not None:
            since_refresh = _datetime.datetime.now() - cached[1]
            if since_refresh > self.expire_time:
                cached = None

        if cached is not None:
            _logger.debug("Report cache hit for %s", key[:12])
            return _json.loads(cached[0].decode("utf-8"))

        _logger.debug("Report cache miss for %s", key[:12])
        report = self._executor.fetch(request)
        if report is not None:
            command = request.get("command", "") if isinstance(request, dict) else ""
            self._cache.place_in_cache(key, command, _utils.canonical_json(report).encode("utf-8"))
        return report


def database_exists(db_filename):
    """Attempt to open the file as a SQLite database and see if there is a
    table "reports".  Returns `True` if there is (with any schema) and `False`
    for any error.
    """
    try:
        _os.stat(db_filename)
        conn = _sqlite3.connect(db_filename)
        try:
            tables = conn.execute("SELECT name FROM sqlite_master WHERE type='table'").fetchall()
            tables = [x[0] for x in tables]
            return "reports" in tables
        except Exception:
            return False
        finally:
            conn.close()
    except Exception:
        return False


class SQLiteCache(ConcreteCache):
    """Uses a SQLite database to store reports.  There is one table, "reports",
    keyed by the request key.

    :param db_filename: The filename of the database.  Created, with the table,
      if it doesn't exist.
    """
    def __init__(self, db_filename):
        if not database_exists(db_filename):
            self._make_database(db_filename)
        self._filename = db_filename
        self._connection_provider = _utils.PerThreadProvider(self._new)

    def _new(self):
        return _sqlite3.connect(self._filename)

    def _make_database(self, db_filename):
        conn = _sqlite3.connect(db_filename)
        try:
            conn.execute("CREATE table reports (key STRING UNIQUE, command STRING, data BLOB, create_time STRING)")
        finally:
            conn.close()

    _ISO_FORMAT = "%Y-%m-%dT%H:%M:%S"

    def get_from_cache(self, key):
        conn = self._connection_provider.get()
        row = conn.execute("SELECT data, create_time FROM reports WHERE key=?", (key,)).fetchone()
        if row is None:
            return None
        create_time = _datetime.datetime.strptime(row[1], self._ISO_FORMAT)
        return bytes(row[0]), create_time

    def place_in_cache(self, key, command, data):
        create_time = _datetime.datetime.strftime(_datetime.datetime.now(), self._ISO_FORMAT)
        with self._connection_provider.get() as conn:
            conn.execute("INSERT OR REPLACE INTO reports(key, command, data, create_time) VALUES (?,?,?,?)",
                (key, command, data, create_time))

    def query(self):
        conn = self._connection_provider.get()
        out = []
        for key, command, create_time in conn.execute("SELECT key, command, create_time FROM reports"):
            out.append((key, command, _datetime.datetime.strptime(create_time, self._ISO_FORMAT)))
        return out

    def remove(self, key):
        with self._connection_provider.get() as conn:
            conn.execute("DELETE FROM reports WHERE key=?", (key,))

    def purge(self, older_than):
        """Remove every report created before `now - older_than`.

        :param older_than: A :class:`datetime.timedelta`.
        :return: The number of reports removed.
        """
        cutoff = _datetime.datetime.now() - older_than
        stale = [key for key, _, created in self.query() if created < cutoff]
        for key in stale:
            self.remove(key)
        return len(stale)

    def close(self):
        """Close the underlying database connection (for this thread)."""
        self._connection_provider.get().close()

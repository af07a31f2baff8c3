"""
utils
~~~~~

Some utility functions.

- Logging.  Supports configuring logging to the real stdout, so that the
  command line driver and notebooks both show progress messages.
- A small least-recently-used cache, used to memoise transcendence degrees and
  type fingerprints.
- Per-thread objects (e.g. database connections).
- Deterministic bit streams derived from seeds, used to refine witness
  intervals reproducibly.
"""

import collections as _collections
import hashlib as _hashlib
import json as _json
import threading as _threading

def start_logging(level=None):
    """Set the logging system to log to the (real) `stdout`.  Safe to call more
    than once: only one handler is ever attached.

    :param level: Logging level, defaults to `logging.DEBUG`.
    """
    import logging, sys
    logger = logging.getLogger("predim")
    logger.setLevel(logging.DEBUG if level is None else level)
    for handler in logger.handlers:
        if getattr(handler, "_predim_handler", False):
            return
    ch = logging.StreamHandler(sys.__stdout__)
    ch._predim_handler = True
    fmt = logging.Formatter("{asctime} {levelname} {name} - {message}", style="{")
    ch.setFormatter(fmt)
    logger.addHandler(ch)


class Cache():
    """Least-recently-used cache with a dictionary interface.  Reading an entry
    marks it as used; once `maxcount` entries are held, inserting a new key
    evicts the entry unused for longest.  Access is guarded by a lock, as
    structures are shared between worker threads.

    :param maxcount: The maximum number of objects to cache.
    """
    def __init__(self, maxcount=1024):
        if maxcount < 1:
            raise ValueError("maxcount must be positive, not {}".format(maxcount))
        self._maxcount = maxcount
        self._data = _collections.OrderedDict()
        self._lock = _threading.Lock()
        self.hits = 0
        self.misses = 0

    @property
    def maxcount(self):
        return self._maxcount

    def __len__(self):
        return len(self._data)

    def __contains__(self, key):
        return key in self._data

    def __getitem__(self, key):
        with self._lock:
            value = self._data[key]
            self._data.move_to_end(key)
            return value

    def __setitem__(self, key, value):
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
            elif len(self._data) >= self._maxcount:
                self._data.popitem(last=False)
            self._data[key] = value

    def __delitem__(self, key):
        with self._lock:
            del self._data[key]

    def keys(self):
        return list(self._data.keys())

    def get_or_compute(self, key, compute):
        """Return the cached value for `key`, calling `compute()` and storing
        the result if absent."""
        try:
            value = self[key]
            self.hits += 1
            return value
        except KeyError:
            pass
        self.misses += 1
        value = compute()
        self[key] = value
        return value


class PerThreadProvider():
    """Using a factory, provide objects for which there must be one per
    thread, such as `sqlite3` connections.  Objects belonging to threads which
    have exited are passed to the destructor (if set) and forgotten.

    :param factory: A callable to be invoked to generate a new object.
    """
    def __init__(self, factory):
        self._factory = factory
        self._objects = dict()
        self._destructor = None
        self._lock = _threading.Lock()

    def get(self):
        """Return this thread's object, building one if needed."""
        self._clean()
        ident = _threading.get_ident()
        with self._lock:
            if ident not in self._objects:
                self._objects[ident] = self._factory()
            return self._objects[ident]

    def _clean(self):
        alive = {thread.ident for thread in _threading.enumerate()}
        with self._lock:
            dead = [ident for ident in self._objects if ident not in alive]
            for ident in dead:
                obj = self._objects.pop(ident)
                if self._destructor is not None:
                    self._destructor(obj)

    def active_objects(self):
        """List of active objects"""
        return list(self._objects.values())

    def set_destructor(self, destructor):
        """Set a callable to be invoked on each object before it is
        forgotten."""
        self._destructor = destructor

    def close_all(self):
        """Pass every object to the destructor and forget them all."""
        with self._lock:
            objects = list(self._objects.values())
            self._objects.clear()
        if self._destructor is not None:
            for obj in objects:
                self._destructor(obj)


def seed_bits(seed, count):
    """Deterministic list of `count` bits (0/1) derived from `seed` via
    SHA-256, extended block by block as needed.

    :param seed: Any object; its `str` is hashed.
    :param count: Number of bits required.
    """
    bits = []
    block = 0
    while len(bits) < count:
        digest = _hashlib.sha256("{}#{}".format(seed, block).encode("utf-8")).digest()
        for byte in digest:
            for shift in range(8):
                bits.append((byte >> (7 - shift)) & 1)
        block += 1
    return bits[:count]


def canonical_json(obj):
    """Serialise to JSON with sorted keys and a fixed layout, so equal objects
    give byte-identical text.  Exact rationals are written as "n/d" strings."""
    return _json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, default=str)


def request_key(obj):
    """Stable hex digest of a JSON-serialisable object."""
    text = _json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return _hashlib.sha256(text.encode("utf-8")).hexdigest()


def fresh_name(name, used):
    """`name` itself if not in `used`, else the first of `name_1`, `name_2`,
    ... which is not."""
    if name not in used:
        return name
    index = 1
    while "{}_{}".format(name, index) in used:
        index += 1
    return "{}_{}".format(name, index)

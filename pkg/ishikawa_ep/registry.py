"""Name → scheme registry with regex patterns and priorities.

Schemes register themselves with a decorator::

    @registry.register(r'^modified[_-]ishikawa$', priority=10)
    class ModifiedIshikawa(Scheme): ...

Third-party packages add schemes through the ``ishikawa_ep.schemes``
entry-point group; those modules are imported once, on the first lookup.
"""

from __future__ import annotations

import logging
import re
import threading
from collections.abc import Callable
from dataclasses import dataclass
from importlib import metadata
from typing import Any, Final, TypeVar

from ishikawa_ep.exceptions import ConfigError

log = logging.getLogger(__name__)

ENTRY_POINT_GROUP: Final[str] = 'ishikawa_ep.schemes'

T = TypeVar('T')


@dataclass(frozen=True)
class _Entry:
    patterns: tuple[re.Pattern[str], ...]
    priority: int
    target: Any


_entries: list[_Entry] = []
_plugins_loaded = False
_lock = threading.RLock()


def register(*patterns: str, priority: int = 0) -> Callable[[T], T]:
    """Register the decorated class under every regex in ``patterns``."""
    if not patterns:
        raise ConfigError('register() needs at least one name pattern')
    compiled = tuple(re.compile(p) for p in patterns)

    def decorator(target: T) -> T:
        _entries.append(_Entry(compiled, priority, target))
        log.debug('registered %s for %s (priority %d)', target, patterns, priority)
        return target

    return decorator


def load_plugins_once() -> None:
    """Import every module advertised in the ``ishikawa_ep.schemes`` group.

    The lock is held until every plugin has registered, so a concurrent lookup
    never sees a partially loaded registry.
    """
    global _plugins_loaded
    with _lock:
        if _plugins_loaded:
            return
        _plugins_loaded = True
        for ep in metadata.entry_points(group=ENTRY_POINT_GROUP):
            try:
                ep.load()
            except Exception as e:
                log.warning('failed to load scheme plugin %s: %s', ep.name, e)
            else:
                log.info('loaded scheme plugin %s', ep.name)


def resolve(name: str) -> Any:
    """Return the highest-priority registration whose pattern matches ``name``.

    Raises:
        ConfigError: if nothing matches.
    """
    load_plugins_once()
    matches = [e for e in _entries if any(p.search(name) for p in e.patterns)]
    if not matches:
        raise ConfigError(
            f'No scheme registered for {name!r}; known schemes: {registered_names()}'
        )
    return max(matches, key=lambda e: e.priority).target


def registered_names() -> list[str]:
    """Canonical names of the registered schemes, in registration order."""
    return [getattr(e.target, 'name', repr(e.target)) for e in _entries]


def _reset_plugins_for_tests() -> None:
    global _plugins_loaded
    with _lock:
        _plugins_loaded = False

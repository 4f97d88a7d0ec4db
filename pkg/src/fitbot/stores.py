"""Session and profile persistence.

Two SessionStore implementations share one contract: load-after-save returns
the snapshot, expired sessions (TTL, lazily checked on load) behave as
absent. The file store writes via temp-file-then-rename so a crash can never
leave a torn session file, and one directory can safely back several service
processes at once.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
import threading
import time
import uuid
from pathlib import Path

from .dialog import SessionState
from .reformulation import UserProfile, profile_from_json, profile_to_json

DEFAULT_TTL_SECONDS = 3600.0

_SESSION_ID_RE = re.compile(r"[a-f0-9]{8,64}")
_SAFE_CHARS_RE = re.compile(r"[^A-Za-z0-9._-]")


def new_session_id() -> str:
    return uuid.uuid4().hex


def _session_to_json(state: SessionState) -> dict:
    return {
        "session_id": state.session_id,
        "context": state.context,
        "last_node": state.last_node,
        "turn_counter": state.turn_counter,
        "updated_at": state.updated_at,
    }


def _session_from_json(raw: dict) -> SessionState:
    return SessionState(
        session_id=raw["session_id"],
        context=dict(raw.get("context", {})),
        last_node=raw.get("last_node"),
        turn_counter=int(raw.get("turn_counter", 0)),
        updated_at=float(raw.get("updated_at", 0.0)),
    )


class LockMap:
    """Per-key mutual exclusion; locks are created on first use."""

    def __init__(self):
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}

    def get(self, key: str) -> threading.Lock:
        with self._guard:
            lock = self._locks.get(key)
            if lock is None:
                lock = self._locks[key] = threading.Lock()
            return lock


class InMemorySessionStore:
    def __init__(self, ttl_seconds: float = DEFAULT_TTL_SECONDS, clock=time.time):
        self.ttl_seconds = ttl_seconds
        self._clock = clock
        self._sessions: dict[str, SessionState] = {}
        self._guard = threading.Lock()
        self.locks = LockMap()

    def create(self) -> SessionState:
        state = SessionState(session_id=new_session_id(), updated_at=self._clock())
        with self._guard:
            self._sessions[state.session_id] = state.copy()
        return state

    def load(self, session_id: str) -> SessionState | None:
        with self._guard:
            state = self._sessions.get(session_id)
            if state is None:
                return None
            if self._clock() - state.updated_at > self.ttl_seconds:
                del self._sessions[session_id]
                return None
            return state.copy()

    def save(self, state: SessionState) -> None:
        state.updated_at = self._clock()
        with self._guard:
            self._sessions[state.session_id] = state.copy()

    def delete(self, session_id: str) -> bool:
        with self._guard:
            return self._sessions.pop(session_id, None) is not None


def atomic_write_json(path: Path, payload: dict) -> None:
    """Write JSON to path via a same-directory temp file and rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    data = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


class FileSessionStore:
    """One JSON file per session under ``directory/sessions``."""

    def __init__(self, directory, ttl_seconds: float = DEFAULT_TTL_SECONDS, clock=time.time):
        self.directory = Path(directory) / "sessions"
        self.directory.mkdir(parents=True, exist_ok=True)
        self.ttl_seconds = ttl_seconds
        self._clock = clock
        self.locks = LockMap()

    def _path(self, session_id: str) -> Path | None:
        if not _SESSION_ID_RE.fullmatch(session_id):
            return None
        return self.directory / f"{session_id}.json"

    def create(self) -> SessionState:
        state = SessionState(session_id=new_session_id(), updated_at=self._clock())
        atomic_write_json(self._path(state.session_id), _session_to_json(state))
        return state

    def load(self, session_id: str) -> SessionState | None:
        path = self._path(session_id)
        if path is None or not path.exists():
            return None
        try:
            state = _session_from_json(json.loads(path.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError, ValueError):
            return None
        if self._clock() - state.updated_at > self.ttl_seconds:
            try:
                path.unlink()
            except OSError:
                pass
            return None
        return state

    def save(self, state: SessionState) -> None:
        state.updated_at = self._clock()
        path = self._path(state.session_id)
        if path is None:
            raise ValueError(f"invalid session id {state.session_id!r}")
        atomic_write_json(path, _session_to_json(state))

    def delete(self, session_id: str) -> bool:
        path = self._path(session_id)
        if path is None or not path.exists():
            return False
        try:
            path.unlink()
        except OSError:
            return False
        return True


class InMemoryProfileStore:
    def __init__(self):
        self._profiles: dict[str, UserProfile] = {}
        self._guard = threading.Lock()

    def load(self, user_id: str) -> UserProfile:
        with self._guard:
            return self._profiles.get(user_id, UserProfile(user_id=user_id))

    def save(self, profile: UserProfile) -> None:
        with self._guard:
            self._profiles[profile.user_id] = profile


class FileProfileStore:
    """One JSON document per user under ``directory/profiles``."""

    def __init__(self, directory):
        self.directory = Path(directory) / "profiles"
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, user_id: str) -> Path:
        return self.directory / (_SAFE_CHARS_RE.sub("_", user_id) + ".json")

    def load(self, user_id: str) -> UserProfile:
        path = self._path(user_id)
        if not path.exists():
            return UserProfile(user_id=user_id)
        try:
            return profile_from_json(json.loads(path.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError, ValueError):
            return UserProfile(user_id=user_id)

    def save(self, profile: UserProfile) -> None:
        atomic_write_json(self._path(profile.user_id), profile_to_json(profile))

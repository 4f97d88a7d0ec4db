import json
import threading
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from fitbot.engine import Assistant
from fitbot.service import create_app
from fitbot.stores import (
    FileProfileStore,
    FileSessionStore,
    InMemoryProfileStore,
    InMemorySessionStore,
)

REFERENCE = "2024-03-06T09:00:00"


@pytest.fixture()
def client(fitness_assistant):
    app = create_app(fitness_assistant, InMemorySessionStore(), InMemoryProfileStore())
    return TestClient(app)


def open_session(client) -> str:
    response = client.post("/v2/sessions")
    assert response.status_code == 201
    return response.json()["session_id"]


def send(client, session_id, text, context=None):
    body = {"input": {"text": text}}
    if context:
        body["context"] = context
    return client.post(f"/v2/sessions/{session_id}/message", json=body)


class TestSessions:
    def test_create_message_hello(self, client):
        session_id = open_session(client)
        response = send(client, session_id, "hello")
        assert response.status_code == 200
        payload = response.json()
        assert payload["output"]["generic"] == [
            {
                "response_type": "text",
                "text": "Hello! I can help with diet and workout plans.",
            }
        ]
        assert payload["output"]["intents"][0]["intent"] == "greetings"
        assert payload["output"]["intents"][0]["confidence"] == 1.0

    def test_message_to_deleted_session_404(self, client):
        session_id = open_session(client)
        assert client.delete(f"/v2/sessions/{session_id}").status_code == 204
        assert send(client, session_id, "hello").status_code == 404

    def test_delete_unknown_404(self, client):
        assert client.delete("/v2/sessions/deadbeef").status_code == 404

    def test_unknown_session_404(self, client):
        assert send(client, "0" * 32, "hello").status_code == 404

    def test_turn_counter_increments(self, client):
        session_id = open_session(client)
        send(client, session_id, "hello")
        second = send(client, session_id, "hello").json()
        assert second["context"]["srq_task_id"]  # reformulation ran
        # context carries across turns; counter lives server-side


class TestValidation:
    def test_bad_json_400(self, client):
        session_id = open_session(client)
        response = client.post(
            f"/v2/sessions/{session_id}/message",
            content=b"{nope",
            headers={"content-type": "application/json"},
        )
        assert response.status_code == 400

    def test_missing_text_400(self, client):
        session_id = open_session(client)
        response = client.post(f"/v2/sessions/{session_id}/message", json={"input": {}})
        assert response.status_code == 400

    def test_payload_too_large_413(self, client):
        session_id = open_session(client)
        assert send(client, session_id, "x" * 2049).status_code == 413

    def test_bad_context_key_400(self, client):
        session_id = open_session(client)
        response = send(client, session_id, "hello", context={"Bad Key": 1})
        assert response.status_code == 400

    def test_garbage_reserved_var_overrides_survive(self, client):
        session_id = open_session(client)
        response = send(
            client,
            session_id,
            "book a session",
            context={"srq_task_id": 42, "srq_task_state": "garbage"},
        )
        assert response.status_code == 200
        assert response.json()["context"]["srq_task_id"] == "session_scheduling"

    def test_empty_text_degrades_to_fallback(self, client):
        session_id = open_session(client)
        response = send(client, session_id, "")
        assert response.status_code == 200
        texts = [g["text"] for g in response.json()["output"]["generic"]]
        assert texts and texts[0].startswith("Sorry")


class TestResponseShape:
    def test_entities_with_locations(self, client):
        session_id = open_session(client)
        payload = send(
            client, session_id, "suggest a vegan diet", {"sys_reference_time": REFERENCE}
        ).json()
        entities = payload["output"]["entities"]
        assert {
            "entity": "diet_type",
            "value": "vegan",
            "location": [10, 15],
            "confidence": 1.0,
        } in entities

    def test_corrected_text_present_when_fixed(self, client):
        session_id = open_session(client)
        payload = send(client, session_id, "passwrd doesnt work").json()
        assert payload["output"]["corrected_text"] == "password doesnt work"

    def test_corrected_text_absent_when_clean(self, client):
        session_id = open_session(client)
        payload = send(client, session_id, "hello").json()
        assert "corrected_text" not in payload["output"]

    def test_context_override_echoed(self, client):
        session_id = open_session(client)
        payload = send(client, session_id, "hello", context={"user_name": "sam"}).json()
        assert payload["context"]["user_name"] == "sam"

    def test_reference_time_recorded_and_sticky(self, client):
        session_id = open_session(client)
        first = send(client, session_id, "hello", {"sys_reference_time": REFERENCE}).json()
        assert first["context"]["sys_reference_time"] == REFERENCE
        second = send(client, session_id, "book a session at noon").json()
        assert second["context"]["sys_reference_time"] == REFERENCE

    def test_system_entity_value_shape(self, client):
        session_id = open_session(client)
        payload = send(
            client, session_id, "book a session at 5 pm", {"sys_reference_time": REFERENCE}
        ).json()
        values = [e["value"] for e in payload["output"]["entities"] if e["entity"] == "sys_time"]
        assert values == [{"kind": "time", "hour": 17, "minute": 0}]


class TestWebchatStatic:
    def test_index_served_from_root(self, fitness_assistant):
        webchat = Path(__file__).resolve().parent.parent / "frontend" / "public"
        if not webchat.joinpath("index.html").exists():
            pytest.skip("frontend not present")
        app = create_app(
            fitness_assistant,
            InMemorySessionStore(),
            InMemoryProfileStore(),
            webchat_dir=webchat,
        )
        client = TestClient(app)
        response = client.get("/")
        assert response.status_code == 200
        assert "fitbot" in response.text
        # API routes take precedence over the static mount
        assert client.get("/health").json()["status"] == "ok"


class TestHealth:
    def test_health_counts(self, client):
        payload = client.get("/health").json()
        assert payload["status"] == "ok"
        assert payload["skill"] == "fitness_assistant"
        assert payload["intents"] == 6
        assert payload["entities"] == 4

    def test_health_before_load_503(self):
        app = create_app(None, InMemorySessionStore(), InMemoryProfileStore())
        client = TestClient(app)
        assert client.get("/health").status_code == 503
        assert client.post("/v2/sessions").status_code == 503

    def test_repeated_counts_identical(self, client):
        first = client.get("/health").json()
        second = client.get("/health").json()
        assert (first["intents"], first["entities"]) == (second["intents"], second["entities"])


class TestFileStores:
    def test_load_after_save_round_trip(self, tmp_path):
        store = FileSessionStore(tmp_path)
        state = store.create()
        state.context["diet"] = "vegan"
        state.turn_counter = 3
        store.save(state)
        loaded = store.load(state.session_id)
        assert loaded.context == {"diet": "vegan"}
        assert loaded.turn_counter == 3

    def test_expired_session_absent(self, tmp_path):
        now = [1000.0]
        store = FileSessionStore(tmp_path, ttl_seconds=10, clock=lambda: now[0])
        state = store.create()
        now[0] += 11
        assert store.load(state.session_id) is None

    def test_torn_file_treated_as_absent(self, tmp_path):
        store = FileSessionStore(tmp_path)
        state = store.create()
        path = store._path(state.session_id)
        path.write_text("{ not json")
        assert store.load(state.session_id) is None

    def test_no_temp_files_left_behind(self, tmp_path):
        store = FileSessionStore(tmp_path)
        for _ in range(5):
            store.save(store.create())
        leftovers = [p for p in store.directory.iterdir() if p.name.startswith(".tmp-")]
        assert leftovers == []

    def test_invalid_session_id_rejected(self, tmp_path):
        store = FileSessionStore(tmp_path)
        assert store.load("../../etc/passwd") is None

    def test_profile_store_round_trip(self, tmp_path):
        from fitbot.reformulation import UserProfile

        store = FileProfileStore(tmp_path)
        store.save(UserProfile("user-1", {"yoga": 0.5}, observation_count=2))
        loaded = store.load("user-1")
        assert loaded.term_weights == {"yoga": 0.5}
        assert loaded.observation_count == 2
        # unknown user gets an empty profile
        assert store.load("nobody").term_weights == {}


class TestCaptureReplay:
    def test_replay_is_byte_identical(self, fitness_assistant, tmp_path):
        store = FileSessionStore(tmp_path / "one")
        app = create_app(fitness_assistant, store, FileProfileStore(tmp_path / "one"))
        client = TestClient(app)
        session_id = open_session(client)

        turns = [
            ("hello", {"sys_reference_time": REFERENCE}),
            ("suggest a vegan diet", None),
            ("book a session at 5 pm", None),
            ("tell me about dinosaurs", None),
        ]
        captured = []
        for text, context in turns:
            snapshot = store._path(session_id).read_bytes()
            body = {"input": {"text": text}}
            if context:
                body["context"] = context
            response = client.post(f"/v2/sessions/{session_id}/message", json=body)
            captured.append((body, snapshot, response.content))

        replay_store = FileSessionStore(tmp_path / "two")
        replay_app = create_app(
            fitness_assistant, replay_store, FileProfileStore(tmp_path / "two")
        )
        replay_client = TestClient(replay_app)
        for body, snapshot, expected in captured:
            replay_store._path(session_id).parent.mkdir(parents=True, exist_ok=True)
            replay_store._path(session_id).write_bytes(snapshot)
            response = replay_client.post(f"/v2/sessions/{session_id}/message", json=body)
            assert response.content == expected


class TestConcurrency:
    def test_distinct_sessions_do_not_interleave(self, fitness_assistant):
        app = create_app(fitness_assistant, InMemorySessionStore(), InMemoryProfileStore())
        client = TestClient(app)
        ids = [open_session(client) for _ in range(4)]
        errors = []

        def hammer(session_id):
            try:
                for _ in range(5):
                    response = send(client, session_id, "hello")
                    assert response.status_code == 200
            except Exception as exc:  # pragma: no cover - failure reporting
                errors.append(exc)

        threads = [threading.Thread(target=hammer, args=(i,)) for i in ids]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert errors == []
        # each session saw exactly its own five turns
        for session_id in ids:
            payload = send(client, session_id, "hello").json()
            assert payload["context"]["greeted"] is True

    def test_same_session_messages_serialized(self, fitness_assistant, tmp_path):
        store = FileSessionStore(tmp_path)
        app = create_app(fitness_assistant, store, FileProfileStore(tmp_path))
        client = TestClient(app)
        session_id = open_session(client)
        errors = []

        def hammer():
            try:
                assert send(client, session_id, "hello").status_code == 200
            except Exception as exc:  # pragma: no cover - failure reporting
                errors.append(exc)

        threads = [threading.Thread(target=hammer) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert errors == []
        # load-modify-save never lost a turn: all eight messages counted
        assert store.load(session_id).turn_counter == 8


class TestEngineFailuresNever500:
    def make_client(self, dialog_nodes):
        from .conftest import make_skill, parse_dict

        skill = parse_dict(make_skill({"greetings": ["hello"]}, dialog_nodes=dialog_nodes))
        app = create_app(Assistant(skill), InMemorySessionStore(), InMemoryProfileStore())
        return TestClient(app)

    def test_jump_cycle_degrades_to_text(self):
        client = self.make_client(
            [
                {"id": "a", "condition": "true", "responses": ["A"], "jump_to": "b"},
                {"id": "b", "condition": "!true", "responses": ["B"], "jump_to": "a"},
            ]
        )
        session_id = open_session(client)
        response = send(client, session_id, "hello")
        assert response.status_code == 200
        payload = response.json()
        assert payload["output"]["generic"][0]["text"].startswith("Sorry")
        assert "engine_error" in payload["context"]
        # the session survives for the next turn
        assert send(client, session_id, "hello").status_code == 200

    def test_no_fallback_degrades_to_text(self):
        client = self.make_client(
            [{"id": "only", "condition": "#greetings && $never", "responses": ["x"]}]
        )
        session_id = open_session(client)
        response = send(client, session_id, "hello")
        assert response.status_code == 200
        assert "engine_error" in response.json()["context"]


def test_canonical_json_is_deterministic():
    from fitbot.service import canonical_json

    payload = {"b": [1, 2], "a": {"y": 0.5, "x": "é"}}
    assert canonical_json(payload) == canonical_json(json.loads(json.dumps(payload)))
    assert canonical_json(payload) == b'{"a":{"x":"\xc3\xa9","y":0.5},"b":[1,2]}'

"""Regenerate the bundled fixture set (skill, task catalog, eval corpus,
wordlist) and sanity-check the interesting behaviors against the engine.

Run from the repo root:  python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import datetime as dt
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from fitbot import intents, textprep  # noqa: E402
from fitbot.engine import Assistant  # noqa: E402
from fitbot.reformulation import UserProfile, parse_catalog, reformulate  # noqa: E402
from fitbot.skill import DEFAULT_STOPWORDS, parse_skill, serialize_skill  # noqa: E402

FIXTURES = ROOT / "fixtures"


def annotated(text: str, **spans: str) -> dict:
    """Example dict with mention offsets located by substring search."""
    mentions = []
    for entity, word in spans.items():
        start = text.index(word)
        mentions.append({"entity": entity, "start": start, "end": start + len(word)})
    return {"text": text, "mentions": mentions}


def build_skill() -> dict:
    return {
        "name": "fitness_assistant",
        "language": "en",
        "intents": [
            {
                "name": "greetings",
                "examples": [
                    {"text": "hello"},
                    {"text": "hi there"},
                    {"text": "good morning"},
                    {"text": "hey coach"},
                ],
            },
            {
                "name": "goodbye",
                "examples": [
                    {"text": "bye"},
                    {"text": "goodbye"},
                    {"text": "see you later"},
                    {"text": "bye for now"},
                ],
            },
            {
                "name": "diet_plan",
                "examples": [
                    {"text": "I want a diet plan"},
                    {"text": "suggest a vegan diet"},
                    {"text": "what should I eat for lunch"},
                    {"text": "help with my meal plan"},
                    {"text": "I need a keto diet"},
                ],
            },
            {
                "name": "workout_plan",
                "examples": [
                    annotated("plan my arms workout", body_part="arms"),
                    annotated("I want to train my legs", body_part="legs"),
                    annotated("build a back routine", body_part="back"),
                    annotated("a chest workout for home", body_part="chest"),
                    annotated("exercises for my core", body_part="core"),
                    annotated("a shoulders workout please", body_part="shoulders"),
                ],
            },
            {
                "name": "schedule_session",
                "examples": [
                    {"text": "book a session with a trainer"},
                    {"text": "schedule a yoga class for tomorrow"},
                    {"text": "book a session at 5 pm"},
                    {"text": "reserve a training slot"},
                ],
            },
            {
                "name": "account_help",
                "examples": [
                    {"text": "reset password"},
                    {"text": "password doesn't work"},
                    {"text": "password doesnt work"},
                    {"text": "I can't log in"},
                    {"text": "forgot my password"},
                    {"text": "account help please"},
                ],
            },
        ],
        "entities": [
            {
                "name": "diet_type",
                "kind": "dictionary",
                "fuzzy": True,
                "values": [
                    {"value": "vegan", "synonyms": ["plant based"]},
                    {"value": "keto", "synonyms": ["ketogenic"]},
                    {"value": "vegetarian", "synonyms": []},
                    {"value": "paleo", "synonyms": []},
                    {"value": "mediterranean", "synonyms": []},
                ],
            },
            {"name": "body_part", "kind": "contextual"},
            {"name": "member_id", "kind": "pattern", "patterns": ["[A-Z]{2}\\d{4}"]},
            {
                "name": "product",
                "kind": "dictionary",
                "fuzzy": False,
                "values": [
                    {
                        "value": "IBM Watson Discovery",
                        "synonyms": ["discovery", "watson discovery"],
                    }
                ],
            },
        ],
        "dialog_nodes": [
            {
                "id": "greet",
                "condition": "#greetings",
                "responses": ["Hello! I can help with diet and workout plans."],
                "context_updates": {"greeted": True},
            },
            {
                "id": "farewell",
                "condition": "#goodbye",
                "responses": ["Goodbye! Stay fit and see you soon."],
            },
            {
                "id": "diet_plan_typed",
                "condition": "#diet_plan && @diet_type",
                "responses": [
                    "Great choice! Here is a {@diet_type} plan: oats for breakfast, "
                    "a salad bowl for lunch, grilled protein for dinner."
                ],
                "context_updates": {"diet_type": "{@diet_type}"},
            },
            {
                "id": "diet_plan_ask",
                "condition": "#diet_plan",
                "responses": [
                    "I can build you a meal plan. Do you prefer vegan, keto, "
                    "vegetarian, paleo or mediterranean?"
                ],
            },
            {
                "id": "workout",
                "condition": "#workout_plan",
                "responses": [
                    "Let's get you training! I can plan workouts for arms, legs, "
                    "back, chest and core."
                ],
            },
            {
                "id": "schedule_time",
                "condition": "#schedule_session && @sys_time",
                "responses": ["Booked! Your training session is set for {@sys_time}."],
                "context_updates": {"session_time": "{@sys_time}"},
            },
            {
                "id": "schedule_ask",
                "condition": "#schedule_session",
                "responses": ["I can book that. What time works for you?"],
            },
            {
                "id": "account_access",
                "condition": "#account_help",
                "responses": [
                    "You can reset your password at gym.example.com/reset and then sign in again."
                ],
            },
            {
                "id": "fallback",
                "condition": "anything_else",
                "responses": [
                    "Sorry, I can only help with fitness topics like diet plans, "
                    "workouts and session scheduling."
                ],
            },
        ],
        "config": {
            "intent_threshold": 0.5,
            "oos_similarity_floor": 0.35,
            "autocorrect_enabled": True,
            "max_jumps": 25,
            "stopwords": list(DEFAULT_STOPWORDS),
            "expansion_k": 3,
        },
    }


TASKS = {
    "tasks": [
        {
            "id": "account_management",
            "states": [
                {
                    "label": "access",
                    "terms": {
                        "password": 0.9, "login": 0.8, "account": 0.7,
                        "reset": 0.6, "email": 0.5,
                    },
                },
                {
                    "label": "security",
                    "terms": {"security": 0.6, "verify": 0.5, "code": 0.5},
                },
            ],
        },
        {
            "id": "diet_planning",
            "states": [
                {
                    "label": "choose_diet",
                    "terms": {
                        "diet": 0.9, "meal": 0.5, "vegan": 0.5, "keto": 0.5,
                        "vegetarian": 0.4, "lunch": 0.3, "nutrition": 0.6,
                    },
                },
                {
                    "label": "follow_diet",
                    "terms": {
                        "meal": 0.7, "prep": 0.5, "grocery": 0.6,
                        "recipes": 0.6, "macros": 0.5,
                    },
                },
            ],
        },
        {
            "id": "equipment_guidance",
            "states": [
                {
                    "label": "choose_equipment",
                    "terms": {
                        "equipment": 0.8, "dumbbells": 0.6, "mat": 0.5,
                        "bands": 0.5, "machine": 0.6,
                    },
                },
                {
                    "label": "use_equipment",
                    "terms": {"form": 0.6, "safety": 0.7, "setup": 0.5},
                },
            ],
        },
        {
            "id": "membership_billing",
            "states": [
                {
                    "label": "plans",
                    "terms": {"membership": 0.8, "price": 0.6, "upgrade": 0.5},
                },
                {
                    "label": "payment",
                    "terms": {"payment": 0.7, "invoice": 0.6, "refund": 0.5, "card": 0.5},
                },
            ],
        },
        {
            "id": "motivation_coaching",
            "states": [
                {
                    "label": "set_goals",
                    "terms": {"goals": 0.8, "motivation": 0.7, "habit": 0.6, "streak": 0.5},
                },
                {
                    "label": "stay_accountable",
                    "terms": {"reminders": 0.6, "partner": 0.5, "coach": 0.7},
                },
            ],
        },
        {
            "id": "progress_tracking",
            "states": [
                {
                    "label": "log_progress",
                    "terms": {"weight": 0.7, "track": 0.8, "log": 0.6, "progress": 0.7},
                },
                {
                    "label": "review_progress",
                    "terms": {"summary": 0.5, "trends": 0.6, "charts": 0.5, "goals": 0.6},
                },
            ],
        },
        {
            "id": "recovery_wellness",
            "states": [
                {
                    "label": "recover",
                    "terms": {
                        "stretching": 0.7, "sleep": 0.6, "rest": 0.7,
                        "soreness": 0.6, "massage": 0.5,
                    },
                },
                {
                    "label": "mindfulness",
                    "terms": {"yoga": 0.6, "meditation": 0.7, "breathing": 0.6},
                },
            ],
        },
        {
            "id": "session_scheduling",
            "states": [
                {
                    "label": "find_slot",
                    "terms": {
                        "session": 0.8, "book": 0.7, "trainer": 0.9,
                        "slot": 0.5, "schedule": 0.7, "class": 0.5,
                    },
                },
                {
                    "label": "confirm_slot",
                    "terms": {"confirm": 0.6, "reminder": 0.5, "calendar": 0.6, "reschedule": 0.5},
                },
            ],
        },
        {
            "id": "workout_planning",
            "states": [
                {
                    "label": "build_routine",
                    "terms": {
                        "workout": 0.9, "routine": 0.7, "exercises": 0.6,
                        "arms": 0.4, "legs": 0.4, "chest": 0.4, "core": 0.4,
                        "sets": 0.5, "reps": 0.5,
                    },
                },
                {
                    "label": "progress_routine",
                    "terms": {"weights": 0.6, "overload": 0.5, "reps": 0.6, "form": 0.5},
                },
            ],
        },
    ]
}

EVAL_LINES = [
    ("hello", "greetings"),
    ("hi there", "greetings"),
    ("good morning", "greetings"),
    ("hey coach", "greetings"),
    ("bye", "goodbye"),
    ("goodbye", "goodbye"),
    ("see you later", "goodbye"),
    ("I want a diet plan", "diet_plan"),
    ("suggest a vegan diet", "diet_plan"),
    ("I need a keto diet", "diet_plan"),
    ("what should I eat for lunch", "diet_plan"),
    ("help with my meal plan", "diet_plan"),
    ("suggest a vegetarian diet", "diet_plan"),
    ("a paleo diet plan", "diet_plan"),
    ("plan my arms workout", "workout_plan"),
    ("I want to train my legs", "workout_plan"),
    ("build a back routine", "workout_plan"),
    ("exercises for my core", "workout_plan"),
    ("a chest workout for home", "workout_plan"),
    ("workout routine for home", "workout_plan"),
    ("book a session with a trainer", "schedule_session"),
    ("schedule a yoga class for tomorrow", "schedule_session"),
    ("book a session at 5 pm", "schedule_session"),
    ("reserve a training slot", "schedule_session"),
    ("book a trainer session", "schedule_session"),
    ("password doesn't work", "account_help"),
    ("I can't log in", "account_help"),
    ("passwrd doesnt work", "account_help"),
    ("reset password", "account_help"),
    ("forgot my password", "account_help"),
    ("tell me about dinosaurs", "__oos__"),
    ("play some music", "__oos__"),
    ("order pizza tonight", "__oos__"),
    ("stock market news", "__oos__"),
    ("movie tickets downtown", "__oos__"),
    ("sing a song", "__oos__"),
]

WORDLIST = [
    ("pilates", 3),
    ("stretching", 3),
    ("hydration", 2),
    ("protein", 4),
    ("cardio", 4),
    ("dumbbells", 2),
    ("warmup", 2),
]


def main() -> int:
    FIXTURES.mkdir(exist_ok=True)
    skill_doc = build_skill()
    skill = parse_skill(json.dumps(skill_doc))
    (FIXTURES / "fitness.json").write_bytes(serialize_skill(skill))
    (FIXTURES / "tasks.json").write_text(
        json.dumps(TASKS, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (FIXTURES / "eval.tsv").write_text(
        "".join(f"{text}\t{label}\n" for text, label in EVAL_LINES), encoding="utf-8"
    )
    (FIXTURES / "wordlist.tsv").write_text(
        "# extra vocabulary for autocorrection\n"
        + "".join(f"{word}\t{freq}\n" for word, freq in WORDLIST),
        encoding="utf-8",
    )

    # --- calibration: the behaviors the fixtures promise must actually hold
    assistant = Assistant(skill)
    reference = dt.datetime(2024, 3, 6, 9, 0, 0)
    failures = []

    def check(label, condition):
        print(f"  {'ok ' if condition else 'FAIL'} {label}")
        if not condition:
            failures.append(label)

    print("calibration:")
    for text in ("password doesn't work", "I can't log in", "passwrd doesnt work"):
        nlu = assistant.understand(text, reference)
        check(
            f"{text!r} -> account_help",
            nlu.resolved.is_in_scope and nlu.resolved.prediction.intent == "account_help",
        )
    nlu = assistant.understand("I need help with discovery", reference)
    check(
        "'I need help with discovery' has @product mention",
        any(m.entity == "product" and m.value == "IBM Watson Discovery" for m in nlu.mentions),
    )
    tokens = textprep.autocorrect(textprep.tokenize("tell me about dinosaurs"), assistant.vocabulary)
    score = intents.irrelevance_score(tokens, assistant.intent_model)
    check(f"dinosaurs irrelevance {score:.3f} < 0.35", score < 0.35)

    for text, label in EVAL_LINES:
        toks = textprep.autocorrect(textprep.tokenize(text), assistant.vocabulary)
        resolved = intents.resolve(toks, assistant.intent_model, skill.config)
        predicted = resolved.prediction.intent if resolved.is_in_scope else "__oos__"
        marker = "ok " if predicted == label else "  ~"
        print(f"  {marker} eval {text!r}: {label} -> {predicted}")

    catalog = parse_catalog(json.dumps(TASKS))
    profile = UserProfile(user_id="demo", term_weights={"trainer": 0.6, "slot": 0.6})
    srq = reformulate(["book", "session"], profile, catalog, None, skill.config.stopwords, 3)
    check(
        f"SRQ 'book session' -> {list(srq.final_terms)}",
        list(srq.final_terms) == ["book", "session", "trainer", "slot"],
    )

    if failures:
        print(f"{len(failures)} calibration failure(s)")
        return 1
    print("fixtures written to", FIXTURES)
    return 0


if __name__ == "__main__":
    sys.exit(main())

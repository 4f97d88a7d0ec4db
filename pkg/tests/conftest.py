import json
from pathlib import Path

import pytest

from fitbot.engine import Assistant
from fitbot.reformulation import load_catalog
from fitbot.skill import load_skill, parse_skill
from fitbot.textprep import read_wordlist

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

# 3-intent / 6-example corpus used by the classifier oracle tests; "yoga"
# appears in exactly one intent's examples
TINY_CORPUS = {
    "diet": ["vegan diet plan", "keto diet"],
    "workout": ["yoga workout", "arms workout routine"],
    "schedule": ["book a session", "schedule a session"],
}


def make_skill(intents: dict[str, list[str]], **kwargs) -> dict:
    doc = {
        "name": kwargs.pop("name", "test_skill"),
        "language": "en",
        "intents": [
            {"name": name, "examples": [{"text": t} for t in texts]}
            for name, texts in intents.items()
        ],
        "entities": kwargs.pop("entities", []),
        "dialog_nodes": kwargs.pop(
            "dialog_nodes",
            [{"id": "fallback", "condition": "anything_else", "responses": ["sorry"]}],
        ),
    }
    doc.update(kwargs)
    return doc


def parse_dict(doc: dict):
    return parse_skill(json.dumps(doc))


@pytest.fixture(scope="session")
def tiny_skill():
    return parse_dict(make_skill(TINY_CORPUS))


@pytest.fixture(scope="session")
def fitness_skill():
    return load_skill(FIXTURES / "fitness.json")


@pytest.fixture(scope="session")
def fitness_catalog():
    return load_catalog(FIXTURES / "tasks.json")


@pytest.fixture(scope="session")
def fitness_assistant(fitness_skill, fitness_catalog):
    return Assistant(
        fitness_skill,
        catalog=fitness_catalog,
        extra_words=read_wordlist(FIXTURES / "wordlist.tsv"),
    )

"""Skill definition: intents, entities, dialog nodes, config.

A skill is a single UTF-8 JSON document with top-level keys
``name, language, intents, entities, dialog_nodes, config``. Parsing
validates every structural invariant; serialization is canonical (sorted
object keys, 2-space indent, trailing newline) so that serialize is a fixed
point on its own output.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .conditions import (
    And,
    AnythingElse,
    ConditionAst,
    ConditionSyntaxError,
    EntityPresent,
    IDENT_RE,
    IntentIs,
    Not,
    Or,
    format_condition,
    parse_condition,
)

ENTITY_KINDS = ("dictionary", "pattern", "contextual")

# recognized implicitly by the system-entity grammar; usable in conditions
# and placeholders without being declared in the skill file
SYSTEM_ENTITY_NAMES = ("sys_currency", "sys_date", "sys_number", "sys_range", "sys_time")

PLACEHOLDER_RE = re.compile(r"\{([$@])([a-z][a-z0-9_]*)\}")

DEFAULT_STOPWORDS = (
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "can", "do",
    "for", "from", "have", "how", "i", "in", "is", "it", "me", "my", "of",
    "on", "or", "please", "set", "that", "the", "this", "to", "want", "we",
    "what", "when", "which", "will", "with", "would", "you", "your",
)


class SkillError(Exception):
    """Base class for skill loading failures."""


class SkillSyntaxError(SkillError):
    """Malformed JSON document."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class SchemaError(SkillError):
    """Missing, extra, or wrongly typed fields."""


class ValidationError(SkillError):
    """A structural invariant does not hold; names the offending element."""


@dataclass(frozen=True)
class MentionAnnotation:
    """Character-span entity annotation on a training example (end exclusive)."""

    entity: str
    start: int
    end: int
    value: str | None = None


@dataclass(frozen=True)
class AnnotatedExample:
    text: str
    mentions: tuple[MentionAnnotation, ...] = ()


@dataclass(frozen=True)
class IntentDef:
    name: str
    examples: tuple[AnnotatedExample, ...]


@dataclass(frozen=True)
class EntityDef:
    name: str
    kind: str
    values: tuple[tuple[str, tuple[str, ...]], ...] = ()  # (canonical, synonyms)
    patterns: tuple[str, ...] = ()
    fuzzy: bool = False


@dataclass(frozen=True)
class DialogNode:
    id: str
    condition: ConditionAst
    responses: tuple[str, ...] = ()
    context_updates: tuple[tuple[str, object], ...] = ()
    jump_to: str | None = None


@dataclass(frozen=True)
class SkillConfig:
    intent_threshold: float = 0.5
    oos_similarity_floor: float = 0.35
    autocorrect_enabled: bool = True
    max_jumps: int = 25
    stopwords: tuple[str, ...] = DEFAULT_STOPWORDS
    expansion_k: int = 3


@dataclass(frozen=True)
class Skill:
    name: str
    language: str
    intents: tuple[IntentDef, ...]
    entities: tuple[EntityDef, ...]
    dialog_nodes: tuple[DialogNode, ...]
    config: SkillConfig = field(default_factory=SkillConfig)

    def intent(self, name: str) -> IntentDef | None:
        for intent in self.intents:
            if intent.name == name:
                return intent
        return None

    def entity(self, name: str) -> EntityDef | None:
        for entity in self.entities:
            if entity.name == name:
                return entity
        return None


def _require(obj: dict, where: str, required: tuple[str, ...], optional: tuple[str, ...] = ()):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object, got {type(obj).__name__}")
    for key in required:
        if key not in obj:
            raise SchemaError(f"{where}: missing field {key!r}")
    extra = set(obj) - set(required) - set(optional)
    if extra:
        raise SchemaError(f"{where}: unexpected field(s) {sorted(extra)!r}")


def _typed(obj: dict, where: str, key: str, kinds, default=None):
    if key not in obj:
        return default
    value = obj[key]
    if not isinstance(value, kinds) or isinstance(value, bool) and bool not in (
        kinds if isinstance(kinds, tuple) else (kinds,)
    ):
        raise SchemaError(f"{where}.{key}: wrong type {type(value).__name__}")
    return value


def _string_list(obj, where: str) -> tuple[str, ...]:
    if not isinstance(obj, list) or not all(isinstance(x, str) for x in obj):
        raise SchemaError(f"{where}: expected a list of strings")
    return tuple(obj)


def _parse_example(raw, where: str) -> AnnotatedExample:
    if isinstance(raw, str):
        return AnnotatedExample(text=raw)
    _require(raw, where, ("text",), ("mentions",))
    text = _typed(raw, where, "text", str)
    mentions = []
    for j, m in enumerate(raw.get("mentions", ())):
        mwhere = f"{where}.mentions[{j}]"
        _require(m, mwhere, ("entity", "start", "end"), ("value",))
        mentions.append(
            MentionAnnotation(
                entity=_typed(m, mwhere, "entity", str),
                start=_typed(m, mwhere, "start", int),
                end=_typed(m, mwhere, "end", int),
                value=_typed(m, mwhere, "value", str),
            )
        )
    return AnnotatedExample(text=text, mentions=tuple(mentions))


def _parse_entity(raw, where: str) -> EntityDef:
    _require(raw, where, ("name", "kind"), ("values", "patterns", "fuzzy"))
    kind = _typed(raw, where, "kind", str)
    values = []
    for j, v in enumerate(raw.get("values", ())):
        vwhere = f"{where}.values[{j}]"
        _require(v, vwhere, ("value",), ("synonyms",))
        values.append(
            (_typed(v, vwhere, "value", str), _string_list(v.get("synonyms", []), vwhere))
        )
    return EntityDef(
        name=_typed(raw, where, "name", str),
        kind=kind,
        values=tuple(values),
        patterns=_string_list(raw.get("patterns", []), f"{where}.patterns"),
        fuzzy=_typed(raw, where, "fuzzy", bool, default=False),
    )


def _parse_node(raw, where: str) -> DialogNode:
    _require(raw, where, ("id", "condition"), ("responses", "context_updates", "jump_to"))
    condition_text = _typed(raw, where, "condition", str)
    try:
        condition = parse_condition(condition_text)
    except ConditionSyntaxError as exc:
        raise ValidationError(f"{where}: bad condition: {exc}") from exc
    updates = raw.get("context_updates", {})
    if not isinstance(updates, dict):
        raise SchemaError(f"{where}.context_updates: expected an object")
    return DialogNode(
        id=_typed(raw, where, "id", str),
        condition=condition,
        responses=_string_list(raw.get("responses", []), f"{where}.responses"),
        context_updates=tuple(sorted(updates.items())),
        jump_to=_typed(raw, where, "jump_to", str),
    )


def _parse_config(raw) -> SkillConfig:
    _require(
        raw,
        "config",
        (),
        (
            "intent_threshold",
            "oos_similarity_floor",
            "autocorrect_enabled",
            "max_jumps",
            "stopwords",
            "expansion_k",
        ),
    )
    defaults = SkillConfig()
    return SkillConfig(
        intent_threshold=float(_typed(raw, "config", "intent_threshold", (int, float), defaults.intent_threshold)),
        oos_similarity_floor=float(
            _typed(raw, "config", "oos_similarity_floor", (int, float), defaults.oos_similarity_floor)
        ),
        autocorrect_enabled=_typed(raw, "config", "autocorrect_enabled", bool, defaults.autocorrect_enabled),
        max_jumps=_typed(raw, "config", "max_jumps", int, defaults.max_jumps),
        stopwords=(
            _string_list(raw["stopwords"], "config.stopwords")
            if "stopwords" in raw
            else defaults.stopwords
        ),
        expansion_k=_typed(raw, "config", "expansion_k", int, defaults.expansion_k),
    )


def parse_skill(data: bytes | str) -> Skill:
    """Parse and validate a skill document.

    Raises SkillSyntaxError / SchemaError / ValidationError. Ordering of
    intents, entities and dialog nodes is preserved exactly.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SkillSyntaxError(exc.msg, exc.lineno, exc.colno) from exc

    _require(raw, "skill", ("name", "language", "intents"), ("entities", "dialog_nodes", "config"))
    for key in ("intents", "entities", "dialog_nodes"):
        if key in raw and not isinstance(raw[key], list):
            raise SchemaError(f"skill.{key}: expected a list")
    intents = []
    for i, item in enumerate(raw["intents"]):
        where = f"intents[{i}]"
        _require(item, where, ("name", "examples"))
        if not isinstance(item["examples"], list):
            raise SchemaError(f"{where}.examples: expected a list")
        examples = tuple(
            _parse_example(e, f"{where}.examples[{j}]") for j, e in enumerate(item["examples"])
        )
        intents.append(IntentDef(name=_typed(item, where, "name", str), examples=examples))
    entities = tuple(
        _parse_entity(e, f"entities[{i}]") for i, e in enumerate(raw.get("entities", []))
    )
    nodes = tuple(
        _parse_node(n, f"dialog_nodes[{i}]") for i, n in enumerate(raw.get("dialog_nodes", []))
    )
    skill = Skill(
        name=_typed(raw, "skill", "name", str),
        language=_typed(raw, "skill", "language", str),
        intents=tuple(intents),
        entities=entities,
        dialog_nodes=nodes,
        config=_parse_config(raw.get("config", {})),
    )
    validate_skill(skill)
    return skill


def _condition_refs(ast) -> tuple[set, set, bool]:
    """Collect (intent names, entity names, contains_anything_else) from an AST."""
    intents: set = set()
    entities: set = set()
    anything = False

    def walk(node):
        nonlocal anything
        if isinstance(node, IntentIs):
            intents.add(node.name)
        elif isinstance(node, EntityPresent):
            entities.add(node.name)
        elif isinstance(node, AnythingElse):
            anything = True
        elif isinstance(node, (And, Or)):
            for op in node.operands:
                walk(op)
        elif isinstance(node, Not):
            walk(node.operand)

    walk(ast)
    return intents, entities, anything


def validate_skill(skill: Skill) -> list[str]:
    """Check every invariant; raises ValidationError, returns warnings."""
    warnings: list[str] = []

    if skill.language != "en":
        raise ValidationError(f"language must be 'en', got {skill.language!r}")
    if not IDENT_RE.fullmatch(skill.name or ""):
        raise ValidationError(f"skill name {skill.name!r} is not a valid identifier")

    seen_intents: set[str] = set()
    for intent in skill.intents:
        if not IDENT_RE.fullmatch(intent.name):
            raise ValidationError(f"intent name {intent.name!r} is not a valid identifier")
        if intent.name in seen_intents:
            raise ValidationError(f"duplicate intent name {intent.name!r}")
        seen_intents.add(intent.name)
        if not intent.examples:
            raise ValidationError(f"intent {intent.name!r} has no examples")

    entity_names: set[str] = set()
    for entity in skill.entities:
        if not IDENT_RE.fullmatch(entity.name):
            raise ValidationError(f"entity name {entity.name!r} is not a valid identifier")
        if entity.name in entity_names:
            raise ValidationError(f"duplicate entity name {entity.name!r}")
        entity_names.add(entity.name)
        if entity.kind not in ENTITY_KINDS:
            raise ValidationError(f"entity {entity.name!r} has unknown kind {entity.kind!r}")
        if entity.kind == "dictionary" and not entity.values:
            raise ValidationError(f"dictionary entity {entity.name!r} has no values")
        if entity.kind == "pattern":
            if not entity.patterns:
                raise ValidationError(f"pattern entity {entity.name!r} has no patterns")
            for pattern in entity.patterns:
                try:
                    re.compile(pattern)
                except re.error as exc:
                    raise ValidationError(
                        f"entity {entity.name!r}: pattern {pattern!r} does not compile: {exc}"
                    ) from exc
        if entity.fuzzy and entity.kind != "dictionary":
            raise ValidationError(f"entity {entity.name!r}: fuzzy is only valid for dictionary kind")
        canonicals = [value for value, _ in entity.values]
        if len(set(canonicals)) != len(canonicals):
            raise ValidationError(f"entity {entity.name!r} has duplicate canonical values")

    known_entities = entity_names | set(SYSTEM_ENTITY_NAMES)

    # annotation spans: in-bounds, non-overlapping, declared entities
    for intent in skill.intents:
        for example in intent.examples:
            last_end = -1
            for m in sorted(example.mentions, key=lambda m: (m.start, m.end)):
                where = f"intent {intent.name!r} example {example.text!r}"
                if m.entity not in entity_names:
                    raise ValidationError(f"{where}: annotation references undeclared entity {m.entity!r}")
                if not (0 <= m.start < m.end <= len(example.text)):
                    raise ValidationError(f"{where}: annotation span ({m.start},{m.end}) out of bounds")
                if m.start < last_end:
                    raise ValidationError(f"{where}: overlapping annotation spans")
                last_end = m.end

    # cross-intent duplicate examples: first (document-order) intent wins at
    # rule-match time, so flag the collision
    seen_examples: dict[str, str] = {}
    for intent in skill.intents:
        for example in intent.examples:
            key = " ".join(example.text.lower().split())
            if key in seen_examples and seen_examples[key] != intent.name:
                warnings.append(
                    f"example {example.text!r} of intent {intent.name!r} duplicates one in "
                    f"intent {seen_examples[key]!r}; rule matching keeps the first"
                )
            else:
                seen_examples.setdefault(key, intent.name)

    node_ids = [node.id for node in skill.dialog_nodes]
    if len(set(node_ids)) != len(node_ids):
        dupes = sorted({i for i in node_ids if node_ids.count(i) > 1})
        raise ValidationError(f"duplicate dialog node id(s) {dupes!r}")
    node_id_set = set(node_ids)
    context_vars = {key for node in skill.dialog_nodes for key, _ in node.context_updates}

    has_fallback = False
    for node in skill.dialog_nodes:
        if not node.id:
            raise ValidationError("dialog node with empty id")
        if node.jump_to is not None and node.jump_to not in node_id_set:
            raise ValidationError(f"node {node.id!r}: jump_to target {node.jump_to!r} does not exist")
        if not node.responses and node.jump_to is None:
            raise ValidationError(f"node {node.id!r} has no responses and no jump_to")
        intents_ref, entities_ref, anything = _condition_refs(node.condition)
        if isinstance(node.condition, AnythingElse):
            has_fallback = True
        elif anything:
            raise ValidationError(
                f"node {node.id!r}: anything_else may only be used as the whole condition"
            )
        for name in sorted(intents_ref):
            if name not in seen_intents:
                raise ValidationError(f"node {node.id!r}: condition references unknown intent {name!r}")
        for name in sorted(entities_ref):
            if name not in known_entities:
                raise ValidationError(f"node {node.id!r}: condition references unknown entity {name!r}")
        for key, value in node.context_updates:
            if not IDENT_RE.fullmatch(key):
                raise ValidationError(f"node {node.id!r}: context variable {key!r} is not a valid name")
            if isinstance(value, str):
                warnings.extend(_check_placeholders(value, node.id, known_entities, context_vars))
        for response in node.responses:
            warnings.extend(_check_placeholders(response, node.id, known_entities, context_vars))
    if skill.dialog_nodes and not has_fallback:
        warnings.append("skill has no anything_else node; unmatched inputs will error")

    if not (0.0 <= skill.config.intent_threshold <= 1.0):
        raise ValidationError("config.intent_threshold must be within [0,1]")
    if not (0.0 <= skill.config.oos_similarity_floor <= 1.0):
        raise ValidationError("config.oos_similarity_floor must be within [0,1]")
    if skill.config.max_jumps < 1:
        raise ValidationError("config.max_jumps must be >= 1")
    if skill.config.expansion_k < 1:
        raise ValidationError("config.expansion_k must be >= 1")

    # contextual entities need enough annotated mentions to train on
    for entity in skill.entities:
        if entity.kind != "contextual":
            continue
        count = sum(
            1
            for intent in skill.intents
            for example in intent.examples
            for m in example.mentions
            if m.entity == entity.name
        )
        if count < 5:
            warnings.append(
                f"contextual entity {entity.name!r} has only {count} annotated mentions "
                f"(need 5); tagger training will skip it"
            )
    return warnings


def _check_placeholders(text: str, node_id: str, entities: set, context_vars: set) -> list[str]:
    warnings = []
    for sigil, name in PLACEHOLDER_RE.findall(text):
        if sigil == "@" and name not in entities:
            raise ValidationError(f"node {node_id!r}: placeholder references unknown entity {name!r}")
        if sigil == "$" and name not in context_vars:
            warnings.append(
                f"node {node_id!r}: placeholder ${name} is never assigned by a context update"
            )
    return warnings


def _example_to_json(example: AnnotatedExample) -> dict:
    out: dict = {"text": example.text}
    if example.mentions:
        out["mentions"] = [
            {"entity": m.entity, "start": m.start, "end": m.end}
            | ({"value": m.value} if m.value is not None else {})
            for m in example.mentions
        ]
    return out


def _entity_to_json(entity: EntityDef) -> dict:
    out: dict = {"name": entity.name, "kind": entity.kind}
    if entity.kind == "dictionary":
        out["values"] = [
            {"value": value} | ({"synonyms": list(synonyms)} if synonyms else {})
            for value, synonyms in entity.values
        ]
        out["fuzzy"] = entity.fuzzy
    if entity.kind == "pattern":
        out["patterns"] = list(entity.patterns)
    return out


def _node_to_json(node: DialogNode) -> dict:
    out: dict = {
        "id": node.id,
        "condition": format_condition(node.condition),
        "responses": list(node.responses),
        "context_updates": dict(node.context_updates),
    }
    if node.jump_to is not None:
        out["jump_to"] = node.jump_to
    return out


def serialize_skill(skill: Skill) -> bytes:
    """Serialize to the canonical document form (sorted keys, 2-space indent)."""
    doc = {
        "name": skill.name,
        "language": skill.language,
        "intents": [
            {"name": i.name, "examples": [_example_to_json(e) for e in i.examples]}
            for i in skill.intents
        ],
        "entities": [_entity_to_json(e) for e in skill.entities],
        "dialog_nodes": [_node_to_json(n) for n in skill.dialog_nodes],
        "config": {
            "intent_threshold": skill.config.intent_threshold,
            "oos_similarity_floor": skill.config.oos_similarity_floor,
            "autocorrect_enabled": skill.config.autocorrect_enabled,
            "max_jumps": skill.config.max_jumps,
            "stopwords": list(skill.config.stopwords),
            "expansion_k": skill.config.expansion_k,
        },
    }
    return (json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def load_skill(path) -> Skill:
    """Read and parse a skill file."""
    with open(path, "rb") as fh:
        return parse_skill(fh.read())

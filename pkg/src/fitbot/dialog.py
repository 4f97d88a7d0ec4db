"""Dialog node evaluation: first matching node answers the turn.

Nodes are scanned in document order; the winner's context updates apply
before its responses render, and jump_to chains execute their targets
unconditionally (responses accumulate). A turn never crashes on bad
placeholders or type mismatches: those degrade to empty text / false with a
diagnostic recorded on the TurnResult.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .conditions import (
    And,
    AnythingElse,
    EntityPresent,
    IntentIs,
    Not,
    Or,
    TrueCond,
    VarCompare,
)
from .entities import EntityMention
from .intents import ResolvedIntent
from .skill import PLACEHOLDER_RE, DialogNode, Skill


class JumpLimitExceeded(RuntimeError):
    """A jump_to chain exceeded config.max_jumps (cycle guard)."""


class NoFallback(RuntimeError):
    """No node fired and the skill has no anything_else node."""


@dataclass
class SessionState:
    session_id: str
    context: dict = field(default_factory=dict)
    last_node: str | None = None
    turn_counter: int = 0
    updated_at: float = 0.0

    def copy(self) -> "SessionState":
        return SessionState(
            session_id=self.session_id,
            context=dict(self.context),
            last_node=self.last_node,
            turn_counter=self.turn_counter,
            updated_at=self.updated_at,
        )


@dataclass(frozen=True)
class TurnResult:
    responses: tuple[str, ...]
    fired_node: str
    resolved: ResolvedIntent
    entities: tuple[EntityMention, ...]
    updated_session: SessionState
    diagnostics: tuple[str, ...] = ()


def _as_number(value) -> float | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return None
    return None


def _as_text(value) -> str:
    if value is None:
        return ""
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def evaluate_condition(
    ast,
    resolved: ResolvedIntent,
    entities: list[EntityMention],
    context: dict,
    diagnostics: list[str] | None = None,
) -> bool:
    if isinstance(ast, IntentIs):
        return resolved.is_in_scope and resolved.prediction.intent == ast.name
    if isinstance(ast, EntityPresent):
        for mention in entities:
            if mention.entity != ast.name:
                continue
            if ast.value is None or mention.value_text() == ast.value:
                return True
        return False
    if isinstance(ast, VarCompare):
        return _compare(ast, context, diagnostics)
    if isinstance(ast, (TrueCond, AnythingElse)):
        return True
    if isinstance(ast, Not):
        return not evaluate_condition(ast.operand, resolved, entities, context, diagnostics)
    if isinstance(ast, And):
        return all(
            evaluate_condition(op, resolved, entities, context, diagnostics)
            for op in ast.operands
        )
    if isinstance(ast, Or):
        return any(
            evaluate_condition(op, resolved, entities, context, diagnostics)
            for op in ast.operands
        )
    raise TypeError(f"not a condition node: {ast!r}")


def _compare(ast: VarCompare, context: dict, diagnostics: list[str] | None) -> bool:
    present = ast.name in context
    value = context.get(ast.name)
    if ast.op == "defined":
        return present and value is not None and value is not False
    if not present:
        return ast.op == "!="
    if ast.op in ("==", "!="):
        left, right = _as_number(value), _as_number(ast.literal)
        if left is not None and right is not None:
            equal = left == right
        else:
            equal = _as_text(value) == _as_text(ast.literal)
        return equal if ast.op == "==" else not equal
    left, right = _as_number(value), _as_number(ast.literal)
    if left is None or right is None:
        if diagnostics is not None:
            diagnostics.append(
                f"type mismatch: ${ast.name} {ast.op} {ast.literal!r} with value {value!r}"
            )
        return False
    if ast.op == "<":
        return left < right
    if ast.op == "<=":
        return left <= right
    if ast.op == ">":
        return left > right
    return left >= right


def _render(
    template: str,
    entities: list[EntityMention],
    context: dict,
    diagnostics: list[str],
) -> str:
    def substitute(match):
        sigil, name = match.group(1), match.group(2)
        if sigil == "@":
            for mention in entities:
                if mention.entity == name:
                    return mention.value_text()
            diagnostics.append(f"no mention of @{name} to substitute")
            return ""
        if name in context:
            return _as_text(context[name])
        diagnostics.append(f"context variable ${name} is not set")
        return ""

    return PLACEHOLDER_RE.sub(substitute, template)


def _resolve_update(value, entities, context, diagnostics):
    if not isinstance(value, str):
        return value
    whole = PLACEHOLDER_RE.fullmatch(value)
    if whole:
        sigil, name = whole.group(1), whole.group(2)
        if sigil == "@":
            for mention in entities:
                if mention.entity == name:
                    return mention.value_text()
            diagnostics.append(f"no mention of @{name} for context update")
            return None
        if name in context:
            return context[name]
        diagnostics.append(f"context variable ${name} is not set")
        return None
    if PLACEHOLDER_RE.search(value):
        return _render(value, entities, context, diagnostics)
    return value


def step(
    skill: Skill,
    session: SessionState,
    resolved: ResolvedIntent,
    entities: list[EntityMention],
    input_text: str,
) -> TurnResult:
    """Evaluate one turn. Pure: same inputs produce the same TurnResult."""
    diagnostics: list[str] = []
    context = dict(session.context)

    fired: DialogNode | None = None
    for node in skill.dialog_nodes:
        if evaluate_condition(node.condition, resolved, entities, context, diagnostics):
            fired = node
            break
    if fired is None:
        raise NoFallback("no dialog node matched and no anything_else node exists")

    responses: list[str] = []
    node = fired
    jumps = 0
    visited_last = node.id
    while True:
        for key, value in node.context_updates:
            context[key] = _resolve_update(value, entities, context, diagnostics)
        for template in node.responses:
            responses.append(_render(template, entities, context, diagnostics))
        visited_last = node.id
        if node.jump_to is None:
            break
        jumps += 1
        if jumps > skill.config.max_jumps:
            raise JumpLimitExceeded(
                f"more than {skill.config.max_jumps} jump_to transitions from node {fired.id!r}"
            )
        node = next(n for n in skill.dialog_nodes if n.id == node.jump_to)

    updated = replace(
        session,
        context=context,
        last_node=visited_last,
        turn_counter=session.turn_counter + 1,
    )
    return TurnResult(
        responses=tuple(responses),
        fired_node=fired.id,
        resolved=resolved,
        entities=tuple(entities),
        updated_session=updated,
        diagnostics=tuple(diagnostics),
    )

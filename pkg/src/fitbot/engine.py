"""One place that wires the whole pipeline together.

The REPL, the eval command and the HTTP service all drive an Assistant, so
a given (skill, input, session snapshot, reference time) produces the same
turn everywhere.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

from . import dialog, entities, intents, reformulation, textprep
from .dialog import SessionState, TurnResult
from .entities import ContextualTagger, EntityMention
from .intents import IntentModel, IntentPrediction, ResolvedIntent
from .reformulation import ReformulatedQuery, TaskCatalog, UserProfile
from .skill import Skill
from .textprep import Token, Vocabulary

# reserved context keys maintained by the engine
REFERENCE_TIME_VAR = "sys_reference_time"
TASK_ID_VAR = "srq_task_id"
TASK_STATE_VAR = "srq_task_state"


@dataclass(frozen=True)
class NluResult:
    """Per-utterance understanding: what the classifiers and recognizers saw."""

    tokens: tuple[Token, ...]
    corrected_text: str | None
    intents: tuple[IntentPrediction, ...]
    resolved: ResolvedIntent
    mentions: tuple[EntityMention, ...]


@dataclass(frozen=True)
class Turn:
    nlu: NluResult
    result: TurnResult
    srq: ReformulatedQuery | None
    profile: UserProfile | None  # updated profile, when reformulation ran


class Assistant:
    """A trained skill plus every derived artifact, immutable after build."""

    def __init__(self, skill: Skill, catalog: TaskCatalog | None = None,
                 extra_words: dict[str, int] | None = None):
        self.skill = skill
        self.catalog = catalog
        self.vocabulary: Vocabulary = textprep.build_vocabulary(skill, extra_words)
        self.intent_model: IntentModel = intents.train(skill)
        self.tagger: ContextualTagger | None = entities.train_contextual(skill)

    def understand(self, text: str, reference: dt.datetime) -> NluResult:
        tokens = textprep.tokenize(text)
        if self.skill.config.autocorrect_enabled:
            tokens = textprep.autocorrect(tokens, self.vocabulary)
        corrected_text = textprep.apply_corrections(text, tokens)

        resolved = intents.resolve(tokens, self.intent_model, self.skill.config)
        if resolved.is_in_scope and resolved.prediction.source == "rule":
            ranked: tuple[IntentPrediction, ...] = (resolved.prediction,)
        else:
            try:
                ranked = tuple(intents.classify(tokens, self.intent_model))
            except intents.EmptyInput:
                ranked = ()

        defs = list(self.skill.entities)
        mentions = entities.recognize_pattern(text, defs)
        mentions += entities.recognize_dictionary(tokens, defs)
        mentions += entities.recognize_fuzzy(tokens, defs)
        mentions += entities.recognize_system(tokens, reference)
        mentions += entities.recognize_contextual(tokens, self.tagger)
        resolved_mentions = entities.resolve_overlaps(mentions)

        return NluResult(
            tokens=tuple(tokens),
            corrected_text=corrected_text,
            intents=ranked,
            resolved=resolved,
            mentions=tuple(resolved_mentions),
        )

    def message(
        self,
        session: SessionState,
        text: str,
        reference: dt.datetime,
        profile: UserProfile | None = None,
    ) -> Turn:
        """Run one full turn against a session snapshot. Pure: no state is
        kept on the assistant; the updated session rides on the result."""
        nlu = self.understand(text, reference)
        working = session.copy()
        working.context[REFERENCE_TIME_VAR] = reference.isoformat()

        result = dialog.step(self.skill, working, nlu.resolved, list(nlu.mentions), text)

        srq = None
        updated_profile = profile
        if self.catalog is not None and profile is not None:
            srq, updated_profile = self._reformulate_turn(result.updated_session, nlu, profile)
        return Turn(nlu=nlu, result=result, srq=srq, profile=updated_profile)

    def _reformulate_turn(
        self, session: SessionState, nlu: NluResult, profile: UserProfile
    ) -> tuple[ReformulatedQuery | None, UserProfile]:
        terms = [t.normalized for t in nlu.tokens]
        previous = None
        if TASK_ID_VAR in session.context:
            try:
                state_index = int(session.context.get(TASK_STATE_VAR, 0))
            except (TypeError, ValueError):  # client override with garbage
                state_index = 0
            previous = (str(session.context[TASK_ID_VAR]), state_index)
        try:
            srq = reformulation.reformulate(
                terms,
                profile,
                self.catalog,
                previous,
                self.skill.config.stopwords,
                self.skill.config.expansion_k,
            )
        except reformulation.EmptyQuery:
            return None, profile
        session.context[TASK_ID_VAR] = srq.task_id
        session.context[TASK_STATE_VAR] = srq.task_state_index
        return srq, reformulation.update_profile(profile, srq)


def resolve_reference_time(
    request_context: dict | None,
    session_context: dict,
    arrival: dt.datetime,
) -> dt.datetime:
    """Reference time for system entities: an explicit request override wins,
    then the value pinned in the session, then the arrival clock."""
    for source in (request_context or {}, session_context):
        value = source.get(REFERENCE_TIME_VAR)
        if isinstance(value, str):
            try:
                return dt.datetime.fromisoformat(value)
            except ValueError:
                pass
    return arrival

"""Contextual query reformulation: task model, user profile, SRQ.

A query is attached to one task state from the catalog, expanded with terms
that are simultaneously linked to task and profile ("complete" terms), then
refined: no stopwords, no duplicates, no out-of-context expansions. Profile
weights move by an exponential update so they stay inside [0,1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

# expansion terms weaker than this in the task state are out of context
# and removed during refinement
MIN_TASK_WEIGHT = 0.1

PROFILE_REINFORCE = 0.9  # new = 0.9*old + 0.1 for accepted terms
PROFILE_DECAY = 0.99  # untouched terms decay each update


class CatalogError(ValueError):
    """Malformed or invariant-breaking task catalog."""


class EmptyQuery(ValueError):
    """Query contained nothing but stopwords."""


@dataclass(frozen=True)
class TaskState:
    label: str
    terms: dict[str, float]


@dataclass(frozen=True)
class TaskDef:
    id: str
    states: tuple[TaskState, ...]


@dataclass(frozen=True)
class TaskCatalog:
    tasks: tuple[TaskDef, ...]

    def task(self, task_id: str) -> TaskDef | None:
        for task in self.tasks:
            if task.id == task_id:
                return task
        return None


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    term_weights: dict[str, float] = field(default_factory=dict)
    observation_count: int = 0

    def weight(self, term: str) -> float:
        return self.term_weights.get(term, 0.0)


@dataclass(frozen=True)
class ExpansionTerm:
    term: str
    task_weight: float
    profile_weight: float


@dataclass(frozen=True)
class ReformulatedQuery:
    original_terms: tuple[str, ...]
    expansion_terms: tuple[ExpansionTerm, ...]
    task_id: str
    task_state_index: int
    final_terms: tuple[str, ...]


def parse_catalog(data: bytes | str) -> TaskCatalog:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"malformed catalog JSON: {exc}") from exc
    if not isinstance(raw, dict) or "tasks" not in raw or not isinstance(raw["tasks"], list):
        raise CatalogError("catalog must be an object with a 'tasks' list")
    tasks = []
    for i, t in enumerate(raw["tasks"]):
        if not isinstance(t, dict) or "id" not in t or "states" not in t:
            raise CatalogError(f"tasks[{i}]: need 'id' and 'states'")
        states = []
        for j, s in enumerate(t["states"]):
            if not isinstance(s, dict) or "label" not in s or "terms" not in s:
                raise CatalogError(f"tasks[{i}].states[{j}]: need 'label' and 'terms'")
            terms = {}
            for term, weight in s["terms"].items():
                weight = float(weight)
                if not 0.0 < weight <= 1.0:
                    raise CatalogError(
                        f"tasks[{i}].states[{j}]: weight of {term!r} must be in (0,1]"
                    )
                terms[term.lower()] = weight
            states.append(TaskState(label=str(s["label"]), terms=terms))
        if not states:
            raise CatalogError(f"tasks[{i}]: needs at least one state")
        tasks.append(TaskDef(id=str(t["id"]), states=tuple(states)))
    ids = [t.id for t in tasks]
    if len(set(ids)) != len(ids):
        raise CatalogError("duplicate task ids")
    if not tasks:
        raise CatalogError("catalog has no tasks")
    return TaskCatalog(tasks=tuple(tasks))


def load_catalog(path) -> TaskCatalog:
    with open(path, "rb") as fh:
        return parse_catalog(fh.read())


def profile_to_json(profile: UserProfile) -> dict:
    return {
        "user_id": profile.user_id,
        "term_weights": dict(sorted(profile.term_weights.items())),
        "observation_count": profile.observation_count,
    }


def profile_from_json(raw: dict) -> UserProfile:
    return UserProfile(
        user_id=str(raw["user_id"]),
        term_weights={str(k).lower(): float(v) for k, v in raw.get("term_weights", {}).items()},
        observation_count=int(raw.get("observation_count", 0)),
    )


def detect_task(query_terms: list[str], catalog: TaskCatalog) -> tuple[str, int, float]:
    """Best (task, state) by summed term weight; falls back to the first
    task's first state on a zero score."""
    best: tuple[float, str, int] | None = None
    for task in catalog.tasks:
        for index, state in enumerate(task.states):
            score = sum(state.terms.get(term, 0.0) for term in query_terms)
            key = (-score, task.id, index)
            if best is None or key < best:
                best = key
    score = -best[0]
    if score == 0.0:
        return catalog.tasks[0].id, 0, 0.0
    return best[1], best[2], score


def advance_task_state(
    current: tuple[str, int] | None, detected: tuple[str, int]
) -> tuple[str, int]:
    """Within one task the state index never regresses; a different task
    switches outright."""
    if current is None or current[0] != detected[0]:
        return detected
    return (current[0], max(current[1], detected[1]))


def score_candidate_terms(
    query_terms: list[str],
    task_state: TaskState,
    profile: UserProfile,
    stopwords,
) -> list[ExpansionTerm]:
    """Complete candidates (task- and profile-linked), best product first."""
    exclude = set(query_terms) | set(stopwords)
    candidates = []
    for term in task_state.terms:
        if term in exclude:
            continue
        task_weight = task_state.terms[term]
        profile_weight = profile.weight(term)
        if task_weight > 0.0 and profile_weight > 0.0:
            candidates.append(ExpansionTerm(term, task_weight, profile_weight))
    return sorted(candidates, key=lambda c: (-(c.task_weight * c.profile_weight), c.term))


def reformulate(
    query_terms: list[str],
    profile: UserProfile,
    catalog: TaskCatalog,
    session_task_state: tuple[str, int] | None,
    stopwords,
    expansion_k: int,
) -> ReformulatedQuery:
    """Expand then refine one query against the catalog and profile."""
    normalized = [t.lower() for t in query_terms]
    content_terms = [t for t in normalized if t not in set(stopwords)]
    if not content_terms:
        raise EmptyQuery("query contains only stopwords")

    detected_id, detected_state, _ = detect_task(content_terms, catalog)
    task_id, state_index = advance_task_state(session_task_state, (detected_id, detected_state))
    task = catalog.task(task_id)
    if task is None or state_index >= len(task.states):  # stale session state
        task_id, state_index = detected_id, detected_state
        task = catalog.task(task_id)
    state = task.states[state_index]

    ranked = score_candidate_terms(content_terms, state, profile, stopwords)
    expanded = ranked[:expansion_k]
    kept = [term for term in expanded if term.task_weight >= MIN_TASK_WEIGHT]

    final: list[str] = []
    seen: set[str] = set()
    for term in content_terms + [t.term for t in kept]:
        if term not in seen:
            seen.add(term)
            final.append(term)
    return ReformulatedQuery(
        original_terms=tuple(normalized),
        expansion_terms=tuple(kept),
        task_id=task_id,
        task_state_index=state_index,
        final_terms=tuple(final),
    )


def update_profile(profile: UserProfile, accepted: ReformulatedQuery) -> UserProfile:
    """Reinforce the accepted query's terms, decay everything else."""
    accepted_terms = set(accepted.final_terms)
    weights: dict[str, float] = {}
    for term, weight in profile.term_weights.items():
        if term in accepted_terms:
            weights[term] = PROFILE_REINFORCE * weight + (1 - PROFILE_REINFORCE)
        else:
            weights[term] = PROFILE_DECAY * weight
    for term in accepted_terms:
        if term not in weights:
            weights[term] = 1 - PROFILE_REINFORCE
    return replace(
        profile,
        term_weights=weights,
        observation_count=profile.observation_count + 1,
    )

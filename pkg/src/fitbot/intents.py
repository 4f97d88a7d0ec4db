"""Intent detection: rule match first, then Multinomial Naive Bayes.

Resolution order per message: exact rule match (confidence 1.0), then an
irrelevance veto (max TF-IDF cosine against the training examples must reach
the configured floor), then the NB posterior checked against the intent
threshold. Everything is deterministic: ties break by intent document order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .skill import Skill, SkillConfig
from .textprep import Token, tokenize

OOS_BELOW_THRESHOLD = "below_threshold"
OOS_IRRELEVANT = "irrelevant_input"
OOS_NO_INTENTS = "no_intents"


class TrainingError(ValueError):
    """An intent contributed no usable tokens."""


class EmptyInput(ValueError):
    """No in-vocabulary tokens to classify."""


@dataclass(frozen=True)
class IntentPrediction:
    intent: str
    confidence: float
    source: str  # "rule" or "statistical"


@dataclass(frozen=True)
class ResolvedIntent:
    """IS carries the winning prediction; OOS carries a reason."""

    prediction: IntentPrediction | None
    oos_reason: str | None = None

    @property
    def is_in_scope(self) -> bool:
        return self.prediction is not None and self.oos_reason is None

    @classmethod
    def in_scope(cls, prediction: IntentPrediction) -> "ResolvedIntent":
        return cls(prediction=prediction)

    @classmethod
    def out_of_scope(cls, reason: str) -> "ResolvedIntent":
        return cls(prediction=None, oos_reason=reason)


@dataclass(frozen=True)
class IntentModel:
    intent_order: tuple[str, ...]
    class_log_priors: dict[str, float]
    token_log_likelihoods: dict[str, dict[str, float]]  # intent -> token -> logP
    vocabulary: frozenset[str]
    exact_index: dict[str, str]  # normalized example text -> intent
    idf: dict[str, float]
    example_vectors: tuple[dict[str, float], ...]  # L2-normalized TF-IDF


def _example_tokens(text: str) -> list[str]:
    return [t.normalized for t in tokenize(text)]


def normalize_utterance(tokens: list[Token]) -> str:
    return " ".join(t.normalized for t in tokens)


def train(skill: Skill) -> IntentModel:
    """Fit priors, smoothed token likelihoods, the exact-match index and the
    per-example TF-IDF vectors. Deterministic for a given skill."""
    if not skill.intents:
        raise TrainingError("skill declares no intents")

    documents: list[tuple[str, list[str]]] = []  # (intent, tokens) per example
    exact_index: dict[str, str] = {}
    for intent in skill.intents:
        for example in intent.examples:
            tokens = _example_tokens(example.text)
            documents.append((intent.name, tokens))
            if tokens:  # a degenerate empty example must not rule-match ""
                exact_index.setdefault(" ".join(tokens), intent.name)

    vocabulary = sorted({token for _, tokens in documents for token in tokens})
    vocab_size = len(vocabulary)

    class_counts: dict[str, int] = {i.name: 0 for i in skill.intents}
    token_counts: dict[str, dict[str, int]] = {i.name: {} for i in skill.intents}
    for intent_name, tokens in documents:
        class_counts[intent_name] += 1
        counts = token_counts[intent_name]
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1

    total_examples = len(documents)
    log_priors: dict[str, float] = {}
    likelihoods: dict[str, dict[str, float]] = {}
    for intent in skill.intents:
        counts = token_counts[intent.name]
        total_tokens = sum(counts.values())
        if total_tokens == 0:
            raise TrainingError(f"intent {intent.name!r} has no usable tokens")
        log_priors[intent.name] = math.log(class_counts[intent.name] / total_examples)
        denominator = total_tokens + vocab_size
        likelihoods[intent.name] = {
            token: math.log((counts.get(token, 0) + 1) / denominator) for token in vocabulary
        }

    # TF-IDF domain representation: idf = ln(N/df), vectors L2-normalized
    document_frequency: dict[str, int] = {}
    for _, tokens in documents:
        for token in set(tokens):
            document_frequency[token] = document_frequency.get(token, 0) + 1
    idf = {
        token: math.log(total_examples / document_frequency[token]) for token in vocabulary
    }
    example_vectors = tuple(
        _tfidf_vector(tokens, idf) for _, tokens in documents
    )

    return IntentModel(
        intent_order=tuple(i.name for i in skill.intents),
        class_log_priors=log_priors,
        token_log_likelihoods=likelihoods,
        vocabulary=frozenset(vocabulary),
        exact_index=exact_index,
        idf=idf,
        example_vectors=example_vectors,
    )


def _tfidf_vector(tokens: list[str], idf: dict[str, float]) -> dict[str, float]:
    counts: dict[str, int] = {}
    for token in tokens:
        if token in idf:
            counts[token] = counts.get(token, 0) + 1
    vector = {token: counts[token] * idf[token] for token in sorted(counts)}
    norm = math.sqrt(sum(w * w for w in vector.values()))
    if norm == 0.0:
        return {}
    return {token: w / norm for token, w in vector.items()}


def match_rules(tokens: list[Token], model: IntentModel) -> IntentPrediction | None:
    """Exact match of the normalized utterance against a training example."""
    intent = model.exact_index.get(normalize_utterance(tokens))
    if intent is None:
        return None
    return IntentPrediction(intent=intent, confidence=1.0, source="rule")


def classify(tokens: list[Token], model: IntentModel) -> list[IntentPrediction]:
    """NB posterior over every intent, descending confidence.

    Raises EmptyInput when no token is in the model vocabulary.
    """
    known = [t.normalized for t in tokens if t.normalized in model.vocabulary]
    if not known:
        raise EmptyInput("no in-vocabulary tokens")
    scores: list[float] = []
    for intent in model.intent_order:
        likelihood = model.token_log_likelihoods[intent]
        scores.append(model.class_log_priors[intent] + sum(likelihood[t] for t in known))
    peak = max(scores)
    weights = [math.exp(s - peak) for s in scores]
    total = sum(weights)
    predictions = [
        IntentPrediction(intent=intent, confidence=w / total, source="statistical")
        for intent, w in zip(model.intent_order, weights)
    ]
    # stable sort keeps document order on ties
    return sorted(predictions, key=lambda p: -p.confidence)


def irrelevance_score(tokens: list[Token], model: IntentModel) -> float:
    """Maximum cosine similarity between the input and any training example."""
    vector = _tfidf_vector([t.normalized for t in tokens], model.idf)
    if not vector:
        return 0.0
    best = 0.0
    for example in model.example_vectors:
        if len(example) > len(vector):
            small, large = vector, example
        else:
            small, large = example, vector
        score = sum(w * large[token] for token, w in small.items() if token in large)
        if score > best:
            best = score
    return min(best, 1.0)


def resolve(tokens: list[Token], model: IntentModel, config: SkillConfig) -> ResolvedIntent:
    """Rules, then irrelevance veto, then thresholded NB (>= is in scope)."""
    rule_hit = match_rules(tokens, model)
    if rule_hit is not None:
        return ResolvedIntent.in_scope(rule_hit)
    if irrelevance_score(tokens, model) < config.oos_similarity_floor:
        return ResolvedIntent.out_of_scope(OOS_IRRELEVANT)
    try:
        ranked = classify(tokens, model)
    except EmptyInput:
        return ResolvedIntent.out_of_scope(OOS_NO_INTENTS)
    top = ranked[0]
    if top.confidence >= config.intent_threshold:
        return ResolvedIntent.in_scope(top)
    return ResolvedIntent.out_of_scope(OOS_BELOW_THRESHOLD)

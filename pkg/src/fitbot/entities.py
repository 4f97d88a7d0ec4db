"""Entity recognition: dictionary, fuzzy, pattern, system and contextual.

Each recognizer emits EntityMention spans independently; resolve_overlaps
merges them into one non-overlapping set, preferring longer spans, higher
confidence, and more explicit recognizers (pattern > dictionary > system >
fuzzy > contextual).

System entities are parsed by a small grammar over the token stream and
never read a clock: the caller supplies the reference datetime.
"""

from __future__ import annotations

import datetime as dt
import random
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

from .skill import EntityDef, Skill
from .textprep import Token, levenshtein, tokenize

RECOGNIZER_PRECEDENCE = ("pattern", "dictionary", "system", "fuzzy", "contextual")

PERCEPTRON_SEED = 13
PERCEPTRON_EPOCHS = 5
MIN_CONTEXTUAL_MENTIONS = 5


@dataclass(frozen=True)
class DateValue:
    kind = "date"
    date: dt.date

    def canonical_text(self) -> str:
        return self.date.isoformat()

    def to_json(self):
        return {"kind": "date", "date": self.date.isoformat()}


@dataclass(frozen=True)
class TimeValue:
    kind = "time"
    hour: int
    minute: int

    def canonical_text(self) -> str:
        return f"{self.hour:02d}:{self.minute:02d}"

    def to_json(self):
        return {"kind": "time", "hour": self.hour, "minute": self.minute}


@dataclass(frozen=True)
class NumberValue:
    kind = "number"
    value: Decimal

    def canonical_text(self) -> str:
        return str(self.value)

    def to_json(self):
        return {"kind": "number", "value": str(self.value)}


@dataclass(frozen=True)
class CurrencyValue:
    kind = "currency"
    amount: Decimal
    code: str  # USD | EUR | GBP

    def canonical_text(self) -> str:
        return f"{self.amount} {self.code}"

    def to_json(self):
        return {"kind": "currency", "amount": str(self.amount), "code": self.code}


@dataclass(frozen=True)
class RangeValue:
    kind = "range"
    low: Decimal
    high: Decimal

    def canonical_text(self) -> str:
        return f"{self.low}..{self.high}"

    def to_json(self):
        return {"kind": "range", "low": str(self.low), "high": str(self.high)}


SystemValue = DateValue | TimeValue | NumberValue | CurrencyValue | RangeValue


@dataclass(frozen=True)
class EntityMention:
    entity: str
    value: object  # canonical string, or a SystemValue
    start: int
    end: int
    confidence: float
    recognizer: str

    def value_text(self) -> str:
        if isinstance(self.value, (DateValue, TimeValue, NumberValue, CurrencyValue, RangeValue)):
            return self.value.canonical_text()
        return str(self.value)

    def value_json(self):
        if isinstance(self.value, (DateValue, TimeValue, NumberValue, CurrencyValue, RangeValue)):
            return self.value.to_json()
        return self.value


def _normalize_phrase(text: str) -> str:
    return " ".join(t.normalized for t in tokenize(text))


def recognize_dictionary(tokens: list[Token], entity_defs: list[EntityDef]) -> list[EntityMention]:
    """Longest-first exact n-gram match against values and synonyms."""
    mentions: list[EntityMention] = []
    words = [t.normalized for t in tokens]
    for entity in entity_defs:
        if entity.kind != "dictionary":
            continue
        phrases: dict[str, str] = {}
        max_len = 1
        for value, synonyms in entity.values:
            for variant in (value, *synonyms):
                phrase = _normalize_phrase(variant)
                if phrase:
                    phrases.setdefault(phrase, value)
                    max_len = max(max_len, phrase.count(" ") + 1)
        used: set[int] = set()
        for n in range(min(max_len, len(words)), 0, -1):
            for i in range(len(words) - n + 1):
                span = range(i, i + n)
                if any(j in used for j in span):
                    continue
                canonical = phrases.get(" ".join(words[i : i + n]))
                if canonical is None:
                    continue
                used.update(span)
                mentions.append(
                    EntityMention(
                        entity=entity.name,
                        value=canonical,
                        start=tokens[i].start,
                        end=tokens[i + n - 1].end,
                        confidence=1.0,
                        recognizer="dictionary",
                    )
                )
    return mentions


def _fuzzy_allowance(length: int) -> int:
    if length <= 3:
        return 0
    if length <= 7:
        return 1
    return 2


def recognize_fuzzy(tokens: list[Token], entity_defs: list[EntityDef]) -> list[EntityMention]:
    """Near-miss single-token matches; exact hits are the dictionary's job."""
    mentions: list[EntityMention] = []
    for entity in entity_defs:
        if entity.kind != "dictionary" or not entity.fuzzy:
            continue
        singles: list[tuple[str, str]] = []  # (compared form, canonical)
        for value, synonyms in entity.values:
            for variant in (value, *synonyms):
                form = variant.lower()
                if form and " " not in form:
                    singles.append((form, value))
        for token in tokens:
            allowance = _fuzzy_allowance(len(token.normalized))
            if allowance == 0:
                continue
            best: tuple | None = None
            for form, canonical in singles:
                distance = levenshtein(token.normalized, form)
                if distance < 1 or distance > allowance:
                    continue
                key = (distance, -len(form), canonical, form)
                if best is None or key < best:
                    best = key
            if best is not None:
                distance, neg_len, canonical, form = best
                mentions.append(
                    EntityMention(
                        entity=entity.name,
                        value=canonical,
                        start=token.start,
                        end=token.end,
                        confidence=1.0 - distance / len(form),
                        recognizer="fuzzy",
                    )
                )
    return mentions


def recognize_pattern(utterance: str, entity_defs: list[EntityDef]) -> list[EntityMention]:
    """All left-to-right regex matches, one pass per declared pattern."""
    mentions: list[EntityMention] = []
    for entity in entity_defs:
        if entity.kind != "pattern":
            continue
        for pattern in entity.patterns:
            for match in re.finditer(pattern, utterance):
                if match.start() == match.end():
                    continue
                mentions.append(
                    EntityMention(
                        entity=entity.name,
                        value=match.group(),
                        start=match.start(),
                        end=match.end(),
                        confidence=1.0,
                        recognizer="pattern",
                    )
                )
    return mentions


# --- system entity grammar ------------------------------------------------

_UNIT_WORDS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11,
    "twelve": 12, "thirteen": 13, "fourteen": 14, "fifteen": 15,
    "sixteen": 16, "seventeen": 17, "eighteen": 18, "nineteen": 19,
    "twenty": 20,
}
_TENS_WORDS = {
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90,
}
_CURRENCY_SYMBOLS = {"$": "USD", "€": "EUR", "£": "GBP"}
_CURRENCY_WORDS = {"dollars": "USD", "euros": "EUR", "pounds": "GBP"}
_WEEKDAYS = {
    "monday": 0, "tuesday": 1, "wednesday": 2, "thursday": 3,
    "friday": 4, "saturday": 5, "sunday": 6,
}
_MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5,
    "june": 6, "july": 7, "august": 8, "september": 9, "october": 10,
    "november": 11, "december": 12,
}
_DECIMAL_RE = re.compile(r"[+-]?\d+(\.\d+)?")
_CLOCK_RE = re.compile(r"(\d{1,2}):(\d{2})")
_ISO_DATE_RE = re.compile(r"(\d{4})-(\d{2})-(\d{2})")


def _parse_number_at(words: list[str], i: int) -> tuple[Decimal, int] | None:
    """Signed decimals and zero..twenty / thirty..ninety word numbers,
    with tens+unit composition. Returns (value, tokens consumed)."""
    word = words[i]
    if _DECIMAL_RE.fullmatch(word):
        try:
            return Decimal(word), 1
        except InvalidOperation:  # pragma: no cover - fullmatch guards this
            return None
    if "-" in word:
        tens, _, unit = word.partition("-")
        if tens in _TENS_WORDS and unit in _UNIT_WORDS and 1 <= _UNIT_WORDS[unit] <= 9:
            return Decimal(_TENS_WORDS[tens] + _UNIT_WORDS[unit]), 1
    if word in _TENS_WORDS:
        nxt = words[i + 1] if i + 1 < len(words) else ""
        if nxt in _UNIT_WORDS and 1 <= _UNIT_WORDS[nxt] <= 9:
            return Decimal(_TENS_WORDS[word] + _UNIT_WORDS[nxt]), 2
        return Decimal(_TENS_WORDS[word]), 1
    if word in _UNIT_WORDS:
        return Decimal(_UNIT_WORDS[word]), 1
    return None


def _parse_currency_at(words: list[str], i: int) -> tuple[CurrencyValue, int] | None:
    word = words[i]
    if word and word[0] in _CURRENCY_SYMBOLS and _DECIMAL_RE.fullmatch(word[1:]):
        return CurrencyValue(Decimal(word[1:]), _CURRENCY_SYMBOLS[word[0]]), 1
    number = _parse_number_at(words, i)
    if number is not None:
        value, span = number
        nxt = words[i + span] if i + span < len(words) else ""
        if nxt in _CURRENCY_WORDS:
            return CurrencyValue(value, _CURRENCY_WORDS[nxt]), span + 1
    return None


def _parse_time_at(words: list[str], i: int) -> tuple[TimeValue, int] | None:
    word = words[i]
    if word == "noon":
        return TimeValue(12, 0), 1
    if word == "midnight":
        return TimeValue(0, 0), 1
    nxt = words[i + 1] if i + 1 < len(words) else ""
    clock = _CLOCK_RE.fullmatch(word)
    if clock:
        hour, minute = int(clock.group(1)), int(clock.group(2))
        if minute > 59:
            return None
        if nxt in ("am", "pm"):
            if not 1 <= hour <= 12:
                return None
            return TimeValue(_to_24h(hour, nxt), minute), 2
        if hour <= 23:
            return TimeValue(hour, minute), 1
        return None
    if word.isdigit() and len(word) <= 2 and nxt in ("am", "pm"):
        hour = int(word)
        if 1 <= hour <= 12:
            return TimeValue(_to_24h(hour, nxt), 0), 2
    return None


def _to_24h(hour: int, meridiem: str) -> int:
    if meridiem == "am":
        return 0 if hour == 12 else hour
    return 12 if hour == 12 else hour + 12


def _parse_date_at(words: list[str], i: int, reference: dt.datetime) -> tuple[DateValue, int] | None:
    word = words[i]
    today = reference.date()
    iso = _ISO_DATE_RE.fullmatch(word)
    if iso:
        try:
            return DateValue(dt.date(*map(int, iso.groups()))), 1
        except ValueError:
            return None
    if word == "today":
        return DateValue(today), 1
    if word == "tomorrow":
        return DateValue(today + dt.timedelta(days=1)), 1
    if word == "yesterday":
        return DateValue(today - dt.timedelta(days=1)), 1
    if word in _WEEKDAYS:
        ahead = (_WEEKDAYS[word] - today.weekday() - 1) % 7 + 1  # next strict occurrence
        return DateValue(today + dt.timedelta(days=ahead)), 1
    if word in _MONTHS:
        nxt = words[i + 1] if i + 1 < len(words) else ""
        if nxt.isdigit() and 1 <= int(nxt) <= 31:
            try:
                return DateValue(dt.date(today.year, _MONTHS[word], int(nxt))), 2
            except ValueError:
                return None
    return None


def _parse_range_at(words: list[str], i: int) -> tuple[RangeValue, int] | None:
    def number(j):
        return _parse_number_at(words, j) if j < len(words) else None

    def build(first, keyword_index, keyword):
        if keyword_index >= len(words) or words[keyword_index] != keyword:
            return None
        second = number(keyword_index + 1)
        if second is None:
            return None
        low, high = sorted((first[0], second[0]))
        return RangeValue(low, high), keyword_index + 1 + second[1] - i

    word = words[i]
    if word in ("between", "from"):
        first = number(i + 1)
        if first is None:
            return None
        keyword = "and" if word == "between" else "to"
        return build(first, i + 1 + first[1], keyword)
    first = number(i)
    if first is None:
        return None
    return build(first, i + first[1], "to")


def recognize_system(tokens: list[Token], reference: dt.datetime) -> list[EntityMention]:
    """Grammar-based dates, times, numbers, currencies and ranges.

    The longest parse at each position wins, so a range subsumes its
    component numbers. Deterministic given (tokens, reference).
    """
    words = [t.normalized for t in tokens]
    mentions: list[EntityMention] = []
    i = 0
    while i < len(words):
        candidates: list[tuple[int, int, str, object]] = []  # (span, priority, name, value)
        parsed = _parse_range_at(words, i)
        if parsed:
            candidates.append((parsed[1], 0, "sys_range", parsed[0]))
        parsed = _parse_currency_at(words, i)
        if parsed:
            candidates.append((parsed[1], 1, "sys_currency", parsed[0]))
        parsed = _parse_date_at(words, i, reference)
        if parsed:
            candidates.append((parsed[1], 2, "sys_date", parsed[0]))
        parsed = _parse_time_at(words, i)
        if parsed:
            candidates.append((parsed[1], 3, "sys_time", parsed[0]))
        parsed = _parse_number_at(words, i)
        if parsed:
            candidates.append((parsed[1], 4, "sys_number", NumberValue(parsed[0])))
        if not candidates:
            i += 1
            continue
        span, _, name, value = min(candidates, key=lambda c: (-c[0], c[1]))
        mentions.append(
            EntityMention(
                entity=name,
                value=value,
                start=tokens[i].start,
                end=tokens[i + span - 1].end,
                confidence=1.0,
                recognizer="system",
            )
        )
        i += span
    return mentions


# --- contextual tagger ----------------------------------------------------


def _word_shape(surface: str) -> str:
    shape = []
    for c in surface:
        if c.isupper():
            shape.append("X")
        elif c.islower():
            shape.append("x")
        elif c.isdigit():
            shape.append("d")
        else:
            shape.append(c)
    return "".join(shape)


def _features(tokens: list[Token], i: int) -> list[str]:
    word = tokens[i].normalized
    prev_word = tokens[i - 1].normalized if i > 0 else "<s>"
    next_word = tokens[i + 1].normalized if i + 1 < len(tokens) else "</s>"
    feats = [
        "bias",
        "w=" + word,
        "prev=" + prev_word,
        "next=" + next_word,
        "shape=" + _word_shape(tokens[i].surface),
    ]
    for k in (1, 2, 3):
        feats.append(f"pre{k}=" + word[:k])
        feats.append(f"suf{k}=" + word[-k:])
    return feats


class ContextualTagger:
    """Averaged perceptron over BIO tags; immutable once trained."""

    def __init__(self, tags: list[str], weights: dict[str, dict[str, float]]):
        self.tags = list(tags)
        self.weights = weights

    def scores(self, feats: list[str]) -> dict[str, float]:
        scores = {tag: 0.0 for tag in self.tags}
        for feat in feats:
            for tag, weight in self.weights.get(feat, {}).items():
                scores[tag] += weight
        return scores

    def tag(self, tokens: list[Token]) -> list[tuple[str, float]]:
        """Greedy per-token tagging; returns (tag, margin) pairs with the
        B/I continuity constraint repaired."""
        out: list[tuple[str, float]] = []
        prev_entity: str | None = None
        for i in range(len(tokens)):
            scores = self.scores(_features(tokens, i))
            ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
            tag = ranked[0][0]
            margin = ranked[0][1] - ranked[1][1] if len(ranked) > 1 else ranked[0][1]
            if tag.startswith("I-") and tag[2:] != prev_entity:
                tag = "B-" + tag[2:]
            prev_entity = tag[2:] if tag != "O" else None
            out.append((tag, margin))
        return out


def _bio_tags(tokens: list[Token], example, entity_names: set[str]) -> list[str]:
    tags = ["O"] * len(tokens)
    for mention in example.mentions:
        if mention.entity not in entity_names:
            continue
        first = True
        for i, token in enumerate(tokens):
            if token.start < mention.end and mention.start < token.end:
                tags[i] = ("B-" if first else "I-") + mention.entity
                first = False
    return tags


def train_contextual(skill: Skill) -> ContextualTagger | None:
    """Train the BIO tagger on annotated examples; None when no contextual
    entity reaches the minimum mention count."""
    mention_counts: dict[str, int] = {}
    for intent in skill.intents:
        for example in intent.examples:
            for mention in example.mentions:
                mention_counts[mention.entity] = mention_counts.get(mention.entity, 0) + 1
    eligible = {
        e.name
        for e in skill.entities
        if e.kind == "contextual" and mention_counts.get(e.name, 0) >= MIN_CONTEXTUAL_MENTIONS
    }
    if not eligible:
        return None

    tags = ["O"]
    for name in sorted(eligible):
        tags += ["B-" + name, "I-" + name]

    examples = []
    for intent in skill.intents:
        for example in intent.examples:
            tokens = tokenize(example.text)
            if tokens:
                examples.append((tokens, _bio_tags(tokens, example, eligible)))

    weights: dict[str, dict[str, float]] = {}
    totals: dict[str, dict[str, float]] = {}
    stamps: dict[str, dict[str, int]] = {}
    instance = 0

    def adjust(feat: str, tag: str, delta: float) -> None:
        feat_weights = weights.setdefault(feat, {})
        feat_totals = totals.setdefault(feat, {})
        feat_stamps = stamps.setdefault(feat, {})
        feat_totals[tag] = feat_totals.get(tag, 0.0) + feat_weights.get(tag, 0.0) * (
            instance - feat_stamps.get(tag, 0)
        )
        feat_stamps[tag] = instance
        feat_weights[tag] = feat_weights.get(tag, 0.0) + delta

    rng = random.Random(PERCEPTRON_SEED)
    order = list(range(len(examples)))
    for _ in range(PERCEPTRON_EPOCHS):
        rng.shuffle(order)
        for index in order:
            tokens, truth = examples[index]
            for i in range(len(tokens)):
                instance += 1
                feats = _features(tokens, i)
                scores = {tag: 0.0 for tag in tags}
                for feat in feats:
                    for tag, weight in weights.get(feat, {}).items():
                        scores[tag] += weight
                predicted = min(tags, key=lambda t: (-scores[t], t))
                if predicted != truth[i]:
                    for feat in feats:
                        adjust(feat, truth[i], 1.0)
                        adjust(feat, predicted, -1.0)

    averaged: dict[str, dict[str, float]] = {}
    for feat, feat_weights in weights.items():
        for tag, weight in feat_weights.items():
            total = totals[feat].get(tag, 0.0) + weight * (instance - stamps[feat].get(tag, 0))
            value = total / instance
            if value != 0.0:
                averaged.setdefault(feat, {})[tag] = value
    return ContextualTagger(tags, averaged)


def recognize_contextual(tokens: list[Token], tagger: ContextualTagger | None) -> list[EntityMention]:
    if tagger is None or not tokens:
        return []
    tagged = tagger.tag(tokens)
    mentions: list[EntityMention] = []
    i = 0
    while i < len(tagged):
        tag, _ = tagged[i]
        if not tag.startswith("B-"):
            i += 1
            continue
        entity = tag[2:]
        j = i + 1
        while j < len(tagged) and tagged[j][0] == "I-" + entity:
            j += 1
        margins = [tagged[k][1] for k in range(i, j)]
        confidence = max(0.5, sum(1 for m in margins if m > 0) / len(margins))
        surface = " ".join(t.normalized for t in tokens[i:j])
        mentions.append(
            EntityMention(
                entity=entity,
                value=surface,
                start=tokens[i].start,
                end=tokens[j - 1].end,
                confidence=confidence,
                recognizer="contextual",
            )
        )
        i = j
    return mentions


def resolve_overlaps(mentions: list[EntityMention]) -> list[EntityMention]:
    """Greedy non-overlapping selection: longer span, then confidence, then
    recognizer precedence, then leftmost. Output sorted by start offset."""
    ranked = sorted(
        mentions,
        key=lambda m: (
            -(m.end - m.start),
            -m.confidence,
            RECOGNIZER_PRECEDENCE.index(m.recognizer),
            m.start,
            m.entity,
            m.value_text(),
        ),
    )
    chosen: list[EntityMention] = []
    for mention in ranked:
        if all(mention.end <= c.start or c.end <= mention.start for c in chosen):
            chosen.append(mention)
    return sorted(chosen, key=lambda m: (m.start, m.end, m.entity))

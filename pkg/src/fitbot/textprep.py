"""Tokenization, normalization and autocorrection.

Correction candidates come from a skill-derived vocabulary (intent examples
plus entity values/synonyms, optionally extended by a wordlist file) and are
ranked by edit distance, then frequency, then phonetic agreement. Distance
caps are deliberately tight so that unknown jargon passes through untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

MAX_INPUT_CHARS = 2048

# kept when leading a token ($20, #yoga, @vegan)
_KEEP_PREFIX = "$€£#@"


class InputTooLong(ValueError):
    def __init__(self, length: int):
        super().__init__(f"input of {length} characters exceeds the {MAX_INPUT_CHARS} limit")


class NotEncodable(ValueError):
    """Word has no ASCII letters to build a phonetic code from."""


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    start: int
    end: int
    corrected_from: str | None = None


def tokenize(text: str) -> list[Token]:
    """Split on whitespace and strip surrounding punctuation.

    Leading ``$ € £ # @`` are kept; interior punctuation (``5:30``,
    ``2024-01-05``, ``can't``) is untouched. Offsets index the original text.
    """
    if len(text) > MAX_INPUT_CHARS:
        raise InputTooLong(len(text))
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        start, end = i, j
        while start < end and not text[start].isalnum() and text[start] not in _KEEP_PREFIX:
            start += 1
        while end > start and not text[end - 1].isalnum():
            end -= 1
        if start < end:
            surface = text[start:end]
            tokens.append(Token(surface=surface, normalized=surface.lower(), start=start, end=end))
        i = j
    return tokens


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character inserts/deletes/substitutions."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            )
        previous = current
    return previous[-1]


_SOUNDEX_CODES = {}
for _letters, _digit in (
    ("BFPV", "1"),
    ("CGJKQSXZ", "2"),
    ("DT", "3"),
    ("L", "4"),
    ("MN", "5"),
    ("R", "6"),
):
    for _c in _letters:
        _SOUNDEX_CODES[_c] = _digit


def phonetic_code(word: str) -> str:
    """Classic American Soundex: first letter plus three digits.

    Adjacent same-coded letters collapse, including across h/w; vowels
    separate. Raises NotEncodable when the word has no ASCII letters.
    """
    letters = [c for c in word.upper() if "A" <= c <= "Z"]
    if not letters:
        raise NotEncodable(f"no ASCII letters in {word!r}")
    first = letters[0]
    digits: list[str] = []
    prev = _SOUNDEX_CODES.get(first, "")
    for c in letters[1:]:
        code = _SOUNDEX_CODES.get(c, "")
        if code:
            if code != prev:
                digits.append(code)
            prev = code
        elif c not in "HW":
            prev = ""  # vowels (and y) break runs; h/w do not
    return (first + "".join(digits) + "000")[:4]


class Vocabulary:
    """Frequency and phonetic stores backing autocorrection. Immutable."""

    def __init__(self, counts: dict[str, int]):
        self.entries = dict(counts)
        self.phonetic_index: dict[str, set[str]] = {}
        for word in self.entries:
            try:
                code = phonetic_code(word)
            except NotEncodable:
                continue
            self.phonetic_index.setdefault(code, set()).add(word)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def frequency(self, word: str) -> int:
        return self.entries.get(word, 0)


def build_vocabulary(skill, extra_words: dict[str, int] | None = None) -> Vocabulary:
    """Vocabulary from intent examples and entity values/synonyms."""
    counts: dict[str, int] = {}

    def add(text: str, weight: int = 1) -> None:
        for token in tokenize(text):
            counts[token.normalized] = counts.get(token.normalized, 0) + weight

    for intent in skill.intents:
        for example in intent.examples:
            add(example.text)
    for entity in skill.entities:
        for value, synonyms in entity.values:
            add(value)
            for synonym in synonyms:
                add(synonym)
    for word, freq in (extra_words or {}).items():
        word = word.lower()
        counts[word] = counts.get(word, 0) + max(1, freq)
    return Vocabulary(counts)


def read_wordlist(path) -> dict[str, int]:
    """Parse a ``word<TAB>frequency`` wordlist file; ``#`` lines are comments."""
    words: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            word, _, freq = line.partition("\t")
            words[word.strip().lower()] = int(freq) if freq.strip() else 1
    return words


def _max_distance(length: int) -> int:
    return 1 if length <= 4 else 2


def autocorrect(tokens: list[Token], vocab: Vocabulary) -> list[Token]:
    """Repair out-of-vocabulary tokens against the vocabulary.

    Skips tokens that are known, contain a digit, or are shorter than three
    characters. Candidates within the distance cap are ranked by distance,
    then frequency, then phonetic agreement, then lexicographically.
    """
    out: list[Token] = []
    for token in tokens:
        word = token.normalized
        if word in vocab or len(word) < 3 or any(c.isdigit() for c in word):
            out.append(token)
            continue
        cap = _max_distance(len(word))
        try:
            sound_alikes = vocab.phonetic_index.get(phonetic_code(word), set())
        except NotEncodable:
            sound_alikes = set()
        best: tuple | None = None
        for candidate, freq in vocab.entries.items():
            if abs(len(candidate) - len(word)) > cap:
                continue
            distance = levenshtein(word, candidate)
            if distance > cap:
                continue
            phonetic_miss = 0 if candidate in sound_alikes else 1
            key = (distance, -freq, phonetic_miss, candidate)
            if best is None or key < best:
                best = key
        if best is None:
            out.append(token)
        else:
            corrected = best[3]
            out.append(
                replace(token, surface=corrected, normalized=corrected, corrected_from=token.surface)
            )
    return out


def apply_corrections(text: str, tokens: list[Token]) -> str | None:
    """Splice corrected tokens back into the original text.

    Returns None when no correction fired.
    """
    corrected = [t for t in tokens if t.corrected_from is not None]
    if not corrected:
        return None
    pieces: list[str] = []
    cursor = 0
    for token in sorted(corrected, key=lambda t: t.start):
        pieces.append(text[cursor : token.start])
        pieces.append(token.surface)
        cursor = token.end
    pieces.append(text[cursor:])
    return "".join(pieces)

"""Independent reference implementations the tests check against.

These deliberately share no code with the package: the edit distance is
top-down recursion instead of the DP table, posteriors use exact Fraction
arithmetic, the perceptron oracle averages by brute-force accumulation, and
the condition printer parenthesizes everything.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

from fitbot import conditions
from fitbot.textprep import tokenize


def lev_recursive(a: str, b: str, memo: dict | None = None) -> int:
    """Edit distance straight from the recursive definition."""
    if memo is None:
        memo = {}
    key = (a, b)
    cached = memo.get(key)
    if cached is not None:
        return cached
    if not a:
        result = len(b)
    elif not b:
        result = len(a)
    else:
        result = min(
            lev_recursive(a[1:], b, memo) + 1,
            lev_recursive(a, b[1:], memo) + 1,
            lev_recursive(a[1:], b[1:], memo) + (a[0] != b[0]),
        )
    memo[key] = result
    return result


def corpus_documents(corpus: dict[str, list[str]]) -> list[tuple[str, list[str]]]:
    return [
        (intent, [t.normalized for t in tokenize(text)])
        for intent, texts in corpus.items()
        for text in texts
    ]


def nb_posteriors_exact(corpus: dict[str, list[str]], query: list[str]) -> dict[str, Fraction]:
    """Multinomial NB with add-one smoothing, in exact rational arithmetic."""
    documents = corpus_documents(corpus)
    vocabulary = sorted({w for _, words in documents for w in words})
    known = [w for w in query if w in vocabulary]
    assert known, "query must contain at least one in-vocabulary token"
    scores: dict[str, Fraction] = {}
    total_docs = len(documents)
    for intent in corpus:
        docs = [words for name, words in documents if name == intent]
        token_total = sum(len(words) for words in docs)
        prior = Fraction(len(docs), total_docs)
        likelihood = prior
        for word in known:
            count = sum(words.count(word) for words in docs)
            likelihood *= Fraction(count + 1, token_total + len(vocabulary))
        scores[intent] = likelihood
    total = sum(scores.values())
    return {intent: score / total for intent, score in scores.items()}


def max_cosine_bruteforce(corpus: dict[str, list[str]], query: list[str]) -> float:
    """Max cosine between the query and any example, TF-IDF with ln(N/df)."""
    documents = [words for _, words in corpus_documents(corpus)]
    total = len(documents)
    df: dict[str, int] = {}
    for words in documents:
        for word in set(words):
            df[word] = df.get(word, 0) + 1

    def vector(words: list[str]) -> dict[str, float]:
        counts: dict[str, int] = {}
        for word in words:
            if word in df:
                counts[word] = counts.get(word, 0) + 1
        vec = {w: c * math.log(total / df[w]) for w, c in counts.items()}
        norm = math.sqrt(sum(x * x for x in vec.values()))
        return {w: x / norm for w, x in vec.items()} if norm else {}

    query_vec = vector(query)
    best = 0.0
    for words in documents:
        doc_vec = vector(words)
        dot = sum(weight * doc_vec.get(word, 0.0) for word, weight in query_vec.items())
        best = max(best, dot)
    return min(best, 1.0)


def fully_parenthesized(ast) -> str:
    """Condition printer that wraps every composite in parentheses."""
    if isinstance(ast, conditions.IntentIs):
        return "#" + ast.name
    if isinstance(ast, conditions.EntityPresent):
        if ast.value is None:
            return "@" + ast.name
        return f'@{ast.name}:"{ast.value}"'
    if isinstance(ast, conditions.VarCompare):
        if ast.op == "defined":
            return "$" + ast.name
        literal = ast.literal
        if literal is None:
            text = "null"
        elif literal is True:
            text = "true"
        elif literal is False:
            text = "false"
        elif isinstance(literal, str):
            text = '"' + literal + '"'
        else:
            text = repr(literal)
        return f"(${ast.name} {ast.op} {text})"
    if isinstance(ast, conditions.TrueCond):
        return "true"
    if isinstance(ast, conditions.AnythingElse):
        return "anything_else"
    if isinstance(ast, conditions.Not):
        return "(!" + fully_parenthesized(ast.operand) + ")"
    if isinstance(ast, conditions.And):
        return "(" + " && ".join(fully_parenthesized(o) for o in ast.operands) + ")"
    if isinstance(ast, conditions.Or):
        return "(" + " || ".join(fully_parenthesized(o) for o in ast.operands) + ")"
    raise TypeError(ast)


def random_condition_ast(rng: random.Random, depth: int = 0):
    """Random condition tree over a small name pool."""
    names = ["alpha", "beta", "gamma", "count", "kind"]
    choice = rng.randrange(8 if depth < 3 else 5)
    if choice == 0:
        return conditions.IntentIs(rng.choice(names))
    if choice == 1:
        value = rng.choice([None, "vegan", "two words"])
        return conditions.EntityPresent(rng.choice(names), value)
    if choice == 2:
        op = rng.choice(["defined", "==", "!=", "<", "<=", ">", ">="])
        if op == "defined":
            return conditions.VarCompare(rng.choice(names), "defined")
        literal = rng.choice([3, 2.5, -1, "text", True, False, None])
        return conditions.VarCompare(rng.choice(names), op, literal)
    if choice == 3:
        return conditions.TrueCond()
    if choice == 4:
        return conditions.Not(random_condition_ast(rng, depth + 1))
    make = conditions.And if choice in (5, 6) else conditions.Or
    count = rng.choice([2, 2, 3])
    return make(tuple(random_condition_ast(rng, depth + 1) for _ in range(count)))


class PerceptronOracle:
    """Averaged perceptron with naive per-instance accumulation.

    Must mirror the package's feature set, seed, epoch count and tie-breaks;
    only the averaging mechanics differ (explicit sum over instances).
    """

    def __init__(self, tagged_examples: list[tuple[list, list[str]]], tags: list[str],
                 seed: int, epochs: int, feature_fn):
        self.tags = tags
        weights: dict[str, dict[str, float]] = {}
        accumulator: dict[str, dict[str, float]] = {}
        instances = 0
        rng = random.Random(seed)
        order = list(range(len(tagged_examples)))
        for _ in range(epochs):
            rng.shuffle(order)
            for index in order:
                tokens, truth = tagged_examples[index]
                for i in range(len(tokens)):
                    feats = feature_fn(tokens, i)
                    # accumulate the weights in effect entering this instance
                    for feat, per_tag in weights.items():
                        acc = accumulator.setdefault(feat, {})
                        for tag, w in per_tag.items():
                            acc[tag] = acc.get(tag, 0.0) + w
                    instances += 1
                    scores = {tag: 0.0 for tag in tags}
                    for feat in feats:
                        for tag, w in weights.get(feat, {}).items():
                            scores[tag] += w
                    predicted = min(tags, key=lambda t: (-scores[t], t))
                    if predicted != truth[i]:
                        for feat in feats:
                            per_tag = weights.setdefault(feat, {})
                            per_tag[truth[i]] = per_tag.get(truth[i], 0.0) + 1.0
                            per_tag[predicted] = per_tag.get(predicted, 0.0) - 1.0
        self.weights = {
            feat: {
                tag: value / instances
                for tag, value in per_tag.items()
                if value != 0.0
            }
            for feat, per_tag in accumulator.items()
        }

    def tag(self, tokens, feature_fn) -> list[str]:
        out = []
        prev_entity = None
        for i in range(len(tokens)):
            scores = {tag: 0.0 for tag in self.tags}
            for feat in feature_fn(tokens, i):
                for tag, w in self.weights.get(feat, {}).items():
                    scores[tag] += w
            tag = min(self.tags, key=lambda t: (-scores[t], t))
            if tag.startswith("I-") and tag[2:] != prev_entity:
                tag = "B-" + tag[2:]
            prev_entity = tag[2:] if tag != "O" else None
            out.append(tag)
        return out

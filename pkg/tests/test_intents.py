import math
import random
from fractions import Fraction

import pytest

from fitbot.intents import (
    EmptyInput,
    IntentPrediction,
    TrainingError,
    classify,
    irrelevance_score,
    match_rules,
    resolve,
    train,
)
from fitbot.skill import SkillConfig
from fitbot.textprep import tokenize

from .conftest import TINY_CORPUS, make_skill, parse_dict
from .oracles import max_cosine_bruteforce, nb_posteriors_exact


@pytest.fixture(scope="module")
def model(tiny_skill):
    return train(tiny_skill)


def toks(text):
    return tokenize(text)


class TestTrain:
    def test_single_intent_prior_one(self):
        skill = parse_dict(make_skill({"only": ["hello there"]}))
        model = train(skill)
        assert model.class_log_priors["only"] == pytest.approx(0.0)

    def test_tiny_corpus_priors(self, model):
        for intent in TINY_CORPUS:
            assert model.class_log_priors[intent] == pytest.approx(math.log(Fraction(2, 6)))

    def test_hand_computed_likelihoods(self, model):
        # diet class: 5 tokens, vocabulary of 12 -> P(diet-token) = (c+1)/17
        assert model.token_log_likelihoods["diet"]["diet"] == pytest.approx(
            math.log(Fraction(3, 17)), abs=1e-12
        )
        assert model.token_log_likelihoods["diet"]["yoga"] == pytest.approx(
            math.log(Fraction(1, 17)), abs=1e-12
        )
        # schedule class: 6 tokens -> denominator 18
        assert model.token_log_likelihoods["schedule"]["session"] == pytest.approx(
            math.log(Fraction(3, 18)), abs=1e-12
        )

    def test_likelihoods_sum_to_one_per_intent(self, model):
        for intent, likelihood in model.token_log_likelihoods.items():
            total = sum(math.exp(v) for v in likelihood.values())
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_duplicate_example_keeps_first_intent(self):
        skill = parse_dict(make_skill({"first": ["same text"], "second": ["Same  Text"]}))
        model = train(skill)
        assert model.exact_index["same text"] == "first"

    def test_training_error_on_empty_tokens(self):
        skill = parse_dict(make_skill({"bad": ["..."]}))
        with pytest.raises(TrainingError):
            train(skill)

    def test_empty_example_never_rule_matches_empty_input(self):
        skill = parse_dict(make_skill({"a": ["hello", "..."]}))
        model = train(skill)
        assert "" not in model.exact_index
        assert match_rules([], model) is None

    def test_deterministic(self, tiny_skill):
        a, b = train(tiny_skill), train(tiny_skill)
        assert a.class_log_priors == b.class_log_priors
        assert a.token_log_likelihoods == b.token_log_likelihoods
        assert a.example_vectors == b.example_vectors
        assert a.exact_index == b.exact_index


class TestMatchRules:
    def test_exact_match(self, model):
        hit = match_rules(toks("vegan diet plan"), model)
        assert hit == IntentPrediction("diet", 1.0, "rule")

    def test_one_word_off_falls_through(self, model):
        assert match_rules(toks("vegan diet plans"), model) is None

    def test_case_and_whitespace_variant(self, model):
        # oracle: lowercase + collapse spaces
        assert "  Vegan  DIET plan ".lower().split() == ["vegan", "diet", "plan"]
        hit = match_rules(toks("  Vegan  DIET plan "), model)
        assert hit is not None and hit.intent == "diet"


class TestClassify:
    def test_yoga_matches_fraction_oracle(self, model):
        ranked = classify(toks("yoga"), model)
        expected = nb_posteriors_exact(TINY_CORPUS, ["yoga"])
        assert ranked[0].intent == "workout"
        assert ranked[0].confidence == pytest.approx(float(expected["workout"]), abs=1e-9)
        for prediction in ranked:
            assert prediction.confidence == pytest.approx(
                float(expected[prediction.intent]), abs=1e-9
            )
        # frozen value: 36/71 computed by exact arithmetic
        assert ranked[0].confidence == pytest.approx(36 / 71, abs=1e-9)

    def test_multi_token_matches_oracle(self, model):
        query = ["book", "a", "yoga", "session"]
        ranked = classify(toks(" ".join(query)), model)
        expected = nb_posteriors_exact(TINY_CORPUS, query)
        for prediction in ranked:
            assert prediction.confidence == pytest.approx(
                float(expected[prediction.intent]), abs=1e-9
            )

    def test_bag_of_words_permutation_invariance(self, model):
        a = classify(toks("plan diet"), model)
        b = classify(toks("diet plan"), model)
        assert a == b

    def test_all_oov_raises(self, model):
        with pytest.raises(EmptyInput):
            classify(toks("zzz qqq"), model)

    def test_confidences_sum_to_one(self, model):
        rng = random.Random(7)
        vocabulary = sorted(model.vocabulary)
        for _ in range(100):
            words = rng.choices(vocabulary, k=rng.randint(1, 5))
            ranked = classify(toks(" ".join(words)), model)
            assert sum(p.confidence for p in ranked) == pytest.approx(1.0, abs=1e-9)
            assert all(0.0 <= p.confidence <= 1.0 for p in ranked)

    def test_returns_all_intents_sorted(self, model):
        ranked = classify(toks("yoga"), model)
        assert {p.intent for p in ranked} == set(TINY_CORPUS)
        confidences = [p.confidence for p in ranked]
        assert confidences == sorted(confidences, reverse=True)


class TestIrrelevance:
    def test_training_example_is_self_similar(self, model):
        assert irrelevance_score(toks("vegan diet plan"), model) == pytest.approx(1.0, abs=1e-12)

    def test_all_oov_is_zero(self, model):
        assert irrelevance_score(toks("zzz qqq"), model) == 0.0

    def test_matches_bruteforce_cosine(self, model):
        for query in ("yoga plan today", "book a yoga session", "keto plan", "a a diet"):
            expected = max_cosine_bruteforce(TINY_CORPUS, query.split())
            assert irrelevance_score(toks(query), model) == pytest.approx(expected, abs=1e-12)


class TestResolve:
    def test_boundary_equal_threshold_is_in_scope(self, model):
        ranked = classify(toks("yoga"), model)
        config = SkillConfig(intent_threshold=ranked[0].confidence, oos_similarity_floor=0.0)
        result = resolve(toks("yoga"), model, config)
        assert result.is_in_scope
        assert result.prediction.intent == "workout"

    def test_below_threshold_is_oos(self, model):
        ranked = classify(toks("yoga"), model)
        config = SkillConfig(
            intent_threshold=math.nextafter(ranked[0].confidence, 1.0),
            oos_similarity_floor=0.0,
        )
        result = resolve(toks("yoga"), model, config)
        assert not result.is_in_scope
        assert result.oos_reason == "below_threshold"

    def test_rule_precedence_beats_high_threshold(self, model):
        config = SkillConfig(intent_threshold=0.99)
        result = resolve(toks("vegan diet plan"), model, config)
        assert result.is_in_scope
        assert result.prediction.confidence == 1.0
        assert result.prediction.source == "rule"

    def test_irrelevant_input_veto(self, model):
        config = SkillConfig(oos_similarity_floor=0.35)
        result = resolve(toks("dinosaurs roam here"), model, config)
        assert result.oos_reason == "irrelevant_input"

    def test_no_intents_when_floor_disabled(self, model):
        config = SkillConfig(oos_similarity_floor=0.0)
        result = resolve(toks("zzz qqq"), model, config)
        assert result.oos_reason == "no_intents"

    def test_threshold_monotonicity(self, model):
        inputs = ["yoga", "diet", "book a session now", "arms routine", "keto plan"]
        for text in inputs:
            tokens = toks(text)
            was_in_scope = True
            for step in range(101):
                config = SkillConfig(intent_threshold=step / 100, oos_similarity_floor=0.0)
                now_in_scope = resolve(tokens, model, config).is_in_scope
                assert not (now_in_scope and not was_in_scope), "OOS flipped back to IS"
                was_in_scope = now_in_scope

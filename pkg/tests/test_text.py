import random
import string

from ragmeter.text import normalize_answer, normalize_text, tokenize


def test_whitespace_collapse():
    assert normalize_text("a\t b\n\nc") == "a b c"


def test_already_normalized_is_identity():
    assert normalize_text("plain single spaced text") == "plain single spaced text"


def test_zero_width_characters_removed():
    # U+200B zero width space, U+FEFF zero width no-break space
    assert normalize_text("zero​width ﻿mark") == "zerowidth mark"


def test_control_characters_stripped():
    assert normalize_text("a\x00b\x07c") == "abc"


def test_non_breaking_space_collapses():
    assert normalize_text("a\xa0b") == "a b"


def test_normalize_is_idempotent_on_random_strings():
    rng = random.Random(20240501)
    alphabet = string.ascii_letters + string.digits + " \t\n\r​\xa0\x00éü漢"
    for _ in range(500):
        raw = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
        once = normalize_text(raw)
        assert normalize_text(once) == once


def test_tokenize_splits_on_whitespace():
    assert tokenize(" one\ttwo\nthree ") == ["one", "two", "three"]


def test_normalize_answer_strips_punctuation_and_articles():
    assert normalize_answer("the Delta Basin.") == "delta basin"


def test_normalize_answer_lowercases_and_collapses():
    assert normalize_answer("Tulsa,   Oklahoma") == "tulsa oklahoma"


def test_normalize_answer_keeps_interior_article_letters():
    # "a"/"an"/"the" go away only as standalone words
    assert normalize_answer("theater Ant") == "theater ant"

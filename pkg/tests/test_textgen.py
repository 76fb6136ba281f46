import re

import pytest

from crashscope.domain import KeyboardType
from crashscope.textgen import ALPHABETS, SplitMix64, expected_text, unexpected_text

# Normative shapes for the expected heuristic.
EXPECTED_PATTERNS = {
    KeyboardType.TEXT: re.compile(r"^[a-zA-Z0-9 ]{5,12}$"),
    KeyboardType.NUMBER: re.compile(r"^[0-9]{1,8}$"),
    KeyboardType.PHONE: re.compile(r"^[0-9]{7,10}$"),
    KeyboardType.EMAIL: re.compile(r"^[a-z0-9]+@[a-z0-9]+\.[a-z]{2,3}$"),
}

# Frozen outputs of the seeded reference stream (seed 0); any change to the
# draw order or the alphabet tables must show up here.
GOLDEN_EXPECTED = {
    KeyboardType.TEXT: "KLz6EYSiVtUK",
    KeyboardType.NUMBER: "09470309",
    KeyboardType.PHONE: "0947030901",
    KeyboardType.EMAIL: "atq5@fi9.ts",
}
GOLDEN_UNEXPECTED = {
    KeyboardType.TEXT: "'teGY!}&T\\F~",
    KeyboardType.NUMBER: "+*.-+1.3",
    KeyboardType.PHONE: "+04(#64#7,",
    KeyboardType.EMAIL: "!xe{cb*'~7/'",
}


def test_alphabets_disjoint_and_specials_nonempty():
    for alphabet in ALPHABETS.values():
        assert not set(alphabet.expected_chars) & set(alphabet.special_chars)
        assert alphabet.special_chars


@pytest.mark.parametrize("kind", list(KeyboardType))
def test_expected_golden_seed_zero(kind):
    assert expected_text(kind, SplitMix64(0)) == GOLDEN_EXPECTED[kind]


@pytest.mark.parametrize("kind", list(KeyboardType))
def test_unexpected_golden_seed_zero(kind):
    assert unexpected_text(kind, SplitMix64(0)) == GOLDEN_UNEXPECTED[kind]


@pytest.mark.parametrize("kind", list(KeyboardType))
def test_determinism_per_seed(kind):
    for seed in (0, 1, 123456789, 2**64 - 1):
        assert expected_text(kind, SplitMix64(seed)) == expected_text(kind, SplitMix64(seed))
        assert unexpected_text(kind, SplitMix64(seed)) == unexpected_text(kind, SplitMix64(seed))


@pytest.mark.parametrize("kind", list(KeyboardType))
def test_expected_samples_match_pattern_and_avoid_specials(kind):
    rng = SplitMix64(20240701)
    specials = set(ALPHABETS[kind].special_chars)
    for _ in range(1000):
        text = expected_text(kind, rng)
        assert EXPECTED_PATTERNS[kind].match(text), text
        assert not set(text) & specials, text


@pytest.mark.parametrize("kind", list(KeyboardType))
def test_unexpected_samples_contain_a_special(kind):
    rng = SplitMix64(911)
    alphabet = ALPHABETS[kind]
    allowed = set(alphabet.expected_chars) | set(alphabet.special_chars)
    for _ in range(1000):
        text = unexpected_text(kind, rng)
        assert set(text) & set(alphabet.special_chars), text
        assert set(text) <= allowed, text
        low, high = alphabet.length_range
        assert low <= len(text) <= high


def test_number_unexpected_restricted_to_digits_and_number_specials():
    rng = SplitMix64(5)
    legal = set("0123456789+-.,#*")
    for _ in range(500):
        assert set(unexpected_text(KeyboardType.NUMBER, rng)) <= legal

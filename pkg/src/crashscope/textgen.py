"""Keyboard-aware text input generation.

Two heuristics per keyboard type: `expected_text` stays inside the keyboard's
plain character set, `unexpected_text` is guaranteed to include at least one
allowable special character. Both are deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .domain import KeyboardType

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Tiny deterministic 64-bit stream; good enough for input fuzzing."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next_u64() % n

    def pick(self, chars: str) -> str:
        return chars[self.below(len(chars))]


@dataclass(frozen=True)
class KeyboardAlphabet:
    keyboard_type: KeyboardType
    expected_chars: str
    special_chars: str
    length_range: tuple[int, int]

    def __post_init__(self):
        if set(self.expected_chars) & set(self.special_chars):
            raise ValueError(f"{self.keyboard_type}: expected and special sets overlap")
        if not self.special_chars:
            raise ValueError(f"{self.keyboard_type}: special set must be non-empty")


_LOWER = "abcdefghijklmnopqrstuvwxyz"
_UPPER = _LOWER.upper()
_DIGITS = "0123456789"

# Normative tables. EMAIL expected output is additionally shaped as
# local@domain.tld, so its length range applies to unexpected output only.
ALPHABETS = {
    KeyboardType.TEXT: KeyboardAlphabet(
        KeyboardType.TEXT,
        expected_chars=_LOWER + _UPPER + _DIGITS + " ",
        special_chars="!@#$%^&*()_+-=[]{};:'\",.<>/?\\|~`",
        length_range=(5, 12),
    ),
    KeyboardType.NUMBER: KeyboardAlphabet(
        KeyboardType.NUMBER,
        expected_chars=_DIGITS,
        special_chars="+-.,#*",
        length_range=(1, 8),
    ),
    KeyboardType.PHONE: KeyboardAlphabet(
        KeyboardType.PHONE,
        expected_chars=_DIGITS,
        special_chars="+*#(),;-.",
        length_range=(7, 10),
    ),
    KeyboardType.EMAIL: KeyboardAlphabet(
        KeyboardType.EMAIL,
        expected_chars=_LOWER + _DIGITS + "@.",
        special_chars="!#$%&'*+/=?^_{}|~-",
        length_range=(5, 12),
    ),
}


def _draw(rng: SplitMix64, chars: str, length: int) -> str:
    return "".join(rng.pick(chars) for _ in range(length))


def expected_text(kind: KeyboardType, rng: SplitMix64) -> str:
    """A string within keyboard parameters, free of special characters."""
    alphabet = ALPHABETS[kind]
    if kind == KeyboardType.EMAIL:
        local = _draw(rng, _LOWER + _DIGITS, 3 + rng.below(6))
        domain = _draw(rng, _LOWER + _DIGITS, 3 + rng.below(6))
        tld = _draw(rng, _LOWER, 2 + rng.below(2))
        return f"{local}@{domain}.{tld}"
    low, high = alphabet.length_range
    length = low + rng.below(high - low + 1)
    return _draw(rng, alphabet.expected_chars, length)


def unexpected_text(kind: KeyboardType, rng: SplitMix64) -> str:
    """A string over the full keyboard alphabet with at least one special character.

    The first character is always drawn from the special set, which keeps the
    guarantee without a shuffle pass.
    """
    alphabet = ALPHABETS[kind]
    low, high = alphabet.length_range
    length = low + rng.below(high - low + 1)
    head = rng.pick(alphabet.special_chars)
    tail = _draw(rng, alphabet.expected_chars + alphabet.special_chars, length - 1)
    return head + tail

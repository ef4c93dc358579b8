"""5x3 digit patterns, noise enumeration and the overlap classification oracle."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ROWS, COLS = 5, 3
N_PIXELS = ROWS * COLS

# row-major, 1 = black
DIGIT_BITMAPS = (
    "111101101101111",  # 0
    "010110010010111",  # 1
    "111001111100111",  # 2
    "111001111001111",  # 3
    "101101111001001",  # 4
    "111100111001111",  # 5
)

TIE = -1


@dataclass(frozen=True)
class Pattern:
    pixels: tuple[int, ...]

    def __post_init__(self):
        px = tuple(int(p) for p in self.pixels)
        if len(px) != N_PIXELS:
            raise ValueError(f"pattern must have {N_PIXELS} pixels, got {len(px)}")
        if any(p not in (0, 1) for p in px):
            raise ValueError("pixels must be 0 or 1")
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_string(cls, bits: str) -> "Pattern":
        bits = bits.replace("·", "").replace(".", "").replace(" ", "").strip()
        if any(c not in "01" for c in bits):
            raise ValueError(f"pattern string may only contain 0/1: {bits!r}")
        return cls(tuple(int(c) for c in bits))

    def __str__(self) -> str:
        return "".join(map(str, self.pixels))

    def array(self) -> np.ndarray:
        return np.array(self.pixels, dtype=int)

    def grid(self) -> str:
        s = str(self)
        return "\n".join(s[r * COLS:(r + 1) * COLS].replace("1", "#").replace("0", ".")
                         for r in range(ROWS))

    @property
    def n_black(self) -> int:
        return sum(self.pixels)


@dataclass(frozen=True)
class DigitCorpus:
    patterns: tuple[Pattern, ...]

    def __post_init__(self):
        if len(set(self.patterns)) != len(self.patterns):
            raise ValueError("corpus patterns must be pairwise distinct")
        if any(p.n_black < 5 for p in self.patterns):
            raise ValueError("every corpus pattern needs at least 5 black pixels")

    def __len__(self) -> int:
        return len(self.patterns)

    def __getitem__(self, i) -> Pattern:
        return self.patterns[i]

    def array(self) -> np.ndarray:
        return np.array([p.pixels for p in self.patterns], dtype=int)


DIGITS = DigitCorpus(tuple(Pattern.from_string(b) for b in DIGIT_BITMAPS))


def load_corpus(path) -> DigitCorpus:
    """Text file: one 15-character 0/1 line per digit."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    return DigitCorpus(tuple(Pattern.from_string(ln) for ln in lines))


def save_corpus(path, corpus: DigitCorpus) -> None:
    Path(path).write_text("".join(f"{p}\n" for p in corpus.patterns))


def flip_sets(k: int, n: int = N_PIXELS) -> list[tuple[int, ...]]:
    if not 0 <= k <= n:
        raise ValueError(f"flip count must be in [0, {n}]")
    return list(itertools.combinations(range(n), k))


def enumerate_noisy(p: Pattern, k: int) -> list[Pattern]:
    """Every variant of ``p`` with exactly ``k`` pixels inverted, in lexicographic flip order."""
    base = p.array()
    out = []
    for flips in flip_sets(k):
        q = base.copy()
        q[list(flips)] ^= 1
        out.append(Pattern(tuple(q)))
    return out


def noisy_array(corpus: DigitCorpus, k: int):
    """All noisy cases as arrays: ``(digits, flip_sets, patterns)``."""
    sets = flip_sets(k)
    mask = np.zeros((len(sets), N_PIXELS), dtype=int)
    for r, fl in enumerate(sets):
        mask[r, list(fl)] = 1
    base = corpus.array()
    digits = np.repeat(np.arange(len(corpus)), len(sets))
    pats = (base[:, None, :] ^ mask[None, :, :]).reshape(-1, N_PIXELS)
    return digits, [fl for _ in range(len(corpus)) for fl in sets], pats


def oracle_classify(corpus: DigitCorpus, q) -> int:
    """Digit with the largest black-pixel overlap with ``q``; ``TIE`` if not unique.

    With trained columns holding LRS on black pixels and HRS elsewhere, the
    HRS share of every column current is identical, so the largest column
    current belongs to the largest overlap.
    """
    return int(oracle_classify_many(corpus, np.asarray(getattr(q, "pixels", q))[None])[0])


def oracle_classify_many(corpus: DigitCorpus, patterns) -> np.ndarray:
    overlap = np.asarray(patterns, dtype=int) @ corpus.array().T
    best = overlap.max(axis=1, keepdims=True)
    unique = (overlap == best).sum(axis=1) == 1
    return np.where(unique, overlap.argmax(axis=1), TIE)


def oracle_classify_conductance(g: np.ndarray, patterns) -> np.ndarray:
    """Argmax of summed column conductance for arbitrary weight matrices."""
    s = np.asarray(patterns, dtype=float) @ g
    best = s.max(axis=1, keepdims=True)
    unique = np.isclose(s, best, rtol=1e-12, atol=0).sum(axis=1) == 1
    return np.where(unique, s.argmax(axis=1), TIE)


def n_cases(k: int, n_digits: int = 6) -> int:
    return n_digits * math.comb(N_PIXELS, k)

"""Photon-mode encoding of quantum strings.

Each ordered mode holds at most one photon: horizontal polarization is the
bit 0, vertical is the bit 1, and an empty mode is vacuum.  The string is
the run of occupied modes before the first vacuum.  Words are written as
strings over ``H``, ``V`` and ``_``.
"""
from __future__ import annotations

from dataclasses import dataclass

from .qstring import NORM_TOL, PRUNE, QString

H, V, VAC = "H", "V", "_"
_BIT_TO_MODE = {"0": H, "1": V}
_MODE_TO_BIT = {H: "0", V: "1"}


class TooFewModes(ValueError):
    pass


class NonStringFockState(ValueError):
    """A term has an occupied mode after a vacuum mode."""


@dataclass(frozen=True)
class FockState:
    num_modes: int
    terms: tuple[tuple[str, complex], ...]

    def __post_init__(self):
        if self.num_modes < 1:
            raise ValueError("num_modes must be positive")
        merged: dict[str, complex] = {}
        for word, amp in self.terms:
            if len(word) != self.num_modes or word.strip(H + V + VAC):
                raise ValueError(f"bad occupation word {word!r} for {self.num_modes} modes")
            merged[word] = merged.get(word, 0j) + complex(amp)
        items = sorted((w, a) for w, a in merged.items() if abs(a) >= PRUNE)
        object.__setattr__(self, "terms", tuple(items))

    @property
    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for _, a in self.terms)

    def is_normalized(self) -> bool:
        return abs(self.norm_squared - 1.0) <= NORM_TOL

    def occupations(self, word: str) -> list[tuple[int, int]]:
        """Per-mode photon numbers (horizontal, vertical) for one basis word."""
        return [(int(c == H), int(c == V)) for c in word]


def fock_encode(q: QString, num_modes: int) -> FockState:
    if num_modes < 1:
        raise ValueError("num_modes must be positive")
    if q.max_length > num_modes:
        raise TooFewModes(f"need {q.max_length} modes, got {num_modes}")
    terms = tuple(
        ("".join(_BIT_TO_MODE[b] for b in bits) + VAC * (num_modes - len(bits)), amp)
        for bits, amp in q.terms
    )
    return FockState(num_modes, terms)


def word_to_bits(word: str) -> str:
    head, _, tail = word.partition(VAC)
    if tail.strip(VAC):
        raise NonStringFockState(f"photon after vacuum in {word!r}")
    return "".join(_MODE_TO_BIT[c] for c in head)


def fock_decode(f: FockState) -> QString:
    return QString(tuple((word_to_bits(w), a) for w, a in f.terms))


def mode_product(word: str) -> str:
    """Render a word as a product of per-mode kets, e.g. ``|1,0>|0,1>|0,0>``."""
    return "".join(f"|{h},{v}>" for h, v in ((int(c == H), int(c == V)) for c in word))


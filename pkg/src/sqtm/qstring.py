"""Indeterminate-length quantum strings.

A :class:`QString` is a finite superposition of classical bitstrings whose
lengths may differ.  Distinct bitstrings, including ones of different
length, are orthogonal basis vectors.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

PRUNE = 1e-15
NORM_TOL = 1e-9
AVG_LEN_TOL = 1e-6


class ZeroState(ValueError):
    """Raised when a state has no term with non-negligible amplitude."""


class NotNormalized(ValueError):
    pass


def canonical_key(bits: str) -> tuple[int, str]:
    return (len(bits), bits)


def _check_bits(bits: str) -> str:
    if not isinstance(bits, str) or bits.strip("01"):
        raise ValueError(f"not a bitstring: {bits!r}")
    return bits


@dataclass(frozen=True)
class QString:
    """Immutable map from bitstrings to complex amplitudes, kept in canonical order.

    Construction prunes tiny amplitudes but does not normalize; call
    :func:`normalize` (or use :meth:`from_terms` with ``normalized=True``) for
    a physical state.
    """

    terms: tuple[tuple[str, complex], ...] = field(default=())

    def __post_init__(self):
        merged: dict[str, complex] = {}
        for bits, amp in self.terms:
            _check_bits(bits)
            merged[bits] = merged.get(bits, 0j) + complex(amp)
        items = sorted(
            ((b, a) for b, a in merged.items() if abs(a) >= PRUNE),
            key=lambda t: canonical_key(t[0]),
        )
        object.__setattr__(self, "terms", tuple(items))

    @classmethod
    def from_terms(cls, terms: Mapping[str, complex] | Iterable[tuple[str, complex]],
                   normalized: bool = False) -> "QString":
        items = terms.items() if isinstance(terms, Mapping) else terms
        q = cls(tuple(items))
        return normalize(q) if normalized else q

    @classmethod
    def basis(cls, bits: str) -> "QString":
        return cls(((bits, 1.0),))

    def __iter__(self) -> Iterator[tuple[str, complex]]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __getitem__(self, bits: str) -> complex:
        return self.as_dict().get(bits, 0j)

    def as_dict(self) -> dict[str, complex]:
        return dict(self.terms)

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(b for b, _ in self.terms)

    @property
    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for _, a in self.terms)

    @property
    def max_length(self) -> int:
        return max((len(b) for b in self.support), default=0)

    def probabilities(self) -> dict[str, float]:
        return {b: abs(a) ** 2 for b, a in self.terms}

    def scaled(self, factor: complex) -> "QString":
        return QString(tuple((b, a * factor) for b, a in self.terms))

    def to_json(self) -> str:
        return json.dumps({"terms": [{"bits": b, "amp": [a.real, a.imag]} for b, a in self.terms]})

    @classmethod
    def from_json(cls, text: str) -> "QString":
        doc = json.loads(text)
        return cls(tuple((t["bits"], complex(*t["amp"])) for t in doc["terms"]))

    def __repr__(self) -> str:
        body = ", ".join(f"{b or 'ε'}: {a:.6g}" for b, a in self.terms)
        return f"QString({{{body}}})"


def is_normalized(q: QString, tol: float = NORM_TOL) -> bool:
    return abs(q.norm_squared - 1.0) <= tol


def normalize(q: QString) -> QString:
    n2 = q.norm_squared
    if not q.terms or n2 < PRUNE ** 2:
        raise ZeroState("state has no non-negligible amplitude")
    return q.scaled(1.0 / math.sqrt(n2))


def _require_normalized(q: QString, tol: float, what: str = "state") -> None:
    if abs(q.norm_squared - 1.0) > tol:
        raise NotNormalized(f"{what} has squared norm {q.norm_squared!r}")


def average_length(q: QString) -> float:
    """Expected bitstring length, sum of |amp|^2 * len(bits)."""
    _require_normalized(q, AVG_LEN_TOL)
    return math.fsum(abs(a) ** 2 * len(b) for b, a in q.terms)


def inner_product(a: QString, b: QString) -> complex:
    """<a|b>, antilinear in the first argument."""
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    lookup = large.as_dict()
    total = 0j
    for bits, amp in small.terms:
        other = lookup.get(bits)
        if other is not None:
            total += amp.conjugate() * other if small is a else other.conjugate() * amp
    return total


def fidelity(a: QString, b: QString) -> float:
    _require_normalized(a, AVG_LEN_TOL, "first state")
    _require_normalized(b, AVG_LEN_TOL, "second state")
    return min(1.0, abs(inner_product(a, b)) ** 2)


@dataclass(frozen=True)
class ConcatResult:
    state: QString
    collided: bool
    """True when two distinct product terms produced the same bitstring."""


def concat(a: QString, b: QString) -> ConcatResult:
    """Bilinear extension of bitstring concatenation, renormalized.

    The map is an isometry only if no two product terms collide, which
    holds e.g. when the left factor's support is prefix-free.  Collisions
    merge amplitudes and are reported through ``collided``.
    """
    out: dict[str, complex] = {}
    collided = False
    for x, ax in a.terms:
        for y, ay in b.terms:
            key = x + y
            if key in out:
                collided = True
                out[key] += ax * ay
            else:
                out[key] = ax * ay
    return ConcatResult(normalize(QString(tuple(out.items()))), collided)

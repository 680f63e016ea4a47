"""Variable-length coding of n copies of a qubit in the symmetric basis.

``(a|0> + b|1>)^n`` is a superposition over the n+1 normalized symmetric
classes (i zeros, n-i ones) with amplitudes ``a^i b^(n-i) sqrt(C(n,i))``.
Coding each class as a codeword gives a quantum string whose average length
is the expected codeword length under the class probabilities.
"""
from __future__ import annotations

import cmath
import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .qstring import QString

_LN2 = math.log(2)
KINDS = ("fixed", "paper_binom", "shannon", "huffman")


class DegenerateDistribution(ValueError):
    pass


class NoCodewords(ValueError):
    pass


class UnknownCodeword(ValueError):
    pass


@dataclass(frozen=True)
class NCopySpec:
    alpha: complex
    beta: complex
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if abs(abs(self.alpha) ** 2 + abs(self.beta) ** 2 - 1) > 1e-9:
            raise ValueError("|alpha|^2 + |beta|^2 must be 1")

    @classmethod
    def from_alpha2(cls, alpha2: float, n: int) -> "NCopySpec":
        return cls(complex(math.sqrt(alpha2)), complex(math.sqrt(1 - alpha2)), n)


@dataclass(frozen=True)
class SymmetricDecomposition:
    class_amps: tuple[complex, ...]
    class_probs: tuple[float, ...]
    neglog2_probs: tuple[float, ...]
    """-log2 p_i computed in log space (inf for empty classes), so tiny classes keep finite lengths."""

    @property
    def n(self) -> int:
        return len(self.class_amps) - 1


@lru_cache(maxsize=64)
def binomial_row(n: int) -> tuple[int, ...]:
    row = [1]
    for i in range(n):
        row.append(row[-1] * (n - i) // (i + 1))
    return tuple(row)


def symmetric_expand(spec: NCopySpec) -> SymmetricDecomposition:
    n, a, b = spec.n, spec.alpha, spec.beta
    binom = binomial_row(n)
    amps, probs, neglog = [], [], []
    for i in range(n + 1):
        if (a == 0 and i > 0) or (b == 0 and i < n):
            amps.append(0j)
            probs.append(0.0)
            neglog.append(math.inf)
            continue
        # math.log is accurate on arbitrarily large ints
        log_mag = math.log(binom[i]) / 2
        log_mag += i * math.log(abs(a)) if i else 0.0
        log_mag += (n - i) * math.log(abs(b)) if n - i else 0.0
        phase = i * cmath.phase(a) + (n - i) * cmath.phase(b)
        amps.append(cmath.rect(math.exp(log_mag), phase))
        probs.append(math.exp(2 * log_mag))
        neglog.append(-2 * log_mag / _LN2)
    total = math.fsum(probs)
    scale = math.sqrt(total)
    return SymmetricDecomposition(tuple(a / scale for a in amps), tuple(p / total for p in probs),
                                  tuple(h + math.log2(total) for h in neglog))


def class_entropy(d: SymmetricDecomposition) -> float:
    """Shannon entropy of the class distribution in bits (the von Neumann entropy of the dephased state)."""
    return math.fsum(p * h for p, h in zip(d.class_probs, d.neglog2_probs) if p > 0)


def binary_entropy(p: float) -> float:
    return sum(-x * math.log2(x) for x in (p, 1 - p) if x > 0)


@dataclass(frozen=True)
class LengthScheme:
    kind: str
    codeword_lengths: tuple[int, ...]
    codewords: tuple[str | None, ...] | None
    """None for length-only schemes; individual entries are None for empty classes."""

    def kraft_sum(self) -> float:
        if self.codewords is None:
            raise NoCodewords(f"{self.kind} scheme has no codewords")
        return math.fsum(2.0 ** -len(w) for w in self.codewords if w is not None)

    def decoder(self) -> dict[str, int]:
        if self.codewords is None:
            raise NoCodewords(f"{self.kind} scheme has no codewords")
        return {w: i for i, w in enumerate(self.codewords) if w is not None}


def _ceil_log2_int(m: int) -> int:
    return (m - 1).bit_length() if m > 1 else 0


def canonical_codewords(lengths: Sequence[int | None]) -> tuple[str | None, ...]:
    """Canonical prefix code: classes sorted by (length, index) take consecutive codes."""
    order = sorted((l, i) for i, l in enumerate(lengths) if l is not None)
    words: list[str | None] = [None] * len(lengths)
    code, prev = 0, 0
    for rank, (l, i) in enumerate(order):
        if rank:
            code = (code + 1) << (l - prev)
        else:
            code <<= l
        prev = l
        if code >> l:
            raise ValueError("lengths violate the Kraft inequality")
        words[i] = format(code, f"0{l}b") if l else ""
    return tuple(words)


def _huffman_lengths(probs: Sequence[float], live: Sequence[int]) -> dict[int, int]:
    if len(live) == 1:
        return {live[0]: 0}
    parent: dict[int, int] = {}
    heap = [(probs[i], i) for i in live]
    heapq.heapify(heap)
    node = len(probs)
    while len(heap) > 1:
        p1, a = heapq.heappop(heap)
        p2, b = heapq.heappop(heap)
        parent[a] = parent[b] = node
        heapq.heappush(heap, (p1 + p2, node))
        node += 1
    depth = {heap[0][1]: 0}
    for k in range(node - 1, -1, -1):
        if k in parent:
            depth[k] = depth[parent[k]] + 1
    return {i: depth[i] for i in live}


def build_scheme(d: SymmetricDecomposition, kind: str) -> LengthScheme:
    """Codeword lengths (and prefix codewords where they exist) for the n+1 classes.

    Empty classes get no codeword and are left out of the Kraft sum.
    """
    n = d.n
    if not math.isclose(math.fsum(d.class_probs), 1.0, abs_tol=1e-9):
        raise DegenerateDistribution("class probabilities do not sum to 1")
    live = [i for i, p in enumerate(d.neglog2_probs) if p < math.inf]
    if kind == "fixed":
        width = _ceil_log2_int(n + 1)
        return LengthScheme(kind, (width,) * (n + 1),
                            tuple(format(i, f"0{width}b") if width else "" for i in range(n + 1)))
    if kind == "paper_binom":
        return LengthScheme(kind, tuple(_ceil_log2_int(c) for c in binomial_row(n)), None)
    if kind == "shannon":
        lengths = [None] * (n + 1)
        for i in live:
            # guard against -log2 p landing a hair above an integer
            lengths[i] = max(0, math.ceil(d.neglog2_probs[i] - 1e-12))
    elif kind == "huffman":
        lengths = [None] * (n + 1)
        for i, l in _huffman_lengths(d.class_probs, live).items():
            lengths[i] = l
    else:
        raise ValueError(f"unknown scheme {kind!r}; expected one of {KINDS}")
    words = canonical_codewords(lengths)
    return LengthScheme(kind, tuple(l or 0 for l in lengths), words)


def expected_length(d: SymmetricDecomposition, s: LengthScheme) -> float:
    if len(s.codeword_lengths) != len(d.class_probs):
        raise ValueError("scheme and decomposition sizes differ")
    return math.fsum(p * l for p, l in zip(d.class_probs, s.codeword_lengths))


def encode_ncopy(spec: NCopySpec, s: LengthScheme) -> QString:
    if s.codewords is None:
        raise NoCodewords(f"{s.kind} scheme gives lengths only")
    d = symmetric_expand(spec)
    return QString(tuple((w, c) for w, c in zip(s.codewords, d.class_amps) if w is not None and c != 0))


def decode_ncopy(code: QString, s: LengthScheme, spec: NCopySpec) -> SymmetricDecomposition:
    """Invert :func:`encode_ncopy`, returning class amplitudes (zeros for absent classes).

    ``spec`` only fixes n; the amplitudes come from ``code``.
    """
    lookup = s.decoder()
    amps = [0j] * (spec.n + 1)
    for w, a in code.terms:
        if w not in lookup:
            raise UnknownCodeword(f"{w!r} is not a codeword of the {s.kind} scheme")
        amps[lookup[w]] = a
    probs = [abs(a) ** 2 for a in amps]
    neglog = [-math.log2(p) if p > 0 else math.inf for p in probs]
    return SymmetricDecomposition(tuple(amps), tuple(probs), tuple(neglog))


def class_fidelity(a: SymmetricDecomposition, b: SymmetricDecomposition) -> float:
    return abs(sum(x.conjugate() * y for x, y in zip(a.class_amps, b.class_amps))) ** 2


RATE_COLUMNS = ("n", "fixed", "paper_binom", "shannon", "huffman", "entropy", "n_times_h1")


def rate_row(alpha: complex, n: int) -> dict[str, float]:
    a2 = abs(alpha) ** 2
    spec = NCopySpec(complex(alpha), complex(math.sqrt(max(0.0, 1 - a2))), n)
    d = symmetric_expand(spec)
    row = {"n": n}
    for kind in KINDS:
        row[kind] = expected_length(d, build_scheme(d, kind))
    row["entropy"] = class_entropy(d)
    row["n_times_h1"] = n * binary_entropy(a2)
    return row


def rate_report(alpha: complex, n_list: Sequence[int]) -> list[dict[str, float]]:
    """One row per n, ascending."""
    if any(n < 1 for n in n_list):
        raise ValueError("all n must be positive")
    return [rate_row(alpha, n) for n in sorted(set(n_list))]

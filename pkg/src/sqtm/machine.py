"""Second-quantized Turing machine: specs, configurations and the step operator.

Tape symbols are the characters ``"0"``, ``"1"`` and ``"_"`` (vacuum).  The
environment tape is abstracted as an integer clock carried by every
configuration; each step advances it by one on every branch.
"""
from __future__ import annotations

import itertools
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

from .qstring import PRUNE

SYMBOLS = ("0", "1", "_")
VAC = "_"
MOVES = {"L": -1, "S": 0, "R": 1}
MOVE_NAMES = {v: k for k, v in MOVES.items()}
STEP_NORM_TOL = 1e-6


class MachineError(ValueError):
    pass


class SchemaError(MachineError):
    pass


class NonUnitaryStep(MachineError):
    pass


class Transition(NamedTuple):
    amp: complex
    instruction: str
    symbol: str
    move: int


@dataclass(frozen=True)
class MachineSpec:
    """Transition-amplitude table of one machine.

    ``delta`` maps ``(instruction, symbol)`` to the list of branches taken
    from that local situation.  Keys absent from ``delta`` are undefined; a
    configuration reaching one loses its amplitude, which :func:`step`
    reports as a non-unitary step.  Idle entries are filled in when missing
    and must be the identity when given.
    """

    name: str
    instructions: tuple[str, ...]
    q_init: str
    q_idle: str
    delta: Mapping[tuple[str, str], tuple[Transition, ...]] = field(repr=False)

    def __post_init__(self):
        instructions = tuple(self.instructions)
        object.__setattr__(self, "instructions", instructions)
        known = set(instructions)
        if len(known) != len(instructions):
            raise SchemaError("duplicate instruction labels")
        for q in (self.q_init, self.q_idle):
            if q not in known:
                raise SchemaError(f"unknown instruction {q!r}")
        delta: dict[tuple[str, str], tuple[Transition, ...]] = {}
        for (q, s), entries in self.delta.items():
            if q not in known or s not in SYMBOLS:
                raise SchemaError(f"bad delta key {(q, s)!r}")
            fixed = []
            for e in entries:
                tr = Transition(complex(e[0]), e[1], e[2], int(e[3]))
                if tr.instruction not in known or tr.symbol not in SYMBOLS or tr.move not in MOVE_NAMES:
                    raise SchemaError(f"bad transition {e!r} from {(q, s)!r}")
                fixed.append(tr)
            delta[(q, s)] = tuple(fixed)
        for s in SYMBOLS:
            ident = (Transition(1 + 0j, self.q_idle, s, 0),)
            given = delta.setdefault((self.q_idle, s), ident)
            if given != ident:
                raise SchemaError(f"idle entry for {s!r} must leave the tape unchanged and stay")
        object.__setattr__(self, "delta", delta)

    @property
    def is_classical(self) -> bool:
        """Every defined entry is a single branch with amplitude exactly 1."""
        return all(len(es) == 1 and es[0].amp == 1 for es in self.delta.values())

    def to_dict(self) -> dict:
        rows = []
        for (q, s) in sorted(self.delta, key=lambda k: (self.instructions.index(k[0]), SYMBOLS.index(k[1]))):
            if q == self.q_idle:
                continue
            rows.append({
                "from": [q, s],
                "to": [
                    {"amp": [t.amp.real, t.amp.imag], "instruction": t.instruction,
                     "symbol": t.symbol, "move": MOVE_NAMES[t.move]}
                    for t in self.delta[(q, s)]
                ],
            })
        return {"name": self.name, "instructions": list(self.instructions),
                "q_init": self.q_init, "q_idle": self.q_idle, "delta": rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "MachineSpec":
        try:
            delta: dict[tuple[str, str], tuple] = {}
            for row in doc["delta"]:
                q, s = row["from"]
                if (q, s) in delta:
                    raise SchemaError(f"duplicate delta key {(q, s)!r}")
                entries = []
                for t in row["to"]:
                    re, im = t["amp"]
                    move = t["move"]
                    if move not in MOVES:
                        raise SchemaError(f"bad move {move!r}")
                    entries.append((complex(re, im), t["instruction"], t["symbol"], MOVES[move]))
                delta[(q, s)] = tuple(entries)
            return cls(doc["name"], tuple(doc["instructions"]), doc["q_init"], doc["q_idle"], delta)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"malformed machine spec: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "MachineSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(str(exc)) from exc
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path: str | Path) -> "MachineSpec":
        return cls.from_json(Path(path).read_text())


class Configuration(NamedTuple):
    """One classical machine configuration.

    ``tape`` holds cells ``start .. start+len(tape)-1`` and is trimmed of
    vacuum at both ends, so equal configurations compare equal.
    """

    tape: str
    start: int
    head: int
    instruction: str
    env: int = 0

    def symbol_at(self, pos: int) -> str:
        i = pos - self.start
        return self.tape[i] if 0 <= i < len(self.tape) else VAC

    @property
    def working(self) -> str:
        """Cells from the origin rightwards, trailing vacuum dropped."""
        if self.start >= 0:
            return (VAC * self.start + self.tape).rstrip(VAC)
        return self.tape[-self.start:].rstrip(VAC)

    @property
    def history(self) -> tuple[int, str]:
        """Cells left of the origin, which belong to the environment."""
        if self.start >= 0:
            return (0, "")
        return (self.start, self.tape[: -self.start])

    @property
    def env_key(self) -> tuple:
        return (self.history, self.head, self.instruction, self.env)


def make_tape(cells: str, start: int = 0) -> tuple[str, int]:
    stripped = cells.lstrip(VAC)
    start += len(cells) - len(stripped)
    stripped = stripped.rstrip(VAC)
    return (stripped, start if stripped else 0)


def make_config(content: str, instruction: str, head: int = 0, env: int = 0,
                start: int = 0) -> Configuration:
    tape, start = make_tape(content, start)
    return Configuration(tape, start, head, instruction, env)


def write_symbol(cfg: Configuration, pos: int, sym: str) -> tuple[str, int]:
    if cfg.symbol_at(pos) == sym:
        return cfg.tape, cfg.start
    if not cfg.tape:
        return make_tape(sym, pos)
    lo = min(cfg.start, pos)
    hi = max(cfg.start + len(cfg.tape), pos + 1)
    cells = list(VAC * (cfg.start - lo) + cfg.tape + VAC * (hi - cfg.start - len(cfg.tape)))
    cells[pos - lo] = sym
    return make_tape("".join(cells), lo)


@dataclass(frozen=True)
class MachineState:
    terms: Mapping[Configuration, complex]

    def __post_init__(self):
        object.__setattr__(self, "terms", {c: complex(a) for c, a in self.terms.items()
                                           if abs(a) >= PRUNE})

    @property
    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for a in self.terms.values())

    def __len__(self) -> int:
        return len(self.terms)

    def items(self):
        return self.terms.items()


def apply_delta(spec: MachineSpec, cfg: Configuration) -> list[tuple[Configuration, complex]]:
    entries = spec.delta.get((cfg.instruction, cfg.symbol_at(cfg.head)), ())
    out = []
    for tr in entries:
        tape, start = write_symbol(cfg, cfg.head, tr.symbol)
        out.append((Configuration(tape, start, cfg.head + tr.move, tr.instruction, cfg.env + 1), tr.amp))
    return out


def step(spec: MachineSpec, s: MachineState) -> MachineState:
    """Apply one step of the machine to every branch of ``s`` (linearly)."""
    out: dict[Configuration, complex] = defaultdict(complex)
    for cfg, amp in s.terms.items():
        for new, a in apply_delta(spec, cfg):
            out[new] += amp * a
    result = MachineState(out)
    before, after = s.norm_squared, result.norm_squared
    if abs(after ** 0.5 - before ** 0.5) > STEP_NORM_TOL:
        raise NonUnitaryStep(f"{spec.name}: norm {before ** 0.5:.12g} -> {after ** 0.5:.12g}")
    return result


@dataclass(frozen=True)
class UnitarityReport:
    max_deviation: float
    configurations: int
    checked: int
    excluded: int
    """Frontier configurations whose images were not generated."""

    @property
    def ok(self) -> bool:
        return self.max_deviation < 1e-9


def default_seeds(spec: MachineSpec, max_len: int = 3) -> list[Configuration]:
    seeds = []
    for n in range(max_len + 1):
        for bits in itertools.product("01", repeat=n):
            seeds.append(make_config("".join(bits), spec.q_init))
    return seeds


def validate_unitarity(spec: MachineSpec, seeds: Iterable[Configuration], depth: int) -> UnitarityReport:
    """Max entry of |U^dagger U - I| over the configurations reachable from ``seeds``.

    Configurations at exactly ``depth`` steps from every seed form the
    frontier; their columns are not built and they are counted as excluded.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    level = list(dict.fromkeys(seeds))
    seen = set(level)
    columns: list[list[tuple[Configuration, complex]]] = []
    for _ in range(depth):
        nxt = []
        for cfg in level:
            images = apply_delta(spec, cfg)
            columns.append(images)
            for img, _ in images:
                if img not in seen:
                    seen.add(img)
                    nxt.append(img)
        level = nxt
    excluded = len(level)

    gram: dict[tuple[int, int], complex] = defaultdict(complex)
    by_image: dict[Configuration, list[tuple[int, complex]]] = defaultdict(list)
    for col, images in enumerate(columns):
        for img, amp in images:
            by_image[img].append((col, amp))
    for entries in by_image.values():
        for (a, ua), (b, ub) in itertools.product(entries, repeat=2):
            gram[(a, b)] += ua.conjugate() * ub
    worst = 0.0
    for col in range(len(columns)):
        worst = max(worst, abs(gram.get((col, col), 0j) - 1.0))
    for (a, b), g in gram.items():
        if a != b:
            worst = max(worst, abs(g))
    return UnitarityReport(worst, len(seen), len(columns), excluded)

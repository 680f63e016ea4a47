"""Running a machine to convergence and reading off its working tape."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .fock import NonStringFockState
from .machine import (VAC, Configuration, MachineSpec, MachineState, NonUnitaryStep,
                      make_config, step)
from .qstring import QString, canonical_key

RANK_ONE_TOL = 1e-9
DEFAULT_SCHEDULE_BASE = 4
DEFAULT_I_MAX = 20
_CHUNK = 4096


class BudgetExhausted(RuntimeError):
    """The run did not converge within ``max_steps``; ``result`` holds the partial run."""

    def __init__(self, message: str, result: "RunResult"):
        super().__init__(message)
        self.result = result


class NotHalted(RuntimeError):
    pass


def content_to_bits(content: str) -> str:
    if VAC in content:
        raise NonStringFockState(f"working tape {content!r} has a vacuum gap")
    return content


@dataclass(frozen=True)
class TapeDensity:
    """Reduced density matrix of the working tape over a finite basis of tape contents."""

    basis: tuple[str, ...]
    matrix: np.ndarray = field(repr=False)

    @classmethod
    def from_state(cls, s: MachineState) -> "TapeDensity":
        groups: dict[tuple, dict[str, complex]] = defaultdict(dict)
        for cfg, amp in s.terms.items():
            row = groups[cfg.env_key]
            row[cfg.working] = row.get(cfg.working, 0j) + amp
        basis = tuple(sorted({w for row in groups.values() for w in row}, key=canonical_key))
        index = {w: i for i, w in enumerate(basis)}
        vecs = np.zeros((len(groups), len(basis)), dtype=complex)
        for r, row in enumerate(groups.values()):
            for w, a in row.items():
                vecs[r, index[w]] = a
        rho = vecs.T @ vecs.conj()
        return cls(basis, rho)

    def _embed(self, basis: tuple[str, ...]) -> np.ndarray:
        index = {w: i for i, w in enumerate(basis)}
        idx = [index[w] for w in self.basis]
        out = np.zeros((len(basis), len(basis)), dtype=complex)
        out[np.ix_(idx, idx)] = self.matrix
        return out

    def trace_distance(self, other: "TapeDensity") -> float:
        if self.basis == other.basis:
            diff = self.matrix - other.matrix
        else:
            basis = tuple(sorted(set(self.basis) | set(other.basis), key=canonical_key))
            diff = self._embed(basis) - other._embed(basis)
        if not diff.size:
            return 0.0
        return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())

    def eig(self) -> list[tuple[float, np.ndarray]]:
        vals, vecs = np.linalg.eigh(self.matrix)
        order = np.argsort(-vals, kind="stable")
        return [(float(vals[i]), vecs[:, i]) for i in order]

    def expectation(self, q: QString) -> float:
        """<q| rho |q>, the fidelity of the tape with a pure string state."""
        index = {w: i for i, w in enumerate(self.basis)}
        v = np.zeros(len(self.basis), dtype=complex)
        for bits, amp in q.terms:
            if bits in index:
                v[index[bits]] = amp
        return float(np.real(v.conj() @ self.matrix @ v))


def _phase_fixed(vec: np.ndarray) -> np.ndarray:
    for a in vec:
        if abs(a) > 1e-12:
            return vec * (abs(a) / a)
    return vec


def reduced_working_tape(s: MachineState) -> list[tuple[float, QString]]:
    """Spectral decomposition of the working tape with everything else traced out.

    Head, instruction, environment clock and the cells left of the origin
    are traced out.  Eigenvalues are listed in descending order.
    """
    return _spectrum(TapeDensity.from_state(s))


def _spectrum(rho: TapeDensity, cutoff: float = 1e-12) -> list[tuple[float, QString]]:
    out = []
    for val, vec in rho.eig():
        if val <= cutoff:
            continue
        vec = _phase_fixed(vec)
        out.append((val, QString(tuple((content_to_bits(w), a) for w, a in zip(rho.basis, vec)))))
    return out


def _pure_output(s: MachineState) -> QString | None:
    """The tape state itself when every branch shares one environment record."""
    keys = {cfg.env_key for cfg in s.terms}
    if len(keys) != 1:
        return None
    return QString(tuple((content_to_bits(cfg.working), a) for cfg, a in s.terms.items()))


@dataclass
class RunResult:
    halted: bool
    output: QString | None
    spectrum: list[tuple[float, QString]]
    halting_times: dict[int, float]
    convergence_trace: list[tuple[int, float]]
    steps_executed: int
    final_state: MachineState | None = field(default=None, repr=False)
    density: TapeDensity | None = field(default=None, repr=False)

    @property
    def is_pure(self) -> bool:
        return self.output is not None

    def fidelity_with(self, target: QString) -> float:
        if self.density is None:
            raise NotHalted("run has no final tape state")
        return min(1.0, max(0.0, self.density.expectation(target)))


def _initial_terms(input: QString | Mapping[str, complex]) -> dict[str, complex]:
    if isinstance(input, QString):
        return input.as_dict()
    return {str(k): complex(v) for k, v in input.items()}


def initial_state(spec: MachineSpec, input: QString | Mapping[str, complex]) -> MachineState:
    """Input written from cell 0, head at 0, initial instruction, clock 0.

    ``input`` is a string state or a map from tape contents (which may
    contain ``"_"``) to amplitudes.
    """
    return MachineState({make_config(w, spec.q_init): a for w, a in _initial_terms(input).items()})


class _GenericEngine:
    def __init__(self, spec: MachineSpec, state: MachineState):
        self.spec = spec
        self.state = state
        self.time = 0
        self.idle_mass = self._idle_mass()
        self.halting_times: dict[int, float] = {}
        if self.idle_mass > 1e-12:
            self.halting_times[0] = self.idle_mass

    def _idle_mass(self) -> float:
        idle = self.spec.q_idle
        return sum(abs(a) ** 2 for c, a in self.state.terms.items() if c.instruction == idle)

    @property
    def all_idle(self) -> bool:
        idle = self.spec.q_idle
        return all(c.instruction == idle for c in self.state.terms)

    def advance_to(self, target: int) -> None:
        while self.time < target and not self.all_idle:
            self.state = step(self.spec, self.state)
            self.time += 1
            mass = self._idle_mass()
            if mass - self.idle_mass > 1e-12:
                self.halting_times[self.time] = mass - self.idle_mass
            self.idle_mass = mass

    def machine_state(self) -> MachineState:
        return self.state


_SYM = {"0": 0, "1": 1, VAC: 2}
_CHR = "01" + VAC


class _Branch:
    __slots__ = ("tape", "offset", "head", "q", "amp", "idle_time")

    def __init__(self, content: str, q: int, amp: complex, margin: int):
        self.tape = bytearray([2]) * margin + bytearray(_SYM[c] for c in content) + bytearray([2]) * margin
        self.offset = margin
        self.head = margin
        self.q = q
        self.amp = amp
        self.idle_time: int | None = None

    def ensure_margin(self, m: int) -> None:
        if self.head < m:
            grow = max(m, len(self.tape))
            self.tape[:0] = bytearray([2]) * grow
            self.head += grow
            self.offset += grow
        if len(self.tape) - self.head <= m:
            self.tape.extend(bytearray([2]) * max(m, len(self.tape)))


class _ClassicalEngine:
    """Simulates each input branch of a classical machine independently.

    Valid because a classical machine sends every configuration to exactly
    one configuration; merging branches are detected when states are
    assembled.
    """

    def __init__(self, spec: MachineSpec, terms: Mapping[str, complex]):
        self.spec = spec
        self.names = list(spec.instructions)
        qidx = {q: i for i, q in enumerate(self.names)}
        table: list = [None] * (3 * len(self.names))
        for (q, s), (tr,) in spec.delta.items():
            table[3 * qidx[q] + _SYM[s]] = (3 * qidx[tr.instruction], _SYM[tr.symbol], tr.move)
        self.table = table
        self.idle3 = 3 * qidx[spec.q_idle]
        self.time = 0
        self.branches = [_Branch(w, 3 * qidx[spec.q_init], a, _CHUNK) for w, a in terms.items()]
        for b in self.branches:
            if b.q == self.idle3:
                b.idle_time = 0
        self.halting_times: dict[int, float] = {}

    @property
    def all_idle(self) -> bool:
        return all(b.idle_time is not None for b in self.branches)

    def _run(self, b: _Branch, n: int) -> int:
        table, idle3 = self.table, self.idle3
        tape, h, q = b.tape, b.head, b.q
        done = n
        try:
            for i in range(n):
                nq, ns, mv = table[q + tape[h]]
                tape[h] = ns
                h += mv
                q = nq
                if q == idle3:
                    done = i + 1
                    break
        except TypeError:
            raise NonUnitaryStep(f"{self.spec.name}: undefined transition from "
                                 f"({self.names[q // 3]!r}, {_CHR[tape[h]]!r})") from None
        b.head, b.q = h, q
        return done

    def advance_to(self, target: int) -> None:
        last = self.time
        for b in self.branches:
            t = self.time
            while b.idle_time is None and t < target:
                b.ensure_margin(_CHUNK)
                t += self._run(b, min(_CHUNK, target - t))
                if b.q == self.idle3:
                    b.idle_time = t
            if b.idle_time is None:
                last = target
            else:
                last = max(last, b.idle_time)
        self.time = last if self.all_idle else target
        self.halting_times = {}
        for b in self.branches:
            if b.idle_time is not None:
                self.halting_times[b.idle_time] = self.halting_times.get(b.idle_time, 0.0) + abs(b.amp) ** 2

    def machine_state(self) -> MachineState:
        terms: dict[Configuration, complex] = {}
        for b in self.branches:
            cells = b.tape.translate(_TRANSLATE).decode()
            stripped = cells.strip(VAC)
            start = (len(cells) - len(cells.lstrip(VAC)) - b.offset) if stripped else 0
            cfg = Configuration(stripped, start, b.head - b.offset, self.names[b.q // 3], self.time)
            if cfg in terms:
                raise NonUnitaryStep(f"{self.spec.name}: two branches merged into {cfg}")
            terms[cfg] = b.amp
        return MachineState(terms)


_TRANSLATE = bytes.maketrans(bytes([0, 1, 2]), b"01" + VAC.encode())


def run(spec: MachineSpec, input: QString | Mapping[str, complex], max_steps: int,
        schedule_base: int = DEFAULT_SCHEDULE_BASE, i_max: int = DEFAULT_I_MAX) -> RunResult:
    """Step the machine until its working tape provably stops changing.

    Checkpoints sit at ``schedule_base * 2**i``.  Once every branch is idle
    the tape is a fixed point and all remaining checkpoint distances are
    exactly zero, so the run halts there.  Otherwise the run must reach the
    last checkpoint ``schedule_base * 2**(i_max+1)`` with the final
    successive trace distance at most ``2**-i_max``.
    """
    if schedule_base < 1 or i_max < 0:
        raise ValueError("schedule_base must be positive and i_max non-negative")
    terms = _initial_terms(input)
    if not terms:
        raise ValueError("empty input")
    engine = (_ClassicalEngine(spec, terms) if spec.is_classical
              else _GenericEngine(spec, initial_state(spec, terms)))
    checkpoints = [schedule_base * 2 ** i for i in range(i_max + 2)]
    recorded: list[tuple[int, TapeDensity]] = []

    def partial(msg: str) -> BudgetExhausted:
        state = engine.machine_state()
        rho = TapeDensity.from_state(state)
        trace = [(t, r.trace_distance(rho)) for t, r in recorded]
        res = RunResult(False, None, [], dict(engine.halting_times), trace, engine.time, state, rho)
        return BudgetExhausted(msg, res)

    if max_steps < 1:
        raise partial("max_steps must be at least 1 to observe halting")

    halted = False
    for cp in checkpoints:
        engine.advance_to(min(cp, max_steps))
        if engine.all_idle:
            halted = True
            break
        if engine.time < cp:
            raise partial(f"no convergence within {max_steps} steps")
        recorded.append((cp, TapeDensity.from_state(engine.machine_state())))
    else:
        d_last = recorded[-2][1].trace_distance(recorded[-1][1])
        if d_last > 2.0 ** -i_max:
            raise partial(f"tape still moving at step {engine.time} (distance {d_last:.3g})")
        halted = True

    state = engine.machine_state()
    rho = TapeDensity.from_state(state)
    trace = [(t, r.trace_distance(rho)) for t, r in recorded if t < engine.time]
    trace.append((engine.time, 0.0))
    spectrum = _spectrum(rho)
    output = _pure_output(state)
    if output is None and len(spectrum) == 1 and spectrum[0][0] >= 1 - RANK_ONE_TOL:
        output = spectrum[0][1]
    return RunResult(halted, output, spectrum, dict(sorted(engine.halting_times.items())),
                     trace, engine.time, state, rho)


def halting_distribution(r: RunResult) -> dict[int, float]:
    if not r.halted:
        raise NotHalted("run did not halt")
    return dict(r.halting_times)

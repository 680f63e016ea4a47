"""Certified upper bounds on average-length complexity.

Every enumerated classical program is run on the machine.  A witness is a
superposition of halted programs whose combined output reaches the target
with the required fidelity; its average length bounds the complexity from
above, and the witness is re-simulated to certify the fidelity.
"""
from __future__ import annotations

import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import NonStringFockState
from .machine import VAC, MachineSpec
from .qstring import QString, average_length, normalize
from .runner import BudgetExhausted, RunResult, run

log = logging.getLogger(__name__)


class Infeasible(RuntimeError):
    """No examined superposition reaches the fidelity threshold.

    ``report`` holds the best attempt found, or None if nothing halted.
    """

    def __init__(self, message: str, report: "BoundReport | None"):
        super().__init__(message)
        self.report = report


class CostGuard(ValueError):
    pass


@dataclass(frozen=True)
class SearchBudget:
    max_program_length: int = 4
    max_steps_per_program: int = 100_000
    fidelity_threshold: float = 1 - 1e-6
    subset_size_limit: int = 3

    def __post_init__(self):
        if self.max_program_length < 0 or self.max_steps_per_program < 1 or self.subset_size_limit < 1:
            raise ValueError(f"budget fields must be positive: {self}")
        if not 0 < self.fidelity_threshold <= 1:
            raise ValueError("fidelity_threshold must lie in (0, 1]")


@dataclass
class BoundReport:
    bound: float
    witness: QString
    achieved_fidelity: float
    programs_examined: int
    budget: SearchBudget
    predicted_fidelity: float = float("nan")
    halted_programs: int = 0
    feasible: bool = True


def enumerate_programs(max_len: int) -> list[str]:
    """All bitstrings of length 0..max_len in (length, lexicographic) order."""
    if max_len < 0:
        raise ValueError("max_len must be non-negative")
    return ["".join(bits) for n in range(max_len + 1) for bits in itertools.product("01", repeat=n)]


def program_input(program: QString, given: QString | None) -> dict[str, complex]:
    """Tape contents ``given _ program`` for the conditional convention."""
    if given is None:
        return program.as_dict()
    out: dict[str, complex] = {}
    for g, ga in given.terms:
        for p, pa in program.terms:
            key = (g + VAC + p).rstrip(VAC)
            out[key] = out.get(key, 0j) + ga * pa
    return out


@dataclass
class Outcome:
    """Halted final tape of one program, split by the traced-out record.

    ``pieces`` maps (history, head, instruction) to the unnormalized tape
    vector carried by that record.
    """

    program: str
    pieces: dict[tuple, dict[str, complex]]

    @property
    def support(self) -> set[str]:
        return {w for piece in self.pieces.values() for w in piece}


def _pieces(result: RunResult) -> dict[tuple, dict[str, complex]]:
    out: dict[tuple, dict[str, complex]] = defaultdict(dict)
    for cfg, amp in result.final_state.terms.items():
        if VAC in cfg.working:
            raise NonStringFockState(cfg.working)
        record = cfg.env_key[:3]
        out[record][cfg.working] = out[record].get(cfg.working, 0j) + amp
    return dict(out)


class ProgramCatalog:
    """Outcomes of classical programs on one machine, computed once and reused.

    A catalog is tied to a step budget and an optional ``given`` state; it
    grows lazily as longer programs are requested.
    """

    def __init__(self, spec: MachineSpec, max_steps: int, given: QString | None = None):
        self.spec = spec
        self.max_steps = max_steps
        self.given = given
        self._done: dict[str, Outcome | None] = {}

    def outcomes(self, max_len: int) -> tuple[list[Outcome], int]:
        programs = enumerate_programs(max_len)
        for p in programs:
            if p not in self._done:
                self._done[p] = self._evaluate(p)
        found = [self._done[p] for p in programs if self._done[p] is not None]
        return found, len(programs)

    def _evaluate(self, program: str) -> Outcome | None:
        try:
            result = run(self.spec, program_input(QString.basis(program), self.given), self.max_steps)
            return Outcome(program, _pieces(result))
        except BudgetExhausted:
            return None
        except NonStringFockState:
            return None


def _overlaps(outcomes: Sequence[Outcome], target: QString) -> tuple[np.ndarray, list[tuple]]:
    """Matrix A[r, p] = <target | piece of program p under record r>."""
    records = sorted({r for o in outcomes for r in o.pieces}, key=repr)
    index = {r: i for i, r in enumerate(records)}
    t = target.as_dict()
    a = np.zeros((len(records), len(outcomes)), dtype=complex)
    for j, o in enumerate(outcomes):
        for r, piece in o.pieces.items():
            a[index[r], j] = sum(t[w].conjugate() * amp for w, amp in piece.items() if w in t)
    return a, records


def _relevant(outcomes: Sequence[Outcome], target: QString) -> list[Outcome]:
    """Programs whose outputs share support with the target, closed under overlap."""
    reach = set(target.support)
    chosen: set[int] = set()
    grew = True
    while grew:
        grew = False
        for j, o in enumerate(outcomes):
            if j not in chosen and o.support & reach:
                chosen.add(j)
                reach |= o.support
                grew = True
    return [outcomes[j] for j in sorted(chosen)]


def _best_coefficients(a: np.ndarray) -> tuple[float, np.ndarray]:
    """Unit vector c maximizing sum_r |(A c)_r|^2 and that maximum."""
    gram = a.conj().T @ a
    vals, vecs = np.linalg.eigh(gram)
    c = vecs[:, -1]
    k = int(np.argmax(np.abs(c) > 1e-12))
    c = c * (abs(c[k]) / c[k])
    return float(vals[-1]), c


def _certify(spec: MachineSpec, witness: QString, target: QString, given: QString | None,
             max_steps: int) -> float:
    result = run(spec, program_input(witness, given), max_steps)
    return result.fidelity_with(target)


def _search(spec: MachineSpec, target: QString, budget: SearchBudget, given: QString | None,
            catalog: ProgramCatalog | None, max_subset: int) -> BoundReport:
    target = normalize(target)
    if catalog is None:
        catalog = ProgramCatalog(spec, budget.max_steps_per_program, given)
    elif catalog.max_steps != budget.max_steps_per_program or catalog.given != given:
        raise ValueError("catalog was built for a different step budget or given state")
    outcomes, examined = catalog.outcomes(budget.max_program_length)
    relevant = _relevant(outcomes, target)
    a, _ = _overlaps(relevant, target)
    lengths = np.array([len(o.program) for o in relevant], dtype=float)

    best = None  # (bound, size, programs, fidelity, coefficients)
    best_fid = None
    for size in range(1, min(max_subset, len(relevant)) + 1):
        for combo in itertools.combinations(range(len(relevant)), size):
            cols = list(combo)
            fid, c = _best_coefficients(a[:, cols])
            probs = np.abs(c) ** 2
            bound = float(probs @ lengths[cols])
            if best_fid is None or fid > best_fid[0] + 1e-12:
                best_fid = (fid, bound, cols, c)
            if fid >= budget.fidelity_threshold:
                key = (bound, size, [relevant[j].program for j in cols])
                if best is None or key < best[0]:
                    best = (key, fid, cols, c)

    def report(entry_fid: float, cols: list[int], c: np.ndarray, feasible: bool) -> BoundReport:
        witness = normalize(QString(tuple((relevant[j].program, c[i]) for i, j in enumerate(cols))))
        achieved = _certify(spec, witness, target, given, budget.max_steps_per_program)
        return BoundReport(average_length(witness), witness, achieved, examined, budget,
                           entry_fid, len(outcomes), feasible)

    if best is None:
        partial = report(best_fid[0], best_fid[2], best_fid[3], False) if best_fid else None
        raise Infeasible(
            f"no superposition of at most {max_subset} halted programs reaches fidelity "
            f"{budget.fidelity_threshold} (best {best_fid[0] if best_fid else 0.0:.6g})", partial)
    _, fid, cols, c = best
    out = report(fid, cols, c, True)
    if out.achieved_fidelity < budget.fidelity_threshold - 1e-9:
        log.warning("witness re-simulation gave fidelity %.12g below predicted %.12g",
                    out.achieved_fidelity, fid)
    return out


def estimate_sqkc(spec: MachineSpec, target: QString, budget: SearchBudget = SearchBudget(),
                  catalog: ProgramCatalog | None = None) -> BoundReport:
    """Smallest average program length found whose output matches ``target``."""
    return _search(spec, target, budget, None, catalog, budget.subset_size_limit)


def estimate_conditional_sqkc(spec: MachineSpec, target: QString, given: QString,
                              budget: SearchBudget = SearchBudget(),
                              catalog: ProgramCatalog | None = None) -> BoundReport:
    """As :func:`estimate_sqkc` with ``given`` written on the tape before the program.

    Only the program's average length is counted.
    """
    return _search(spec, target, budget, normalize(given), catalog, budget.subset_size_limit)


def classical_only_bound(spec: MachineSpec, target: QString, budget: SearchBudget = SearchBudget(),
                         catalog: ProgramCatalog | None = None,
                         given: QString | None = None) -> BoundReport:
    """Shortest single classical program reproducing ``target``."""
    return _search(spec, target, budget, given, catalog, 1)


def _compositions(total: int, parts: int) -> np.ndarray:
    """All tuples of ``parts`` positive integers summing to ``total``."""
    if parts == 1:
        return np.array([[total]])
    rows = [(*(b - a for a, b in zip((0,) + cut, cut + (total,))),)
            for cut in itertools.combinations(range(1, total), parts - 1)]
    return np.array(rows, dtype=float).reshape(-1, parts)


def brute_force_oracle(spec: MachineSpec, target: QString, max_len: int, grid_points: int,
                       phase_points: int = 8, subset_size_limit: int = 3,
                       max_steps: int = 100_000, fidelity_threshold: float = 0.99) -> BoundReport:
    """Exhaustive grid search over program superpositions, for checking the estimator.

    Probabilities run over the simplex grid with spacing ``1/grid_points``
    and relative phases over ``phase_points`` equally spaced angles.  The
    grid cannot hit a target exactly, so the result is the shortest grid
    point among those attaining the best fidelity on the grid.
    """
    if max_len > 4 or grid_points > 32 or phase_points > 32:
        raise CostGuard(f"oracle limited to max_len <= 4 and grid <= 32 (got {max_len}, {grid_points})")
    if grid_points < 1 or phase_points < 1:
        raise ValueError("grid sizes must be positive")
    target = normalize(target)
    budget = SearchBudget(max_len, max_steps, fidelity_threshold, subset_size_limit)
    programs = enumerate_programs(max_len)
    outcomes = []
    for p in programs:
        try:
            outcomes.append(Outcome(p, _pieces(run(spec, QString.basis(p), max_steps))))
        except (BudgetExhausted, NonStringFockState):
            pass
    a, _ = _overlaps(outcomes, target)
    angles = np.exp(2j * np.pi * np.arange(phase_points) / phase_points)

    best = None  # (fidelity, length, programs, amplitudes)
    for size in range(1, min(subset_size_limit, len(outcomes)) + 1):
        probs = _compositions(grid_points, size) / grid_points
        grid = list(itertools.product(angles, repeat=size - 1))
        phases = np.array(grid, dtype=complex).reshape(len(grid), size - 1)
        phases = np.hstack([np.ones((len(phases), 1)), phases])
        amps = (np.sqrt(probs)[:, None, :] * phases[None, :, :]).reshape(-1, size)
        for combo in itertools.combinations(range(len(outcomes)), size):
            cols = list(combo)
            ls = np.array([len(outcomes[j].program) for j in cols], dtype=float)
            fids = (np.abs(amps @ a[:, cols].T) ** 2).sum(axis=1)
            top = fids.max()
            if best is not None and top < best[0] - 1e-12:
                continue
            mask = fids >= top - 1e-12
            lens = np.abs(amps[mask]) ** 2 @ ls
            k = int(np.argmin(lens))
            cand = (float(top), float(lens[k]), [outcomes[j].program for j in cols], amps[mask][k])
            if best is None or cand[0] > best[0] + 1e-12 or (abs(cand[0] - best[0]) <= 1e-12 and cand[1] < best[1]):
                best = cand
    if best is None:
        raise Infeasible("no halted programs", None)
    fid, length, progs, amp = best
    witness = QString(tuple(zip(progs, amp)))
    rep = BoundReport(length, witness, fid, len(programs), budget, fid, len(outcomes), fid >= fidelity_threshold)
    if not rep.feasible:
        raise Infeasible(f"best grid fidelity {fid:.6g} below {fidelity_threshold}", rep)
    return rep

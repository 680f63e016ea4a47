import math
from collections import defaultdict

import numpy as np
import pytest

from sqtm import QString, fidelity, normalize
from sqtm.machine import MachineSpec, MachineState, NonUnitaryStep, make_config, step
from sqtm.machines import binary_numeral, build_hadamard, build_unary_expander
from sqtm.runner import (BudgetExhausted, NotHalted, TapeDensity, _GenericEngine, halting_distribution,
                         initial_state, reduced_working_tape, run)

from test_machine import classical

R = 1 / math.sqrt(2)
EXP = build_unary_expander()


def psi_input(n):
    return QString.from_terms({"0": math.sqrt(2 / 3), binary_numeral(n): math.sqrt(1 / 3)})


def dense_reduced(s: MachineState):
    """rho[w, w'] = sum over configuration pairs agreeing off the working tape."""
    cfgs = list(s.terms.items())
    rho = defaultdict(complex)
    for c1, a1 in cfgs:
        for c2, a2 in cfgs:
            if c1.env_key == c2.env_key:
                rho[(c1.working, c2.working)] += a1 * a2.conjugate()
    return rho


def test_expander_outputs_unary():
    for n in range(1, 41):
        r = run(EXP, QString.basis(binary_numeral(n)), 10 ** 6)
        assert r.halted and r.output.support == ("1" * n,)


@pytest.mark.parametrize("w", ["", "0", "00", "0110", "01"])
def test_expander_leaves_leading_zero_inputs(w):
    r = run(EXP, QString.basis(w), 1000)
    assert r.output.support == (w,)
    assert halting_distribution(r) == {1: 1.0}


def test_superposed_halting_times():
    r = run(EXP, psi_input(8), 10 ** 6)
    assert r.is_pure
    assert halting_distribution(r) == pytest.approx({1: 2 / 3, 98: 1 / 3}, abs=1e-12)
    target = QString.from_terms({"0": math.sqrt(2 / 3), "1" * 8: math.sqrt(1 / 3)})
    assert r.fidelity_with(target) == pytest.approx(1, abs=1e-12)
    assert fidelity(r.output, target) == pytest.approx(1, abs=1e-12)


def test_classical_engine_matches_generic_stepping(rng):
    for _ in range(10):
        words = sorted({"".join(rng.choice(["0", "1"], size=int(rng.integers(0, 5)))) for _ in range(3)})
        amps = rng.normal(size=len(words)) + 1j * rng.normal(size=len(words))
        q = normalize(QString(tuple(zip(words, amps))))
        fast = run(EXP, q, 10 ** 5)
        eng = _GenericEngine(EXP, initial_state(EXP, q))
        eng.advance_to(fast.steps_executed)
        assert eng.all_idle
        slow = eng.machine_state()
        assert slow.terms.keys() == fast.final_state.terms.keys()
        for cfg, a in slow.terms.items():
            assert fast.final_state.terms[cfg] == pytest.approx(a)
        assert eng.halting_times == pytest.approx(fast.halting_times)


def test_reduced_tape_matches_dense_partial_trace(rng):
    spec = classical([("init", "0", "idle", "0", "R"), ("init", "1", "idle", "1", "S"),
                      ("init", "_", "idle", "_", "S")])
    r = run(spec, QString.from_terms({"0": R, "1": R}), 100)
    rho = TapeDensity.from_state(r.final_state)
    dense = dense_reduced(r.final_state)
    for (w1, w2), v in dense.items():
        i, j = rho.basis.index(w1), rho.basis.index(w2)
        assert rho.matrix[i, j] == pytest.approx(v)
    # head position differs, so the tape is mixed
    assert not r.is_pure
    spec_vals = [v for v, _ in reduced_working_tape(r.final_state)]
    assert spec_vals == pytest.approx([0.5, 0.5])


def test_random_state_density_oracle(rng):
    configs = [make_config(w, q, head=h, env=e) for w in ("", "0", "1", "01") for q in ("a", "b")
               for h in (0, 1) for e in (0, 1)]
    for _ in range(20):
        idx = rng.choice(len(configs), size=6, replace=False)
        amps = rng.normal(size=6) + 1j * rng.normal(size=6)
        amps /= np.linalg.norm(amps)
        s = MachineState({configs[i]: a for i, a in zip(idx, amps)})
        rho = TapeDensity.from_state(s)
        dense = dense_reduced(s)
        for (w1, w2), v in dense.items():
            assert rho.matrix[rho.basis.index(w1), rho.basis.index(w2)] == pytest.approx(v)
        assert np.trace(rho.matrix).real == pytest.approx(1)
        vals = np.linalg.eigvalsh(rho.matrix)
        assert vals.min() > -1e-12


def test_hadamard_interference_through_runner():
    spec = build_hadamard()
    r = run(spec, QString.from_terms({"0": R, "1": R}), 100)
    assert r.output.support == ("0",)
    r = run(spec, QString.basis("0"), 100)
    assert r.output.as_dict() == pytest.approx({"0": R, "1": R})
    assert halting_distribution(r) == pytest.approx({1: 1.0})


def test_trace_distance_union_basis():
    a = TapeDensity(("0",), np.array([[1.0 + 0j]]))
    b = TapeDensity(("1",), np.array([[1.0 + 0j]]))
    assert a.trace_distance(b) == pytest.approx(1)
    assert a.trace_distance(a) == 0


def test_budget_exhausted_carries_partial_result():
    with pytest.raises(BudgetExhausted) as err:
        run(EXP, psi_input(8), 20)
    res = err.value.result
    assert not res.halted
    assert res.halting_times == pytest.approx({1: 2 / 3})
    with pytest.raises(NotHalted):
        halting_distribution(res)


def test_zero_budget():
    with pytest.raises(BudgetExhausted):
        run(EXP, QString.basis("0"), 0)


def test_moving_tape_never_converges():
    writer = classical([("init", "_", "init", "1", "R"), ("init", "0", "idle", "0", "S"),
                        ("init", "1", "idle", "1", "S")])
    with pytest.raises(BudgetExhausted, match="still moving"):
        run(writer, QString.basis(""), 10 ** 4, schedule_base=1, i_max=4)


def test_static_tape_converges_without_idling():
    walker = classical([("init", "_", "init", "_", "R"), ("init", "0", "idle", "0", "S"),
                        ("init", "1", "idle", "1", "S")])
    r = run(walker, QString.basis(""), 10 ** 4, schedule_base=1, i_max=4)
    assert r.halted and r.halting_times == {}
    assert r.output.support == ("",)


def test_undefined_transition_raises():
    spec = classical([("init", "0", "idle", "0", "S")])
    with pytest.raises(NonUnitaryStep):
        run(spec, QString.basis("1"), 100)


def test_bad_schedule():
    with pytest.raises(ValueError):
        run(EXP, QString.basis("0"), 100, schedule_base=0)
    with pytest.raises(ValueError):
        run(EXP, QString.basis("0"), 100, i_max=-1)


def test_halting_times_follow_numeral_length():
    times = [max(halting_distribution(run(EXP, QString.basis(binary_numeral(n)), 10 ** 6)))
             for n in (1, 8, 2047)]
    assert times == [9, 98, 51199]

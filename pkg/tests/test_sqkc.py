import math

import pytest

from sqtm import QString, fidelity
from sqtm.machines import binary_numeral, build_conditional_expander, build_unary_expander
from sqtm.runner import run
from sqtm.sqkc import (CostGuard, Infeasible, ProgramCatalog, SearchBudget, brute_force_oracle,
                       classical_only_bound, enumerate_programs, estimate_conditional_sqkc,
                       estimate_sqkc, program_input)

EXP = build_unary_expander()
CEXP = build_conditional_expander()


def psi(n, alpha=1 / math.sqrt(3)):
    return QString.from_terms({"0": math.sqrt(1 - alpha ** 2), "1" * n: alpha})


@pytest.fixture(scope="module")
def catalog():
    return ProgramCatalog(EXP, 100_000)


def test_enumerate_programs_order():
    assert enumerate_programs(2) == ["", "0", "1", "00", "01", "10", "11"]
    assert len(enumerate_programs(5)) == 63
    with pytest.raises(ValueError):
        enumerate_programs(-1)


def test_program_input_places_given_before_program():
    given = QString.from_terms({"1": 1})
    prog = QString.from_terms({"": 1, "0": 1}, normalized=True)
    assert program_input(prog, given) == pytest.approx({"1": 2 ** -0.5, "1_0": 2 ** -0.5})


def test_psi8_bound_and_witness(catalog):
    rep = estimate_sqkc(EXP, psi(8), SearchBudget(4), catalog)
    assert rep.bound == pytest.approx(2.0)
    assert set(rep.witness.support) == {"0", "1000"}
    assert rep.achieved_fidelity >= 1 - 1e-9
    # independent re-simulation of the witness
    out = run(EXP, rep.witness, 10 ** 5)
    assert fidelity(out.output, psi(8)) >= 1 - 1e-9


def test_bound_is_average_numeral_length(catalog):
    for n in (2, 3, 5, 8, 13):
        rep = estimate_sqkc(EXP, psi(n), SearchBudget(4), catalog)
        assert rep.bound == pytest.approx(2 / 3 + len(binary_numeral(n)) / 3)


def test_classical_bound_for_basis_target(catalog):
    rep = classical_only_bound(EXP, QString.basis("1" * 8), SearchBudget(4), catalog)
    assert rep.bound == 4
    assert rep.witness.support == ("1000",)


def test_classical_bound_infeasible_for_superposition(catalog):
    with pytest.raises(Infeasible) as err:
        classical_only_bound(EXP, psi(8), SearchBudget(4), catalog)
    assert err.value.report.achieved_fidelity == pytest.approx(2 / 3)
    assert not err.value.report.feasible


def test_too_short_budget_is_infeasible():
    with pytest.raises(Infeasible):
        estimate_sqkc(EXP, psi(8), SearchBudget(2))


def test_empty_string_target_costs_nothing(catalog):
    assert estimate_sqkc(EXP, QString.basis(""), SearchBudget(4), catalog).bound == 0


def test_monotone_in_budget():
    bounds = []
    for L in (4, 5, 6):
        bounds.append(estimate_sqkc(EXP, psi(8), SearchBudget(L)).bound)
    assert bounds == sorted(bounds, reverse=True)


def test_monotone_in_steps_and_subset_size():
    target = QString.from_terms({"0": 0.6, "11": 0.6, "1111": math.sqrt(0.28)})
    prev = math.inf
    for steps, size in [(40, 3), (100, 3), (10 ** 5, 3)]:
        try:
            b = estimate_sqkc(EXP, target, SearchBudget(3, steps, subset_size_limit=size)).bound
        except Infeasible:
            b = math.inf
        assert b <= prev
        prev = b
    assert prev == pytest.approx(0.36 + 0.72 + 0.28 * 3)
    with pytest.raises(Infeasible):
        estimate_sqkc(EXP, target, SearchBudget(3, subset_size_limit=2))


def test_catalog_budget_mismatch(catalog):
    with pytest.raises(ValueError):
        estimate_sqkc(EXP, psi(8), SearchBudget(4, max_steps_per_program=10), catalog)


def test_step_budget_drops_slow_programs():
    rep_fast = ProgramCatalog(EXP, 50).outcomes(4)
    rep_all = ProgramCatalog(EXP, 10 ** 5).outcomes(4)
    assert rep_fast[1] == rep_all[1]
    assert len(rep_fast[0]) < len(rep_all[0])


def test_conditional_given_the_numeral():
    given = QString.basis("1000")
    rep = estimate_conditional_sqkc(CEXP, QString.basis("1" * 8), given, SearchBudget(3))
    assert rep.bound == 0


def test_conditional_with_empty_given_equals_unconditional():
    target = psi(8)
    cond = estimate_conditional_sqkc(CEXP, target, QString.basis(""), SearchBudget(4))
    plain = estimate_sqkc(EXP, target, SearchBudget(4))
    assert cond.bound == pytest.approx(plain.bound)
    assert cond.achieved_fidelity >= 1 - 1e-9


def test_useless_given_costs_the_unconditional_bound():
    plain = estimate_sqkc(EXP, psi(8), SearchBudget(4)).bound
    for g in ("0", "01", "110"):
        cond = estimate_conditional_sqkc(CEXP, psi(8), QString.basis(g), SearchBudget(4))
        assert abs(cond.bound - plain) <= 1e-9
        assert cond.achieved_fidelity >= 1 - 1e-9


def test_unary_given_numeral_is_constant_over_n():
    bounds = {estimate_conditional_sqkc(CEXP, QString.basis("1" * n), QString.basis(binary_numeral(n)),
                                        SearchBudget(2)).bound for n in (2, 5, 17, 64)}
    assert bounds == {0}


def test_conditional_machine_archives_given():
    import itertools
    words = ["".join(b) for n in range(4) for b in itertools.product("01", repeat=n)]
    for g in words:
        for p in words[1:]:
            cfg, = run(CEXP, {(g + "_" + p): 1}, 10 ** 5).final_state.terms
            assert cfg.history == (-len(g) - 2, g + "1_")


def test_given_numeral_makes_unary_free():
    for n in (3, 8, 12):
        target = QString.basis("1" * n)
        plain = estimate_sqkc(EXP, target, SearchBudget(4)).bound
        given = QString.basis(binary_numeral(n))
        assert estimate_conditional_sqkc(CEXP, target, given, SearchBudget(4)).bound == 0
        assert plain == len(binary_numeral(n))


def test_oracle_agrees_on_tiny_instance():
    target = QString.from_terms({"0": math.sqrt(0.5), "11": math.sqrt(0.5)})
    est = estimate_sqkc(EXP, target, SearchBudget(3))
    ora = brute_force_oracle(EXP, target, 3, 20)
    assert abs(est.bound - ora.bound) <= 0.05


def test_oracle_cost_guard():
    with pytest.raises(CostGuard):
        brute_force_oracle(EXP, psi(8), 5, 10)


def test_budget_validation():
    with pytest.raises(ValueError):
        SearchBudget(-1)
    with pytest.raises(ValueError):
        SearchBudget(fidelity_threshold=1.5)

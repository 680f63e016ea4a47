import math

import numpy as np
from hypothesis import given, settings, strategies as st

from sqtm import QString, average_length, fidelity, fock_decode, fock_encode, normalize
from sqtm.literal import format_state, parse_state_literal
from sqtm.machine import MachineState, default_seeds, step
from sqtm.machines import build_unary_expander
from sqtm.symcodec import NCopySpec, build_scheme, canonical_codewords, symmetric_expand

bits = st.text(alphabet="01", max_size=8)
amps = st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False)
states = st.dictionaries(bits, amps, min_size=1, max_size=10).map(
    lambda d: normalize(QString.from_terms(d)))


@given(states)
def test_average_length_bounded_by_support(q):
    lengths = [len(b) for b in q.support]
    assert min(lengths) - 1e-9 <= average_length(q) <= max(lengths) + 1e-9


@given(states)
def test_fock_roundtrip(q):
    assert fock_decode(fock_encode(q, max(1, q.max_length) + 1)) == q


@given(states)
def test_literal_roundtrip(q):
    assert fidelity(parse_state_literal(format_state(q)), q) >= 1 - 1e-12


@given(states, st.floats(0, 2 * math.pi))
def test_global_phase_invisible(q, theta):
    assert fidelity(q, q.scaled(complex(math.cos(theta), math.sin(theta)))) >= 1 - 1e-12


EXP = build_unary_expander()
SEEDS = default_seeds(EXP, 4)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(SEEDS), amps), min_size=1, max_size=6),
       st.integers(0, 30))
def test_step_unitary_on_reachable_states(terms, t):
    s = {}
    for cfg, a in terms:
        s[cfg] = s.get(cfg, 0) + a
    norm = math.sqrt(sum(abs(a) ** 2 for a in s.values()))
    if norm < 1e-6:
        return
    state = MachineState({c: a / norm for c, a in s.items()})
    for _ in range(t):
        state = step(EXP, state)
    assert abs(state.norm_squared - 1) < 1e-9


@given(st.lists(st.integers(0, 12), min_size=1, max_size=20))
def test_canonical_code_prefix_free_when_kraft_holds(lengths):
    if sum(2.0 ** -l for l in lengths) > 1:
        return
    words = canonical_codewords(lengths)
    assert [len(w) for w in words] == lengths
    for i, x in enumerate(words):
        for j, y in enumerate(words):
            assert i == j or not y.startswith(x)


@given(st.floats(0.01, 0.99), st.integers(1, 40))
def test_huffman_between_entropy_and_fixed(a2, n):
    d = symmetric_expand(NCopySpec.from_alpha2(a2, n))
    h = sum(p * l for p, l in zip(d.class_probs, d.neglog2_probs) if p > 0)
    costs = {k: float(np.dot(d.class_probs, build_scheme(d, k).codeword_lengths))
             for k in ("fixed", "shannon", "huffman")}
    assert h - 1e-9 <= costs["huffman"] <= costs["shannon"] + 1e-9
    assert costs["huffman"] <= costs["fixed"] + 1e-9

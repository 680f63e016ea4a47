"""Reference machines shipped with the toolkit."""
from __future__ import annotations

import math
from importlib import resources
from pathlib import Path

from .machine import MOVES, MachineSpec

# Binary numeral (MSB first) -> unary.  The counter is kept right of a
# vacuum gap; each round writes a 1 into the gap while shifting the counter
# one cell right, then decrements it from the least significant end.
_EXPANDER = """
init    0  idle    0 S
init    _  idle    _ S
init    1  c1      _ R
c0      0  c0      0 R
c0      1  c1      0 R
c0      _  dec_lsb 0 S
c1      0  c0      1 R
c1      1  c1      1 R
c1      _  dec_lsb 1 S
dec_lsb 1  ret_z   0 L
dec_lsb 0  dec     1 L
dec     0  dec     1 L
dec     1  ret_nz  0 L
ret_z   0  ret_z   0 L
ret_z   1  ret_nz  1 L
ret_z   _  erase   1 R
ret_nz  0  ret_nz  0 L
ret_nz  1  ret_nz  1 L
ret_nz  _  shift   1 R
shift   0  c0      _ R
shift   1  c1      _ R
erase   0  erase   _ R
erase   _  back1   _ L
back1   _  back1   _ L
back1   1  back2   1 L
back2   1  back2   1 L
back2   _  idle    _ R
"""

# Tape holds ``given _ program``.  An empty program expands the given.
# Otherwise the given is moved bit by bit into the cells left of the origin
# (ending at cell -3), the program shifting one cell left per bit, and a
# marker 1 goes to cell -2; the program then sits at the origin and is
# expanded.  The record ``given 1`` left of the origin keeps the map
# injective.
_CONDITIONAL_PREAMBLE = """
x_init  _  x_mk1   _ L
x_init  0  x_scan  0 R
x_init  1  x_scan  1 R
x_mk1   _  x_mk2   _ L
x_mk2   _  x_mk3   1 R
x_mk3   _  x_mk4   _ R
x_mk4   _  x_shl   _ R
x_shl   0  x_put0  _ L
x_shl   1  x_put1  _ L
x_shl   _  x_rewa  _ L
x_put0  _  x_skip  0 R
x_put1  _  x_skip  1 R
x_skip  _  x_shl   _ R
x_rewa  _  x_rew   _ L
x_rew   0  x_rew   0 L
x_rew   1  x_rew   1 L
x_rew   _  init    _ R
x_scan  0  x_scan  0 R
x_scan  1  x_scan  1 R
x_scan  _  x_peek  _ R
x_peek  _  x_rewb  _ L
x_peek  0  a_rw2   0 L
x_peek  1  a_rw2   1 L
x_rewb  _  x_rew   _ L
a_rw2   0  a_rw2   0 L
a_rw2   1  a_rw2   1 L
a_rw2   _  a_rw3   _ L
a_rw3   0  a_c0    _ L
a_rw3   1  a_c1    _ L
a_rw3   _  x_mk2   _ L
a_c0    0  a_c0    0 L
a_c0    1  a_c0    1 L
a_c0    _  a_d0    _ L
a_d0    _  a_e0    _ L
a_e0    0  a_e0    0 L
a_e0    1  a_e0    1 L
a_e0    _  a_r1    0 R
a_c1    0  a_c1    0 L
a_c1    1  a_c1    1 L
a_c1    _  a_d1    _ L
a_d1    _  a_e1    _ L
a_e1    0  a_e1    0 L
a_e1    1  a_e1    1 L
a_e1    _  a_r1    1 R
a_r1    0  a_r1    0 R
a_r1    1  a_r1    1 R
a_r1    _  a_r2    _ R
a_r2    _  a_r3    _ R
a_r3    0  a_r4    0 R
a_r3    1  a_r4    1 R
a_r3    _  a_g1    _ R
a_r4    0  a_r4    0 R
a_r4    1  a_r4    1 R
a_r4    _  a_g1    _ R
a_g1    _  a_shl   _ R
a_shl   0  a_put0  _ L
a_shl   1  a_put1  _ L
a_shl   _  a_rw1   _ L
a_put0  _  a_skip  0 R
a_put1  _  a_skip  1 R
a_skip  _  a_shl   _ R
a_rw1   _  a_rw2   _ L
"""


def _classical(name: str, table: str, q_init: str) -> MachineSpec:
    delta = {}
    instructions = [q_init, "idle"]
    for line in filter(str.strip, table.splitlines()):
        q, s, nq, ns, mv = line.split()
        for label in (q, nq):
            if label not in instructions:
                instructions.append(label)
        delta[(q, s)] = ((1.0, nq, ns, MOVES[mv]),)
    return MachineSpec(name, tuple(instructions), q_init, "idle", delta)


def build_unary_expander() -> MachineSpec:
    """|0> -> |0>, binary numeral of n > 0 -> 1^n.

    Strings with a leading 0 and the empty string are left unchanged, so
    the computed map is injective on all bitstrings.
    """
    return _classical("unary_expander", _EXPANDER, "init")


def build_conditional_expander() -> MachineSpec:
    return _classical("conditional_expander", _CONDITIONAL_PREAMBLE + _EXPANDER, "x_init")


def build_identity() -> MachineSpec:
    return _classical("identity", "init 0 idle 0 S\ninit 1 idle 1 S\ninit _ idle _ S", "init")


def build_not() -> MachineSpec:
    """Flips the first cell and idles."""
    return _classical("not", "init 0 idle 1 S\ninit 1 idle 0 S\ninit _ idle _ S", "init")


def build_hadamard() -> MachineSpec:
    r = 1 / math.sqrt(2)
    delta = {
        ("init", "0"): ((r, "idle", "0", 0), (r, "idle", "1", 0)),
        ("init", "1"): ((r, "idle", "0", 0), (-r, "idle", "1", 0)),
        ("init", "_"): ((1.0, "idle", "_", 0),),
    }
    return MachineSpec("hadamard", ("init", "idle"), "init", "idle", delta)


BUILDERS = {
    "unary_expander": build_unary_expander,
    "conditional_expander": build_conditional_expander,
    "identity": build_identity,
    "not": build_not,
    "hadamard": build_hadamard,
}


def shipped_machine_path(name: str) -> Path:
    return Path(str(resources.files("sqtm") / "data" / f"{name}.json"))


def binary_numeral(n: int) -> str:
    """MSB-first binary numeral without leading zeros."""
    if n < 1:
        raise ValueError("numerals are defined for n >= 1")
    return format(n, "b")

"""Indeterminate-length quantum strings and the second-quantized Turing machine."""
from .qstring import (QString, ZeroState, NotNormalized, normalize, average_length,
                      inner_product, fidelity, concat)
from .fock import FockState, fock_encode, fock_decode, TooFewModes, NonStringFockState
from .machine import (MachineSpec, Configuration, MachineState, Transition, step,
                      validate_unitarity, NonUnitaryStep, SchemaError)
from .runner import (RunResult, run, reduced_working_tape, halting_distribution,
                     BudgetExhausted, NotHalted)
from .machines import build_unary_expander, build_conditional_expander

__version__ = "0.1.0"

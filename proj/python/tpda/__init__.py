"""Timed register pushdown automata: emptiness, untiming, integer set equations."""

from ._tpda import (
    DtPDA,
    EqSystem,
    TrPDA,
    encode_minsky,
    normal_form,
    orbits,
    to_equations,
)

__all__ = [
    "DtPDA",
    "EqSystem",
    "TrPDA",
    "encode_minsky",
    "normal_form",
    "orbits",
    "to_equations",
]

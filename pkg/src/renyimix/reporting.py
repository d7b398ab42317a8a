"""Result containers shared by the estimator and bound modules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def matrix_to_jsonable(m: np.ndarray) -> dict:
    out = {"dim": int(m.shape[0]), "re": np.round(m.real, 14).tolist()}
    if np.any(np.abs(m.imag) > 0):
        out["im"] = np.round(m.imag, 14).tolist()
    return out


@dataclass
class ConstantEstimate:
    """A numeric estimate plus how it was obtained.

    `method` is one of closed-form | eigenvalue | optimization-upper-bound |
    optimization-lower-bound. Optimization upper bounds estimate an infimum
    from above (value >= true constant); lower bounds estimate a supremum
    from below. Closed-form and eigenvalue values are exact up to
    linear-algebra error.
    """

    value: float
    method: str
    witness: np.ndarray | None = None
    restarts: int = 0
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        out = {
            "value": self.value,
            "method": self.method,
            "restarts": self.restarts,
            "converged": self.converged,
        }
        if self.witness is not None:
            out["witness"] = matrix_to_jsonable(self.witness)
        extras = {k: v for k, v in self.diagnostics.items() if isinstance(v, (int, float, str, bool))}
        if extras:
            out["diagnostics"] = extras
        return out


@dataclass
class BoundReport:
    """An evaluated bound formula with its inputs and units."""

    value: float
    units: str  # time | probability | nats | bits
    formula: str
    inputs: dict = field(default_factory=dict)
    clamped: bool = False
    note: str = ""

    def to_jsonable(self) -> dict:
        out = {
            f"value_{self.units}": self.value,
            "formula": self.formula,
            "inputs": {k: v for k, v in self.inputs.items() if isinstance(v, (int, float, str, bool))},
            "clamped": self.clamped,
        }
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class FunctionalValue:
    """Value of an entropy/energy functional with its intermediate norms."""

    value: float
    functional: str  # var | kappa | ent | dirichlet | entropy_production | pq_norm
    p: float
    diagnostics: dict = field(default_factory=dict)

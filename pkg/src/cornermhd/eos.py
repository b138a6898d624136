"""Equations of state R(p, s) with R > 0 and dR/dp > 0.

Two constitutive laws are built in:

* ``ideal_gas(gamma)``  -- R = p^(1/gamma) exp(-s/gamma), so Q = gamma p;
* ``affine(epsilon)``   -- R = 1 + epsilon p (s-independent), Q = R/epsilon.

Q = R / (dR/dp) is the combination entering the pressure equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EosDomainError
from .fields import ScalarField


@dataclass(frozen=True)
class EosModel:
    kind: str
    gamma: float = 0.0
    epsilon: float = 0.0

    def eval_arrays(self, p: np.ndarray, s: np.ndarray):
        """(R, dR/dp, Q) arrays; raises EosDomainError with the first
        offending cell if the state leaves the admissible region."""
        p = np.asarray(p, float)
        s = np.asarray(s, float)
        if self.kind == "ideal_gas":
            bad = p <= 0.0
            if np.any(bad):
                raise EosDomainError(f"ideal gas needs p > 0 at cell {_first_bad(bad)}")
            R = p ** (1.0 / self.gamma) * np.exp(-s / self.gamma)
            Rp = R / (self.gamma * p)
            Q = self.gamma * p
            return R, Rp, np.broadcast_to(Q, R.shape)
        # affine (s-independent)
        R = 1.0 + self.epsilon * p
        bad = R <= 0.0
        if np.any(bad):
            raise EosDomainError(f"affine law needs 1 + eps*p > 0 at cell {_first_bad(bad)}")
        Rp = np.full_like(np.asarray(R, float), self.epsilon)
        return R, Rp, R / self.epsilon


def _first_bad(mask) -> tuple:
    idx = np.argwhere(mask)
    return tuple(int(k) for k in idx[0]) if idx.size else ()


def ideal_gas(gamma: float = 5.0 / 3.0) -> EosModel:
    if gamma <= 1.0:
        raise EosDomainError(f"ideal gas exponent must exceed 1, got {gamma}")
    return EosModel("ideal_gas", gamma=gamma)


def affine(epsilon: float) -> EosModel:
    if epsilon <= 0.0:
        raise EosDomainError(
            f"affine law needs epsilon > 0 (dR/dp > 0), got {epsilon}"
        )
    return EosModel("affine", epsilon=epsilon)


def eos_eval(eos: EosModel, p: ScalarField, s: ScalarField):
    """Pointwise (R, dR/dp, Q) as scalar fields on p's grid."""
    R, Rp, Q = eos.eval_arrays(p.values, s.values)
    g = p.grid
    return ScalarField(g, R), ScalarField(g, Rp), ScalarField(g, Q.copy())

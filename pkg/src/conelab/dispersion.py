"""Node-preserving mixing of N Dirac species and the E ~ p^N dispersion.

The ladder Hamiltonian keeps a zero mode at p = 0 while the coupling g
pushes all other branches away, leaving a single low-energy branch whose
energy scales as the N-th power of momentum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ValidationError
from .linalg import eigvalsh_batch
from .pauli import SIGMA_MINUS, SIGMA_PLUS, SIGMA_X, SIGMA_Y

_WINDOW_CEILING = 1e-2   # p_max must stay below this times g / c_l


@dataclass(frozen=True)
class LadderMixModel:
    """N coupled Dirac species with inter-species coupling g."""

    layers: int
    coupling: float
    c_l: float = 1.0

    def __post_init__(self):
        if int(self.layers) != self.layers or self.layers < 1:
            raise ValidationError("layers must be a positive integer")
        if not (np.isfinite(self.coupling) and self.coupling > 0):
            raise ValidationError("coupling g must be positive")
        if not np.isfinite(self.c_l) or self.c_l == 0.0:
            raise ValidationError("c_l must be finite and nonzero")


def ladder_hamiltonian(model: LadderMixModel, p) -> np.ndarray:
    """2N x 2N block-tridiagonal Hamiltonian at continuum momentum p.

    Diagonal 2x2 blocks are c_l p . sigma; the species ladder couples block
    j to j+1 through g sigma+ above and g sigma- below the diagonal.
    """
    return ladder_hamiltonian_batch(model, np.asarray(p, dtype=float)[None, :])[0]


def ladder_hamiltonian_batch(model: LadderMixModel, ps: np.ndarray) -> np.ndarray:
    ps = np.asarray(ps, dtype=float)
    n = model.layers
    out = np.zeros(ps.shape[:-1] + (2 * n, 2 * n), dtype=np.complex128)
    onsite = model.c_l * (
        ps[..., 0, None, None] * SIGMA_X + ps[..., 1, None, None] * SIGMA_Y
    )
    for j in range(n):
        sl = slice(2 * j, 2 * j + 2)
        out[..., sl, sl] = onsite
    for j in range(n - 1):
        up = slice(2 * j, 2 * j + 2)
        dn = slice(2 * j + 2, 2 * j + 4)
        out[..., up, dn] = model.coupling * SIGMA_PLUS
        out[..., dn, up] = model.coupling * SIGMA_MINUS
    return out


def smallest_positive_energies(model: LadderMixModel, ps: np.ndarray) -> np.ndarray:
    """Lowest positive band at each momentum (the spectrum is symmetric)."""
    vals = eigvalsh_batch(ladder_hamiltonian_batch(model, ps))
    return vals[..., model.layers]


@dataclass(frozen=True)
class DispersionFit:
    """Log-log regression of the low-energy branch against momentum."""

    exponent: float
    r_squared: float
    p_min: float
    p_max: float
    n_samples: int
    direction: tuple


def fit_dispersion_exponent(
    model: LadderMixModel,
    p_min: float,
    p_max: float,
    n_samples: int = 16,
    direction=(1.0, 0.0),
) -> DispersionFit:
    """Fit E ~ p^nu on log-uniform samples along a fixed direction.

    The window must sit inside the perturbative regime
    p_max <= 1e-2 g / c_l, where the low-energy branch follows its
    asymptotic power law.
    """
    if n_samples < 8:
        raise ValidationError("need at least 8 samples for a fit")
    if not 0.0 < p_min < p_max:
        raise ValidationError("need 0 < p_min < p_max")
    if p_max > _WINDOW_CEILING * model.coupling / abs(model.c_l):
        raise ValidationError(
            f"p_max beyond the perturbative window {_WINDOW_CEILING:g} g / c_l"
        )
    d = np.asarray(direction, dtype=float)
    norm = np.hypot(d[0], d[1])
    if norm == 0.0:
        raise ValidationError("direction must be nonzero")
    d = d / norm
    mags = np.geomspace(p_min, p_max, n_samples)
    energies = smallest_positive_energies(model, mags[:, None] * d[None, :])
    if (energies < 1e-300).any():
        raise ContractError(
            "low-energy branch underflowed; shrink the window from below"
        )
    x = np.log(mags)
    y = np.log(energies)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = y - y.mean()
    r2 = 1.0 - float(resid @ resid) / float(total @ total)
    return DispersionFit(
        float(slope), r2, float(p_min), float(p_max), int(n_samples), (d[0], d[1])
    )

"""Hopping operators and Bloch Hamiltonians for multicomponent square lattices.

Conventions: hbar = 1, lattice spacing a = 1, momenta in radians per site,
energies in units of the x hopping amplitude unless stated otherwise.  The
momentum-space Hamiltonian carries the sign

    H(k) = -2 t_x cos(k_x) T_x - 2 t_y cos(k_y) T_y + onsite,

which puts the band touchings of the unperturbed model at (+-pi/2, +-pi/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .linalg import eigvalsh

_ONSITE_HERMITICITY_TOL = 1e-12


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RhoVector:
    """Real nearest-off-diagonal hopping amplitudes for n internal states.

    entries[j-1] couples states j and j+1 (1-based), so len(entries) = n - 1.
    Any finite real entries are allowed, including zeros and negatives.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.entries, float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValidationError("rho vector needs at least one entry (n >= 2)")
        if not np.isfinite(arr).all():
            raise ValidationError("rho vector entries must be finite reals")
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        """Number of internal states."""
        return self.entries.size + 1

    @property
    def spin(self) -> float:
        """Spin label s = (n - 1) / 2 of the matching su(2) representation."""
        return (self.n - 1) / 2.0


def su2_rho(n: int) -> RhoVector:
    """Hopping amplitudes rho_j = sqrt(j (n - j)) of the spin-(n-1)/2 ladder."""
    if int(n) != n or n < 2:
        raise ValidationError(f"invalid dimension n={n}: need an integer >= 2")
    j = np.arange(1, n)
    return RhoVector(np.sqrt(j * (n - j)))


def rho4_from_angles(rho_norm: float, theta: float, phi: float) -> RhoVector:
    """Angle-parametrised four-state rho vector of norm rho_norm.

    Components are rho * (sin t sin p, sin t cos p, cos t); the azimuth is
    measured so that phi = pi/2, theta = pi/4 gives (1, 0, 1)/sqrt(2), the
    point where the two cone layers become degenerate (see
    double_layer_eps).
    """
    if rho_norm < 0:
        raise ValidationError("rho_norm must be nonnegative")
    return RhoVector(
        rho_norm
        * np.array(
            [np.sin(theta) * np.sin(phi), np.sin(theta) * np.cos(phi), np.cos(theta)]
        )
    )


def hopping_pair(rho: RhoVector) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian hopping operators (T_x, T_y) for a rho vector.

    T_x has rho_j on both first off-diagonals; T_y has -i rho_j above and
    +i rho_j below.  For rho = (1) this is (sigma_x, sigma_y).
    """
    n = rho.n
    tx = np.zeros((n, n), dtype=np.complex128)
    ty = np.zeros((n, n), dtype=np.complex128)
    j = np.arange(n - 1)
    tx[j, j + 1] = rho.entries
    tx[j + 1, j] = rho.entries
    ty[j, j + 1] = -1j * rho.entries
    ty[j + 1, j] = 1j * rho.entries
    tx.setflags(write=False)
    ty.setflags(write=False)
    return tx, ty


@dataclass(frozen=True)
class BlochModel:
    """Lattice parameters defining H(k): rho vector, hoppings, on-site term.

    t_x != t_y is allowed (anisotropic cones).  onsite defaults to zero and
    must be Hermitian.
    """

    rho: RhoVector
    t_x: float = 1.0
    t_y: float = 1.0
    onsite: np.ndarray | None = None
    _ops: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.t_x) and np.isfinite(self.t_y)):
            raise ValidationError("hopping energies t_x, t_y must be finite")
        n = self.rho.n
        onsite = self.onsite
        if onsite is None:
            onsite = np.zeros((n, n), dtype=np.complex128)
        onsite = np.array(onsite, dtype=np.complex128)
        if onsite.shape != (n, n):
            raise ValidationError(f"onsite must be {n}x{n}, got {onsite.shape}")
        defect = np.abs(onsite - onsite.conj().T).max()
        if defect > _ONSITE_HERMITICITY_TOL * max(1.0, np.abs(onsite).max()):
            raise ValidationError(f"onsite is not Hermitian (defect {defect:.3e})")
        onsite.setflags(write=False)
        object.__setattr__(self, "onsite", onsite)
        object.__setattr__(self, "_ops", hopping_pair(self.rho))

    @property
    def n(self) -> int:
        return self.rho.n

    @property
    def hopping_operators(self) -> tuple[np.ndarray, np.ndarray]:
        return self._ops

    @property
    def onsite_is_zero(self) -> bool:
        return not self.onsite.any()


def bloch_vector(t_x: float, t_y: float, k) -> np.ndarray:
    """Momentum field (2 t_x cos k_x, 2 t_y cos k_y, 0)."""
    k = np.asarray(k, dtype=float)
    return np.array([2.0 * t_x * np.cos(k[0]), 2.0 * t_y * np.cos(k[1]), 0.0])


def bloch_hamiltonian(model: BlochModel, k) -> np.ndarray:
    """n x n Bloch Hamiltonian at momentum k in (-pi, pi]^2."""
    k = np.asarray(k, dtype=float)
    if not np.isfinite(k).all():
        raise ValidationError("momentum components must be finite")
    tx, ty = model.hopping_operators
    return (
        -2.0 * model.t_x * np.cos(k[0]) * tx
        - 2.0 * model.t_y * np.cos(k[1]) * ty
        + model.onsite
    )


def bloch_hamiltonian_batch(model: BlochModel, ks: np.ndarray) -> np.ndarray:
    """Bloch Hamiltonians for a (..., 2) array of momenta, shape (..., n, n)."""
    ks = np.asarray(ks, dtype=float)
    tx, ty = model.hopping_operators
    cx = -2.0 * model.t_x * np.cos(ks[..., 0])
    cy = -2.0 * model.t_y * np.cos(ks[..., 1])
    return (
        cx[..., None, None] * tx + cy[..., None, None] * ty + model.onsite
    )


def analytic_spectrum(model: BlochModel, k) -> np.ndarray:
    """Closed-form spectrum {eps_i |g_k|} of the onsite-free model, ascending.

    eps_i are the eigenvalues of T_x and g_k = (2 t_x cos k_x, 2 t_y cos k_y, 0).
    Serves as the independent reference for diagonalising H(k) directly.
    """
    if not model.onsite_is_zero:
        raise ValidationError("analytic spectrum requires a zero onsite term")
    tx, _ = model.hopping_operators
    eps = eigvalsh(tx)
    g = bloch_vector(model.t_x, model.t_y, k)
    return np.sort(eps * float(np.hypot(g[0], g[1])))


def double_layer_eps(rho_norm: float, theta: float, phi: float) -> tuple[float, float]:
    """The two nonnegative hopping eigenvalues of the angle-parametrised
    four-state ladder, rho * sqrt(1 -+ chi/2) / sqrt(2), smaller first.

    chi = 0 (at e.g. theta = pi/4, phi = pi/2) collapses the two cone layers
    into one doubly degenerate cone.
    """
    if rho_norm < 0:
        raise ValidationError("rho_norm must be nonnegative")
    # chi^2 = 3 + cos 2p + cos 4t - cos 2p cos 4t collapses to 4 (1 - s) with
    # s = sin^2 p sin^2 2t; the factored form below is the same expression
    # without the cancellation that would otherwise cost half the digits of
    # the small eigenvalue near degeneracies.
    w = np.sin(phi) * np.sin(2.0 * theta)
    s = min(w * w, 1.0)
    root = np.sqrt(1.0 - s)
    low = rho_norm * np.sqrt(s / (2.0 * (1.0 + root)))
    high = rho_norm * np.sqrt((1.0 + root) / 2.0)
    return float(low), float(high)

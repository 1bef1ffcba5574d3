"""Three-species mixing: PMNS matrix, splitting vectors, and the 6x6
mass- and flavour-basis Hamiltonians.

Basis ordering is flavour (x) spinor throughout: index 2*f + s with
f in {0: e, 1: mu, 2: tau} and s the spinor component.  These blocks use
the +g.sigma convention, whose band touchings sit at (+-pi/2, +-pi/2);
it maps onto the lattice convention of `lattice.bloch_hamiltonian` under
k -> k + (pi, pi).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractError, ValidationError
from .lattice import bloch_vector
from .pauli import pauli_dot

FLAVOURS = ("e", "mu", "tau")

_UNITARITY_TOL = 1e-10


@dataclass(frozen=True)
class PmnsParams:
    """Mixing angles (radians) and CP phase of the 3x3 unitary."""

    theta12: float
    theta13: float
    theta23: float
    delta: float = 0.0

    def __post_init__(self):
        for name in ("theta12", "theta13", "theta23", "delta"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")


def pmns_matrix(params: PmnsParams) -> np.ndarray:
    """Standard-parametrisation unitary U = R23 . U13(delta) . R12.

    Entry (0, 2) is sin(theta13) e^{-i delta}.
    """
    c12, s12 = np.cos(params.theta12), np.sin(params.theta12)
    c13, s13 = np.cos(params.theta13), np.sin(params.theta13)
    c23, s23 = np.cos(params.theta23), np.sin(params.theta23)
    ephase = np.exp(-1j * params.delta)
    r23 = np.array([[1, 0, 0], [0, c23, s23], [0, -s23, c23]], dtype=np.complex128)
    u13 = np.array(
        [[c13, 0, s13 * ephase], [0, 1, 0], [-s13 * np.conj(ephase), 0, c13]],
        dtype=np.complex128,
    )
    r12 = np.array([[c12, s12, 0], [-s12, c12, 0], [0, 0, 1]], dtype=np.complex128)
    return r23 @ u13 @ r12


def m_matrix(u: np.ndarray) -> np.ndarray:
    """Traceless Hermitian M = U+ diag(0, -1, 1) U.

    Componentwise M_ij = U_{3j} U*_{3i} - U_{2j} U*_{2i} (1-based rows);
    its eigenvalues are {0, -1, 1} for any unitary U and it is real
    whenever the CP phase vanishes.
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (3, 3):
        raise ContractError("M matrix needs a 3x3 unitary")
    defect = np.abs(u.conj().T @ u - np.eye(3)).max()
    if defect > _UNITARITY_TOL:
        raise ContractError(f"matrix is not unitary (defect {defect:.3e})")
    return u.conj().T @ np.diag([0.0, -1.0, 1.0]).astype(np.complex128) @ u


@dataclass(frozen=True)
class MixingSpec:
    """PMNS angles plus the three splitting vectors h^i (energy units)."""

    pmns: PmnsParams
    h_vectors: np.ndarray
    t_x: float = 1.0
    t_y: float = 1.0

    def __post_init__(self):
        h = np.array(self.h_vectors, dtype=float)
        if h.shape != (3, 3):
            raise ValidationError("h_vectors must be three 3-vectors")
        if not np.isfinite(h).all():
            raise ValidationError("h_vectors must be finite")
        h.setflags(write=False)
        object.__setattr__(self, "h_vectors", h)
        if not (np.isfinite(self.t_x) and np.isfinite(self.t_y)):
            raise ValidationError("t_x and t_y must be finite")

    @classmethod
    def symmetric(cls, pmns: PmnsParams, h, t_x: float = 1.0, t_y: float = 1.0):
        """The h^1 = 0, h^2 = h = -h^3 splitting pattern."""
        h = np.asarray(h, dtype=float)
        return cls(pmns, np.stack([np.zeros(3), h, -h]), t_x, t_y)

    @property
    def is_symmetric_pattern(self) -> bool:
        h1, h2, h3 = self.h_vectors
        return not h1.any() and np.array_equal(h2, -h3)

    @property
    def splitting(self) -> np.ndarray:
        """The shared vector h of the symmetric pattern."""
        if not self.is_symmetric_pattern:
            raise ValidationError("spec does not use the symmetric h pattern")
        return self.h_vectors[1]

    def c_light(self) -> float:
        """Effective cone speed 2 t near the band touching (isotropic only)."""
        if self.t_x != self.t_y:
            raise ValidationError(
                "effective speed of light is direction dependent for t_x != t_y"
            )
        return 2.0 * self.t_x

    def with_delta(self, delta: float) -> "MixingSpec":
        return replace(self, pmns=replace(self.pmns, delta=delta))


def splitting_field(spec: MixingSpec, k) -> np.ndarray:
    """(2 t_x cos k_x, 2 t_y cos k_y, 0) in the block convention."""
    return bloch_vector(spec.t_x, spec.t_y, k)


def mass_basis_hamiltonian(spec: MixingSpec, k) -> np.ndarray:
    """Block-diagonal 6x6 Hamiltonian with blocks (g_k - h^i) . sigma."""
    g = splitting_field(spec, k)
    out = np.zeros((6, 6), dtype=np.complex128)
    for i in range(3):
        out[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = pauli_dot(g - spec.h_vectors[i])
    return out


def mass_basis_hamiltonian_batch(spec: MixingSpec, ks: np.ndarray) -> np.ndarray:
    ks = np.asarray(ks, dtype=float)
    gx = 2.0 * spec.t_x * np.cos(ks[..., 0])
    gy = 2.0 * spec.t_y * np.cos(ks[..., 1])
    out = np.zeros(ks.shape[:-1] + (6, 6), dtype=np.complex128)
    for i, h in enumerate(spec.h_vectors):
        sl = slice(2 * i, 2 * i + 2)
        block = (gx - h[0])[..., None, None] * np.array([[0, 1], [1, 0]]) + (
            gy - h[1]
        )[..., None, None] * np.array([[0, -1j], [1j, 0]]) - h[2] * np.array(
            [[1, 0], [0, -1]]
        )
        out[..., sl, sl] = block
    return out


def flavour_rotation(spec: MixingSpec) -> np.ndarray:
    """The 6x6 change of basis U (x) I_2 from flavour to mass blocks."""
    return np.kron(pmns_matrix(spec.pmns), np.eye(2, dtype=np.complex128))


def flavour_hamiltonian(spec: MixingSpec, k) -> np.ndarray:
    """Flavour-basis Hamiltonian (U+ (x) I) H_mass (U (x) I) at momentum k.

    For the symmetric splitting pattern this equals
    I_3 (x) g_k . sigma + M (x) h . sigma with M = m_matrix(pmns_matrix(...)).
    """
    w = flavour_rotation(spec)
    return w.conj().T @ mass_basis_hamiltonian(spec, k) @ w


def flavour_hamiltonian_batch(spec: MixingSpec, ks: np.ndarray) -> np.ndarray:
    w = flavour_rotation(spec)
    return np.einsum(
        "ab,...bc,cd->...ad", w.conj().T, mass_basis_hamiltonian_batch(spec, ks), w
    )

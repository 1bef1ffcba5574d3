"""Flavour-state time evolution, oscillation probabilities, T-asymmetry,
direction and CP-phase sweeps, and the closed-form continuum reference.

Momenta are measured from the band touching K = (pi/2, pi/2) as p = k - K;
with that sign the in-plane splitting enters the energies as
E_i ~ c_l |p| + unit(p) . h^i, which is what the closed-form probability
uses.  Times are in units of hbar over the hopping energy; multiplying by
the cone speed c_l converts them to propagation distance in lattice sites.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ValidationError
from .linalg import eigh_batch
from .mixing import FLAVOURS, MixingSpec, flavour_hamiltonian_batch, pmns_matrix, splitting_field
from .parallel import map_chunks

#: band touching used as the oscillation reference point
K_POINT = np.array([np.pi / 2.0, np.pi / 2.0])

_UNITARITY_TOL = 1e-10
_PROB_SLACK = 1e-12


@dataclass(frozen=True)
class WavePacketState:
    """A single plane-wave flavour state: momentum plus 6 amplitudes."""

    k: np.ndarray
    amplitudes: np.ndarray
    flavour: int | None = None
    branch: int = -1

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        norm = float(np.linalg.norm(amp))
        if abs(norm - 1.0) > _PROB_SLACK:
            raise ValidationError(f"state norm {norm} is not 1")
        object.__setattr__(self, "k", np.asarray(self.k, dtype=float))
        object.__setattr__(self, "amplitudes", amp)


def helicity_spinor(g, branch: int = -1) -> np.ndarray:
    """Unit eigenvector of g . sigma for in-plane g, eigenvalue branch*|g|.

    The first component is fixed real positive, which makes the
    preparation deterministic.
    """
    g = np.asarray(g, dtype=float)
    gnorm = np.hypot(g[0], g[1])
    if gnorm == 0.0:
        raise ValidationError("helicity is undefined where the momentum field vanishes")
    phase = (g[0] + 1j * g[1]) / gnorm
    return np.array([1.0, branch * phase]) / np.sqrt(2.0)


def prepare_flavour_state(
    spec: MixingSpec, k, flavour: int, branch: int = -1
) -> WavePacketState:
    """Flavour eigenstate with a definite helicity spinor at momentum k.

    branch=-1 picks the filled (negative-helicity) band, branch=+1 the
    conduction one.
    """
    if flavour not in (0, 1, 2):
        raise ValidationError(f"flavour index must be 0, 1 or 2, got {flavour}")
    if branch not in (-1, 1):
        raise ValidationError("branch must be -1 or +1")
    g = splitting_field(spec, k)
    spinor = helicity_spinor(g, branch)
    amplitudes = np.zeros(6, dtype=np.complex128)
    amplitudes[2 * flavour : 2 * flavour + 2] = spinor
    return WavePacketState(np.asarray(k, float), amplitudes, flavour, branch)


@dataclass
class OscillationTrace:
    """Flavour-resolved probabilities P(alpha -> beta)(t) of one evolution."""

    times: np.ndarray
    probabilities: np.ndarray  # shape (3, len(times)), row = target flavour
    alpha: int | None
    metadata: dict

    def probability(self, beta: int) -> np.ndarray:
        return self.probabilities[beta]


def _evolved_amplitudes(spec: MixingSpec, state: WavePacketState, times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    ham = flavour_hamiltonian_batch(spec, state.k[None, :])[0]
    vals, vecs = eigh_batch(ham[None])
    energy, basis = vals[0], vecs[0]
    weights = basis.conj().T @ state.amplitudes
    phases = np.exp(-1j * energy[:, None] * times[None, :])
    return basis @ (phases * weights[:, None])


def evolve(spec: MixingSpec, state: WavePacketState, times) -> OscillationTrace:
    """Exact eigenbasis evolution of a prepared state.

    Probabilities are summed over the spinor within each flavour; their sum
    over flavours is checked against 1 to the unitarity tolerance and the
    values are then clamped to [0, 1].
    """
    times = np.asarray(times, dtype=float)
    psi = _evolved_amplitudes(spec, state, times)
    probs = np.abs(psi.reshape(3, 2, -1)) ** 2
    probs = probs.sum(axis=1)
    totals = probs.sum(axis=0)
    defect = float(np.abs(totals - 1.0).max())
    if defect > _UNITARITY_TOL:
        raise ContractError(f"evolution lost unitarity (defect {defect:.3e})")
    if probs.min() < -_PROB_SLACK or probs.max() > 1.0 + _PROB_SLACK:
        raise ContractError("probability outside [0, 1] beyond tolerance")
    probs = np.clip(probs, 0.0, 1.0)
    return OscillationTrace(
        times,
        probs,
        state.flavour,
        {"k": state.k.copy(), "branch": state.branch},
    )


def continuum_probability(u: np.ndarray, energies, alpha: int, beta: int, times):
    """Closed-form plane-wave transition probability.

    |sum_j U_{alpha j} U*_{beta j} exp(-i E_j t)|^2 -- the three-level
    reference the lattice evolution must approach in the weak-splitting
    limit.
    """
    u = np.asarray(u, dtype=np.complex128)
    energies = np.asarray(energies, dtype=float)
    times = np.asarray(times, dtype=float)
    amp = (
        u[alpha, :, None] * u[beta, :, None].conj() * np.exp(-1j * energies[:, None] * times)
    ).sum(axis=0)
    return np.abs(amp) ** 2


def anisotropic_energies(h_vectors, p_hat, p_mag: float, c_l: float) -> np.ndarray:
    """First-order continuum energies of the three species.

    In-plane splitting vectors give the direction-dependent law
    E_i = c_l |p| + unit(p) . h^i; pure-z vectors give the mass-like law
    E_i = c_l |p| + (h_z^i)^2 / (2 c_l |p|).  Mixed vectors have no single
    expansion and are rejected (use the exact band energies instead).
    """
    h = np.asarray(h_vectors, dtype=float)
    if h.shape != (3, 3):
        raise ValidationError("h_vectors must be three 3-vectors")
    p_hat = np.asarray(p_hat, dtype=float)
    norm = np.hypot(p_hat[0], p_hat[1])
    if norm == 0.0 or p_mag <= 0.0:
        raise ValidationError("need a nonzero direction and positive momentum")
    p_hat = p_hat / norm
    scale = float(np.abs(h).max())
    if scale > 0.1 * c_l * p_mag:
        warnings.warn(
            "splitting is not small against c_l |p|; first-order energies are crude",
            stacklevel=2,
        )
    in_plane = np.abs(h[:, :2]).max() > 0.0
    out_of_plane = np.abs(h[:, 2]).max() > 0.0
    base = c_l * p_mag
    if in_plane and out_of_plane:
        raise ValidationError(
            "h mixes in-plane and z components; no single expansion applies"
        )
    if out_of_plane:
        return base + h[:, 2] ** 2 / (2.0 * c_l * p_mag)
    return base + h[:, 0] * p_hat[0] + h[:, 1] * p_hat[1]


@dataclass
class TAsymmetry:
    """Normalised difference of P(e->mu) and P(mu->e) against time.

    Where both probabilities vanish (denominator below 1e-14) the
    asymmetry is reported as 0 with the matching flag set.
    """

    times: np.ndarray
    values: np.ndarray
    undefined: np.ndarray


def t_asymmetry(
    spec: MixingSpec, k, times, branch: int = -1, alpha: int = 0, beta: int = 1
) -> TAsymmetry:
    """Time-reversal asymmetry from two evolutions with swapped flavours."""
    times = np.asarray(times, dtype=float)
    forward = evolve(spec, prepare_flavour_state(spec, k, alpha, branch), times)
    backward = evolve(spec, prepare_flavour_state(spec, k, beta, branch), times)
    p_ab = forward.probability(beta)
    p_ba = backward.probability(alpha)
    denom = p_ab + p_ba
    undefined = denom <= 1e-14
    values = np.where(undefined, 0.0, (p_ab - p_ba) / np.where(undefined, 1.0, denom))
    return TAsymmetry(times, values, undefined)


def momentum_to_k(p_hat, p_mag: float, node=K_POINT) -> np.ndarray:
    """Lattice momentum for a continuum momentum p measured from the node."""
    p_hat = np.asarray(p_hat, dtype=float)
    norm = np.hypot(p_hat[0], p_hat[1])
    if norm == 0.0:
        raise ValidationError("direction must be nonzero")
    return np.asarray(node, float) + p_mag * p_hat / norm


def dominant_period(spec: MixingSpec, p_mag: float) -> float:
    """Period of the fastest continuum oscillation at p parallel to h.

    Uses the largest pairwise splitting of the first-order energies; for
    the symmetric pattern this is 2 |h|, giving a period of pi / |h|.
    """
    h = spec.h_vectors
    hnorm = np.hypot(h[:, 0], h[:, 1])
    direction = h[np.argmax(hnorm), :2]
    if np.hypot(direction[0], direction[1]) == 0.0:
        raise ValidationError("dominant period is undefined for zero in-plane splitting")
    energies = anisotropic_energies(h, direction, p_mag, spec.c_light())
    gaps = np.abs(energies[:, None] - energies[None, :])
    return 2.0 * np.pi / float(gaps.max())


@dataclass
class DirectionSweep:
    """P(e->mu) at a fixed probe time against the momentum direction."""

    angles: np.ndarray
    probabilities: np.ndarray
    p_mag: float
    t_probe: float
    metadata: dict


def direction_sweep(
    spec: MixingSpec,
    p_mag: float,
    n_dirs: int,
    t_probe: float | None = None,
    branch: int = -1,
    alpha: int = 0,
    beta: int = 1,
    threads: int = 1,
) -> DirectionSweep:
    """Sweep the momentum direction on a uniform angular grid.

    The probe time defaults to half the dominant oscillation period; it is
    recorded in the result.  Evaluations are batched and chunk-parallel,
    with output ordering fixed by the angular index.
    """
    if n_dirs < 16:
        raise ValidationError(f"need n_dirs >= 16, got {n_dirs}")
    if t_probe is None:
        t_probe = 0.5 * dominant_period(spec, p_mag)
    angles = 2.0 * np.pi * np.arange(n_dirs) / n_dirs - np.pi
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    ks = K_POINT + p_mag * dirs
    hams = flavour_hamiltonian_batch(spec, ks)
    probs = np.empty(n_dirs, dtype=float)

    def work(sl: slice) -> None:
        vals, vecs = eigh_batch(hams[sl])
        gx = 2.0 * spec.t_x * np.cos(ks[sl, 0])
        gy = 2.0 * spec.t_y * np.cos(ks[sl, 1])
        gnorm = np.hypot(gx, gy)
        if (gnorm == 0.0).any():
            raise ValidationError("sweep touches the node; change p_mag")
        spinor = np.stack(
            [np.ones_like(gx), branch * (gx + 1j * gy) / gnorm], axis=-1
        ) / np.sqrt(2.0)
        psi0 = np.zeros((sl.stop - sl.start, 6), dtype=np.complex128)
        psi0[:, 2 * alpha : 2 * alpha + 2] = spinor
        weights = np.einsum("bji,bj->bi", vecs.conj(), psi0)
        phases = np.exp(-1j * vals * t_probe)
        psi = np.einsum("bij,bj->bi", vecs, phases * weights)
        block = psi[:, 2 * beta : 2 * beta + 2]
        probs[sl] = (np.abs(block) ** 2).sum(axis=1)

    map_chunks(work, n_dirs, threads)
    return DirectionSweep(
        angles,
        probs,
        p_mag,
        float(t_probe),
        {"alpha": FLAVOURS[alpha], "beta": FLAVOURS[beta], "branch": branch},
    )


def delta_sweep(
    spec: MixingSpec, deltas, k, times, branch: int = -1
) -> np.ndarray:
    """T-asymmetry traces for a list of CP phases; rows follow `deltas`."""
    times = np.asarray(times, dtype=float)
    out = np.empty((len(deltas), times.size), dtype=float)
    for row, delta in enumerate(deltas):
        out[row] = t_asymmetry(spec.with_delta(float(delta)), k, times, branch).values
    return out


def continuum_reference(
    spec: MixingSpec, p_hat, p_mag: float, alpha: int, beta: int, times
) -> np.ndarray:
    """Closed-form P(alpha -> beta) using the first-order energies.

    The block Hamiltonian is conjugated as (U+ (x) I) H_m (U (x) I), which
    contracts flavour amplitudes over the first index of U; the plane-wave
    formula therefore receives U transposed.
    """
    u = pmns_matrix(spec.pmns).T
    energies = anisotropic_energies(spec.h_vectors, p_hat, p_mag, spec.c_light())
    return continuum_probability(u, energies, alpha, beta, times)

"""Band sampling, Dirac-point location, Fermi velocities, and topological
charges of Bloch models over the square-lattice Brillouin zone (-pi, pi]^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ValidationError
from .lattice import BlochModel, bloch_hamiltonian, bloch_hamiltonian_batch
from .linalg import eigh_batch, eigvalsh, eigvalsh_batch
from .parallel import map_chunks

#: band values below this (times the local spectral scale) count as touching
TOUCH_TOL = 1e-6

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def bz_axis(nk: int) -> np.ndarray:
    """nk momenta covering (-pi, pi] exactly once, endpoint pi included."""
    return -np.pi + 2.0 * np.pi * (np.arange(nk) + 1.0) / nk


@dataclass
class BandGrid:
    """Energies of every band on an nk x nk Brillouin-zone grid.

    energies[i, j, :] holds the ascending bands at (kx[i], ky[j]).
    """

    kx: np.ndarray
    ky: np.ndarray
    energies: np.ndarray

    @property
    def nk(self) -> int:
        return self.kx.size

    @property
    def n_bands(self) -> int:
        return self.energies.shape[-1]

    def rows(self):
        """Yield (kx, ky, bands) in fixed row-major order."""
        for i in range(self.nk):
            for j in range(self.nk):
                yield self.kx[i], self.ky[j], self.energies[i, j]


def sample_bands(model: BlochModel, nk: int, threads: int = 1) -> BandGrid:
    """Diagonalise H(k) on a dense BZ grid (deterministic for any threads)."""
    if nk < 4:
        raise ValidationError(f"band grid needs nk >= 4, got {nk}")
    kx = bz_axis(nk)
    ky = bz_axis(nk)
    grid = np.stack(np.meshgrid(kx, ky, indexing="ij"), axis=-1).reshape(-1, 2)
    hams = bloch_hamiltonian_batch(model, grid)
    energies = np.empty((nk * nk, model.n), dtype=float)

    def work(sl: slice) -> None:
        energies[sl] = eigvalsh_batch(hams[sl])

    map_chunks(work, nk * nk, threads)
    return BandGrid(kx, ky, energies.reshape(nk, nk, model.n))


# ---------------------------------------------------------------------------
# Dirac point location


@dataclass(frozen=True)
class DiracPointSearch:
    """Analytic band-touching positions of one spin-1/2 block.

    status is "ok" (four generic points), "marginal" (|h_x| = 2 t_x or
    |h_y| = 2 t_y: merged opposite-chirality pairs with net charge zero), or
    "annihilated" (splitting too strong, points gapped out; no positions).
    """

    status: str
    points: tuple


def dirac_points_analytic(t_x: float, t_y: float, h) -> DiracPointSearch:
    """Solve 2 t_x cos k_x = h_x, 2 t_y cos k_y = h_y in (-pi, pi]^2."""
    h = np.asarray(h, dtype=float)
    if h.shape != (3,):
        raise ValidationError("h must be a 3-vector")
    if h[2] != 0.0:
        raise ValidationError("gapless search requires h_z = 0")
    rx = h[0] / (2.0 * t_x)
    ry = h[1] / (2.0 * t_y)
    if abs(rx) > 1.0 or abs(ry) > 1.0:
        return DiracPointSearch("annihilated", ())
    status = "marginal" if (abs(rx) == 1.0 or abs(ry) == 1.0) else "ok"
    kx0 = math.acos(rx)
    ky0 = math.acos(ry)
    points = []
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            k = (sx * kx0, sy * ky0)
            # fold -pi to the equivalent +pi edge and drop duplicates
            k = tuple(np.pi if abs(v + np.pi) < 1e-15 else v for v in k)
            if not any(
                abs(k[0] - p[0]) < 1e-15 and abs(k[1] - p[1]) < 1e-15 for p in points
            ):
                points.append(k)
    pts = tuple(np.array(p) for p in points)
    return DiracPointSearch(status, pts)


@dataclass(frozen=True)
class DiracPointReport:
    """Numerical characterisation of one band touching (or near-touching)."""

    position: np.ndarray
    block_index: int | None
    velocities: np.ndarray
    gap: float
    charge: int | None


def _golden_min(f, lo: float, hi: float, tol: float) -> float:
    """Golden-section minimiser for a smooth unimodal section."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def refine_minimum(f, k0, span: float, tol: float = 1e-8, max_passes: int = 40):
    """Coordinate-descent golden-section refinement of a 2-d minimum.

    Spectra here are smooth trigonometric functions of k, so alternating
    1-d golden sections around the grid minimum converge quickly.
    """
    k = np.array(k0, dtype=float)
    for _ in range(max_passes):
        moved = 0.0
        for axis in (0, 1):
            def section(x, axis=axis):
                kk = k.copy()
                kk[axis] = x
                return f(kk)

            new = _golden_min(section, k[axis] - span, k[axis] + span, tol * 0.1)
            moved = max(moved, abs(new - k[axis]))
            k[axis] = new
        span = max(4.0 * moved, 8.0 * tol)
        if moved < tol:
            break
    return k


def gap_function(model: BlochModel):
    """Callable k -> direct gap between bands n/2 - 1 and n/2 (half filling)."""
    if model.n % 2:
        raise ValidationError("half-filling gap needs an even number of bands")
    half = model.n // 2

    def gap(k) -> float:
        vals = eigvalsh(bloch_hamiltonian(model, k))
        return float(vals[half] - vals[half - 1])

    return gap


def _grid_gaps(model: BlochModel, nk: int, threads: int = 1):
    grid_obj = sample_bands(model, nk, threads)
    half = model.n // 2
    gaps = grid_obj.energies[:, :, half] - grid_obj.energies[:, :, half - 1]
    return grid_obj, gaps


def band_gap(model: BlochModel, nk: int = 64, threads: int = 1) -> float:
    """Minimum direct gap over the BZ, grid scan plus local refinement."""
    if nk < 64:
        raise ValidationError(f"band_gap needs nk >= 64, got {nk}")
    grid_obj, gaps = _grid_gaps(model, nk, threads)
    i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
    f = gap_function(model)
    k = refine_minimum(f, (grid_obj.kx[i], grid_obj.ky[j]), span=2.0 * np.pi / nk)
    return f(k)


def find_band_touchings(
    model: BlochModel, nk: int = 64, threads: int = 1
) -> list[np.ndarray]:
    """Locate all gap zeros by scanning local minima and refining each.

    Returns refined positions whose gap vanishes to TOUCH_TOL relative to
    the spectral scale; duplicates within 1e-5 are merged.
    """
    grid_obj, gaps = _grid_gaps(model, nk, threads)
    scale = max(float(np.abs(grid_obj.energies).max()), 1e-30)
    local_min = np.ones_like(gaps, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            local_min &= gaps <= np.roll(gaps, (di, dj), axis=(0, 1))
    # keep basins that can plausibly reach zero from one grid cell away
    slope_budget = 4.0 * (abs(model.t_x) + abs(model.t_y)) * (2.0 * np.pi / nk)
    candidates = np.argwhere(local_min & (gaps <= gaps.min() + slope_budget))
    f = gap_function(model)
    found: list[np.ndarray] = []
    for i, j in candidates:
        k = refine_minimum(f, (grid_obj.kx[i], grid_obj.ky[j]), span=2.0 * np.pi / nk)
        k = _fold_bz(k)
        if f(k) > TOUCH_TOL * scale:
            continue
        if not any(_bz_distance(k, other) < 1e-5 for other in found):
            found.append(k)
    found.sort(key=lambda p: (round(p[0], 9), round(p[1], 9)))
    return found


def _fold_bz(k: np.ndarray) -> np.ndarray:
    folded = np.mod(np.asarray(k, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(folded <= -np.pi + 1e-12, np.pi, folded)


def _bz_distance(a, b) -> float:
    d = np.abs(_fold_bz(np.asarray(a) - np.asarray(b)))
    d = np.minimum(d, 2.0 * np.pi - d)
    return float(np.hypot(d[0], d[1]))


# ---------------------------------------------------------------------------
# Fermi velocities


def fermi_velocities(
    model: BlochModel,
    k_star,
    direction=(1.0, 0.0),
    delta: float = 1e-4,
) -> np.ndarray:
    """Cone slopes at a band touching, ascending.

    Uses the symmetric two-point slope (E_i(k+): the bands that touch at
    k_star are even functions of the offset, so (E_i(k + d) + E_i(k - d)) /
    (2 delta) recovers each positive cone slope to O(delta^2).  One value is
    returned per touching positive branch; degenerate cones repeat.
    """
    if not 1e-6 <= delta <= 1e-2:
        raise ValidationError("delta must lie in [1e-6, 1e-2]")
    d = np.asarray(direction, dtype=float)
    norm = np.hypot(d[0], d[1])
    if norm == 0.0:
        raise ValidationError("direction must be a nonzero 2-vector")
    d = d / norm
    k_star = np.asarray(k_star, dtype=float)
    at_star = eigvalsh(bloch_hamiltonian(model, k_star))
    scale = max(float(np.abs(at_star).max()), abs(model.t_x) + abs(model.t_y))
    touching = np.flatnonzero(np.abs(at_star) <= TOUCH_TOL * scale)
    if touching.size == 0:
        raise ValidationError("k_star is not a band-touching point")
    vals = eigvalsh_batch(
        bloch_hamiltonian_batch(model, np.stack([k_star + delta * d, k_star - delta * d]))
    )
    j0, m = int(touching[0]), int(touching.size)
    upper = slice(j0 + m - m // 2, j0 + m)  # strictly positive branches
    v = (vals[0, upper] + vals[1, upper]) / (2.0 * delta)
    return np.sort(v)


# ---------------------------------------------------------------------------
# Topological charge and Berry phase


def _loop_points(k_star, radius: float, n_loop: int) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(n_loop + 1) / n_loop
    ks = np.asarray(k_star, dtype=float) + radius * np.stack(
        [np.cos(theta), np.sin(theta)], axis=-1
    )
    ks[-1] = ks[0]  # close the loop exactly
    return ks


def chiral_winding(
    model: BlochModel,
    k_star,
    loop_radius: float = 0.1,
    n_loop: int = 128,
) -> int:
    """Integer winding of det q(k) around a counterclockwise loop.

    The zero-diagonal tridiagonal structure grades the basis into even and
    odd sites, putting H in off-diagonal block form [[0, q], [q+, 0]]; the
    phase of det q then winds an integer number of times around an enclosed
    band touching.  Requires an even number of states and zero onsite term.
    """
    n = model.n
    if n % 2:
        raise ValidationError("chiral winding is undefined for an odd number of states")
    parity = np.arange(n) % 2
    same_parity = parity[:, None] == parity[None, :]
    if np.abs(model.onsite[same_parity]).max(initial=0.0) > 1e-14:
        raise ValidationError(
            "onsite term breaks the even/odd grading; chiral winding is undefined"
        )
    if n_loop < 64:
        raise ValidationError("need n_loop >= 64")
    ks = _loop_points(k_star, loop_radius, n_loop)
    hams = bloch_hamiltonian_batch(model, ks)
    vals = eigvalsh_batch(hams)
    scale = max(float(np.abs(vals).max()), 1e-30)
    if np.abs(vals).min() < 1e-8 * scale:
        raise ValidationError(
            "spectrum closes on the loop; move the loop or shrink its radius"
        )
    even = np.arange(0, n, 2)
    odd = np.arange(1, n, 2)
    dets = np.linalg.det(hams[:, even[:, None], odd[None, :]])
    steps = np.angle(dets[1:] / dets[:-1])
    winding = steps.sum() / (2.0 * np.pi)
    nearest = round(winding)
    if abs(winding - nearest) >= 1e-3:
        raise ContractError(f"winding {winding:.6f} is not integral")
    return int(nearest)


def berry_phase_loop(
    model: BlochModel,
    band_index: int,
    k_star,
    loop_radius: float = 0.1,
    n_loop: int = 128,
) -> float:
    """Discrete Wilson-loop Berry phase of one band, in (-pi, pi].

    The phase is the argument of the product of successive eigenvector
    overlaps around a closed counterclockwise loop; it is gauge invariant
    because the loop is closed on the same first point.  The band must stay
    nondegenerate everywhere on the loop.
    """
    ks = _loop_points(k_star, loop_radius, n_loop)
    vals, vecs = eigh_batch(bloch_hamiltonian_batch(model, ks))
    scale = max(float(np.abs(vals).max()), 1e-30)
    gaps = []
    if band_index > 0:
        gaps.append(vals[:, band_index] - vals[:, band_index - 1])
    if band_index < model.n - 1:
        gaps.append(vals[:, band_index + 1] - vals[:, band_index])
    if min(float(g.min()) for g in gaps) < 1e-9 * scale:
        raise ValidationError(f"band {band_index} is degenerate on the loop")
    u = vecs[:, :, band_index]
    overlaps = (u[:-1].conj() * u[1:]).sum(axis=1)
    return float(np.angle(np.prod(overlaps)))

"""Gaussian states of squeezed light and their linear-optics transformations.

Conventions, used consistently everywhere:

* quadrature ordering ``(x_1 .. x_m, p_1 .. p_m)``;
* vacuum covariance ``I / 2`` (vacuum variance 1/2, no hbar factors);
* zero displacement throughout (only squeezed/thermal vacuum appears);
* the interferometer matrix ``U`` acts on mode operators as ``a -> U a``,
  so a photon entering input mode ``j`` reaches output ``i`` with
  probability ``|U_ij|^2``.

States are immutable values; every operation returns a new state and
revalidates the symmetry and uncertainty invariants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnphysicalStateError

SYMMETRY_TOL = 1e-12
UNCERTAINTY_TOL = 1e-10
UNITARITY_TOL = 1e-10
UNITARY_FILE_TOL = 1e-8
MAX_SQUEEZING = 5.0


def symplectic_form(num_modes: int) -> np.ndarray:
    """Standard symplectic form Omega = [[0, I], [-I, 0]] in xxpp ordering."""
    eye = np.eye(num_modes)
    zero = np.zeros((num_modes, num_modes))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True)
class GaussianState:
    """Zero-mean Gaussian state described by its quadrature covariance matrix."""

    num_modes: int
    covariance: np.ndarray

    def __post_init__(self):
        if self.num_modes < 1:
            raise ValueError("a Gaussian state needs at least one mode")
        cov = np.asarray(self.covariance, dtype=np.float64)
        d = 2 * self.num_modes
        if cov.shape != (d, d):
            raise ValueError(f"covariance must be {d}x{d}, got {cov.shape}")
        scale = max(1.0, float(np.max(np.abs(cov))))
        asym = float(np.max(np.abs(cov - cov.T)))
        if asym > SYMMETRY_TOL * scale:
            raise UnphysicalStateError(f"covariance not symmetric: max dev {asym:.3e}")
        cov = (cov + cov.T) / 2.0
        omega = symplectic_form(self.num_modes)
        eigs = np.linalg.eigvalsh(cov + 0.5j * omega)
        if eigs.min() < -UNCERTAINTY_TOL:
            raise UnphysicalStateError(
                f"uncertainty bound violated: min eig(cov + i Omega/2) = {eigs.min():.3e}"
            )
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)

    @property
    def mean_photon_numbers(self) -> np.ndarray:
        """Per-mode mean photon number ``(sigma_xx + sigma_pp - 1) / 2``."""
        m = self.num_modes
        diag = np.diagonal(self.covariance)
        return (diag[:m] + diag[m:] - 1.0) / 2.0

    @property
    def total_mean_photons(self) -> float:
        return float(self.mean_photon_numbers.sum())

    def husimi_covariance(self) -> np.ndarray:
        """Covariance of the Husimi function, ``sigma + I/2``."""
        return self.covariance + 0.5 * np.eye(2 * self.num_modes)

    def marginal(self, modes: list[int]) -> "GaussianState":
        """Reduced state on the given modes (0-based, order preserved)."""
        m = self.num_modes
        for mode in modes:
            if not 0 <= mode < m:
                raise ValueError(f"mode index {mode} out of range for {m} modes")
        idx = list(modes) + [mode + m for mode in modes]
        return GaussianState(len(modes), self.covariance[np.ix_(idx, idx)])


@dataclass(frozen=True)
class Interferometer:
    """An m-mode linear interferometer, stored as its unitary matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.matrix, dtype=np.complex128)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"interferometer matrix must be square, got {u.shape}")
        dev = unitarity_deviation(u)
        if dev > UNITARITY_TOL:
            raise ValueError(f"matrix is not unitary: max |U^H U - I| = {dev:.3e}")
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @property
    def num_modes(self) -> int:
        return self.matrix.shape[0]


def unitarity_deviation(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


@dataclass(frozen=True)
class SqueezerSpec:
    """Two-mode squeezer acting on a pair of vacuum modes (0-based indices)."""

    mode_a: int
    mode_b: int
    r: float
    phase: float = 0.0

    def __post_init__(self):
        if self.mode_a == self.mode_b:
            raise ValueError("two-mode squeezer needs two distinct modes")
        if self.mode_a < 0 or self.mode_b < 0:
            raise ValueError("mode indices must be non-negative")
        _check_squeezing(self.r)

    @property
    def modes(self) -> tuple[int, int]:
        return (self.mode_a, self.mode_b)


@dataclass(frozen=True)
class SingleModeSqueezerSpec:
    """Single-mode squeezer (x quadrature anti-squeezed for ``r > 0``)."""

    mode: int
    r: float

    def __post_init__(self):
        if self.mode < 0:
            raise ValueError("mode index must be non-negative")
        _check_squeezing(self.r)

    @property
    def modes(self) -> tuple[int]:
        return (self.mode,)


def _check_squeezing(r: float) -> None:
    if r < 0:
        raise ValueError(f"squeezing parameter must be >= 0, got {r}")
    if r > MAX_SQUEEZING:
        # beyond this the covariance conditioning makes determinant-based
        # probabilities unreliable
        raise ValueError(f"squeezing parameter {r} exceeds supported maximum {MAX_SQUEEZING}")


@dataclass(frozen=True)
class EfficiencySpec:
    """Per-mode detection/transmission efficiency in [0, 1]."""

    per_mode_eta: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.per_mode_eta, dtype=np.float64).reshape(-1)
        if eta.size == 0:
            raise ValueError("efficiency vector must not be empty")
        if np.any(eta < 0.0) or np.any(eta > 1.0):
            raise ValueError("every efficiency must lie in [0, 1]")
        eta.setflags(write=False)
        object.__setattr__(self, "per_mode_eta", eta)

    @classmethod
    def uniform(cls, num_modes: int, eta: float) -> "EfficiencySpec":
        return cls(np.full(num_modes, float(eta)))

    @property
    def num_modes(self) -> int:
        return self.per_mode_eta.size


# ---------------------------------------------------------------------------
# state constructors and transformations
# ---------------------------------------------------------------------------

def vacuum(num_modes: int) -> GaussianState:
    """The m-mode vacuum state, covariance ``I / 2``."""
    if num_modes < 1:
        raise ValueError("vacuum needs at least one mode")
    return GaussianState(num_modes, np.eye(2 * num_modes) / 2.0)


def _require_vacuum_modes(state: GaussianState, modes: tuple[int, ...]) -> None:
    m = state.num_modes
    cov = state.covariance
    vac = np.eye(2 * m) / 2.0
    for mode in modes:
        if not 0 <= mode < m:
            raise ValueError(f"mode index {mode} out of range for {m} modes")
        for row in (mode, mode + m):
            if np.max(np.abs(cov[row] - vac[row])) > 1e-10:
                raise ValueError(
                    f"mode {mode} is not in the vacuum state; squeezers must not overlap"
                )


def two_mode_squeezer_symplectic(num_modes: int, spec: SqueezerSpec) -> np.ndarray:
    """Symplectic matrix of a two-mode squeezer embedded in m modes."""
    m = num_modes
    a, b = spec.mode_a, spec.mode_b
    c = math.cosh(spec.r)
    s = math.sinh(spec.r)
    cp = math.cos(spec.phase)
    sp = math.sin(spec.phase)
    smat = np.eye(2 * m)
    smat[a, a] = c
    smat[b, b] = c
    smat[m + a, m + a] = c
    smat[m + b, m + b] = c
    smat[a, b] = s * cp
    smat[b, a] = s * cp
    smat[a, m + b] = s * sp
    smat[b, m + a] = s * sp
    smat[m + a, b] = s * sp
    smat[m + b, a] = s * sp
    smat[m + a, m + b] = -s * cp
    smat[m + b, m + a] = -s * cp
    return smat


def apply_two_mode_squeezer(state: GaussianState, spec: SqueezerSpec) -> GaussianState:
    """Squeeze a vacuum mode pair into a two-mode squeezed vacuum."""
    _require_vacuum_modes(state, spec.modes)
    smat = two_mode_squeezer_symplectic(state.num_modes, spec)
    return GaussianState(state.num_modes, smat @ state.covariance @ smat.T)


def apply_single_mode_squeezer(state: GaussianState, spec: SingleModeSqueezerSpec) -> GaussianState:
    """Squeeze one vacuum mode; x variance becomes ``e^{2r}/2``."""
    _require_vacuum_modes(state, spec.modes)
    m = state.num_modes
    smat = np.eye(2 * m)
    smat[spec.mode, spec.mode] = math.exp(spec.r)
    smat[m + spec.mode, m + spec.mode] = math.exp(-spec.r)
    return GaussianState(m, smat @ state.covariance @ smat.T)


def interferometer_symplectic(itf: Interferometer) -> np.ndarray:
    """Orthogonal-symplectic image [[Re U, -Im U], [Im U, Re U]] of a unitary."""
    u = itf.matrix
    return np.block([[u.real, -u.imag], [u.imag, u.real]])


def apply_interferometer(state: GaussianState, itf: Interferometer) -> GaussianState:
    if itf.num_modes != state.num_modes:
        raise ValueError(
            f"interferometer has {itf.num_modes} modes, state has {state.num_modes}"
        )
    smat = interferometer_symplectic(itf)
    return GaussianState(state.num_modes, smat @ state.covariance @ smat.T)


def apply_loss(state: GaussianState, eff: EfficiencySpec) -> GaussianState:
    """Mix every mode with vacuum on a beamsplitter of transmission eta."""
    if eff.num_modes != state.num_modes:
        raise ValueError(
            f"efficiency vector has {eff.num_modes} entries, state has {state.num_modes} modes"
        )
    root = np.sqrt(np.concatenate([eff.per_mode_eta, eff.per_mode_eta]))
    cov = state.covariance * np.outer(root, root)
    cov += np.diag((1.0 - root ** 2) / 2.0)
    return GaussianState(state.num_modes, cov)


def thermalize(
    num_modes: int,
    squeezers: list[SqueezerSpec | SingleModeSqueezerSpec],
) -> GaussianState:
    """Classical stand-in for a squeezed input: per-mode thermal states.

    Each squeezed mode is replaced by an independent thermal state with the
    same mean photon number ``sinh^2(r)``; all cross-covariances vanish.
    """
    mean_photons = np.zeros(num_modes)
    for spec in squeezers:
        for mode in spec.modes:
            if not 0 <= mode < num_modes:
                raise ValueError(f"mode index {mode} out of range for {num_modes} modes")
            mean_photons[mode] += math.sinh(spec.r) ** 2
    return thermal_state(mean_photons)


def thermal_state(mean_photons: np.ndarray) -> GaussianState:
    """Product of single-mode thermal states with the given mean photon numbers."""
    nbar = np.asarray(mean_photons, dtype=np.float64).reshape(-1)
    if np.any(nbar < 0):
        raise ValueError("mean photon numbers must be non-negative")
    diag = np.concatenate([nbar, nbar]) + 0.5
    return GaussianState(nbar.size, np.diag(diag))


# ---------------------------------------------------------------------------
# unitaries
# ---------------------------------------------------------------------------

def random_unitary(num_modes: int, seed: int) -> Interferometer:
    """Haar-random unitary: QR of a complex Gaussian matrix with phase fix."""
    if num_modes < 1:
        raise ValueError("need at least one mode")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((num_modes, num_modes)) + 1j * rng.standard_normal(
        (num_modes, num_modes)
    )
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return Interferometer(q * (d / np.abs(d)))


def save_unitary_file(path, itf: Interferometer) -> None:
    """Write a unitary as plain text: first line m, then rows of "re,im" entries."""
    u = itf.matrix
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{u.shape[0]}\n")
        for row in u:
            fh.write(" ".join(f"{z.real:.15e},{z.imag:.15e}" for z in row))
            fh.write("\n")


def load_unitary_file(path) -> Interferometer:
    """Load a unitary matrix file, validating unitarity at 1e-8."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"unitary file {path} is empty")
    try:
        m = int(lines[0])
    except ValueError as exc:
        raise ValueError(f"unitary file {path}: first line must be the mode count") from exc
    if len(lines) != m + 1:
        raise ValueError(f"unitary file {path}: expected {m} rows, found {len(lines) - 1}")
    u = np.empty((m, m), dtype=np.complex128)
    for i, line in enumerate(lines[1:]):
        entries = line.split()
        if len(entries) != m:
            raise ValueError(f"unitary file {path}: row {i + 1} has {len(entries)} entries, expected {m}")
        for j, token in enumerate(entries):
            try:
                re_str, im_str = token.split(",")
                u[i, j] = complex(float(re_str), float(im_str))
            except ValueError as exc:
                raise ValueError(
                    f"unitary file {path}: entry ({i + 1},{j + 1}) is not 're,im': {token!r}"
                ) from exc
    dev = unitarity_deviation(u)
    if dev > UNITARY_FILE_TOL:
        raise ValueError(
            f"unitary file {path}: matrix fails unitarity check, max |U^H U - I| = {dev:.3e}"
        )
    return Interferometer(u)


# ---------------------------------------------------------------------------
# derived matrices
# ---------------------------------------------------------------------------

def mode_basis_transform(num_modes: int) -> np.ndarray:
    """Unitary mapping quadrature coordinates to mode-operator coordinates."""
    eye = np.eye(num_modes)
    return np.block([[eye, 1j * eye], [eye, -1j * eye]]) / np.sqrt(2.0)


def husimi_mode_covariance(state: GaussianState) -> np.ndarray:
    """Husimi covariance in the mode-operator basis (vacuum maps to identity)."""
    t = mode_basis_transform(state.num_modes)
    return t @ state.husimi_covariance() @ t.conj().T


def sampling_matrix(state: GaussianState) -> np.ndarray:
    """The ``2m x 2m`` kernel matrix whose submatrices weight click events.

    Computed as ``X (I - Q^{-1})`` with ``Q`` the Husimi covariance in the
    mode-operator basis and ``X`` the block swap.  For a pure state built
    from squeezers and an interferometer the top-left ``m x m`` block equals
    ``U diag(tanh r) U^T``.
    """
    m = state.num_modes
    q = husimi_mode_covariance(state)
    o = np.eye(2 * m) - np.linalg.inv(q)
    x = np.zeros((2 * m, 2 * m))
    x[:m, m:] = np.eye(m)
    x[m:, :m] = np.eye(m)
    return x @ o


def threshold_kernel(state: GaussianState) -> np.ndarray:
    """Real quadrature-basis matrix ``O = I - (sigma + I/2)^{-1}``.

    This is the pair-structured input of the torontonian: the click
    probability of every pattern is a torontonian of one of its submatrices
    divided by ``sqrt(det(sigma + I/2))``.
    """
    sq = state.husimi_covariance()
    return np.eye(2 * state.num_modes) - np.linalg.inv(sq)

"""Exact matrix-function kernels: hafnian, torontonian and permanent.

Each fast kernel is paired with a definition-level brute-force twin so the
two can be cross-checked on random instances.  The torontonian operates on
matrices with quadrature pair structure: a ``2n x 2n`` matrix where mode
``i`` owns rows/columns ``i`` and ``n + i``.

Accumulation of the alternating subset sums uses Neumaier-compensated
summation; the inclusion-exclusion terms cancel heavily and plain summation
loses digits already around ``n = 10``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numba import njit

from .errors import GuardError, UnphysicalStateError, KernelConsistencyError

SYMMETRY_TOL = 1e-12
CONDITION_LIMIT = 1e12
BRUTE_FORCE_LIMIT = 12


def _as_square(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def _check_symmetric(a: np.ndarray, name: str = "matrix") -> None:
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    dev = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if dev > SYMMETRY_TOL * scale:
        raise ValueError(f"{name} is not symmetric: max |A - A^T| = {dev:.3e}")


def _neumaier_add(total, comp, term):
    t = total + term
    if abs(total) >= abs(term):
        comp += (total - t) + term
    else:
        comp += (term - t) + total
    return t, comp


# ---------------------------------------------------------------------------
# hafnian
# ---------------------------------------------------------------------------

def hafnian(a: np.ndarray) -> complex:
    """Hafnian of a complex symmetric matrix (sum over perfect matchings).

    Uses the power-trace subset method: for every subset of the ``n/2``
    row pairs, the coefficient of ``x^{n/2}`` in
    ``exp(sum_k tr(B^k) x^k / (2k))`` with ``B`` the pair-swapped submatrix
    is combined with inclusion-exclusion signs.  Cost ``O(n^3 2^{n/2})``,
    which beats the ``(n-1)!!`` matching enumeration used as its oracle.

    Odd dimension returns 0; the empty matrix returns 1.
    """
    a = _as_square(a, "hafnian input")
    _check_symmetric(a, "hafnian input")
    n = a.shape[0]
    if n == 0:
        return complex(1.0)
    if n % 2:
        return complex(0.0)
    m = n // 2
    a = a.astype(np.complex128, copy=False)

    total = complex(0.0)
    comp = complex(0.0)
    for z in range(1, 1 << m):
        pairs = [p for p in range(m) if (z >> p) & 1]
        rows = []
        for p in pairs:
            rows.append(2 * p)
            rows.append(2 * p + 1)
        az = a[np.ix_(rows, rows)]
        # B = X A_Z with X the per-pair swap; swapping row pairs applies X.
        b = az.copy()
        for i in range(0, len(rows), 2):
            b[[i, i + 1]] = b[[i + 1, i]]
        ev = np.linalg.eigvals(b)
        coeff = _exp_series_coefficient(ev, m)
        sign = -1.0 if (m - len(pairs)) % 2 else 1.0
        total, comp = _neumaier_add(total, comp, sign * coeff)
    return complex(total + comp)


def _exp_series_coefficient(eigenvalues: np.ndarray, order: int) -> complex:
    """Coefficient of ``x^order`` in ``exp(sum_k p_k x^k / (2k))``.

    ``p_k`` are the power sums of the eigenvalues.  Uses the standard
    recurrence for exponentials of truncated power series.
    """
    s = np.zeros(order + 1, dtype=np.complex128)
    powers = np.ones_like(eigenvalues)
    for k in range(1, order + 1):
        powers = powers * eigenvalues
        s[k] = powers.sum() / (2 * k)
    e = np.zeros(order + 1, dtype=np.complex128)
    e[0] = 1.0
    for j in range(1, order + 1):
        acc = complex(0.0)
        for k in range(1, j + 1):
            acc += k * s[k] * e[j - k]
        e[j] = acc / j
    return complex(e[order])


def brute_force_hafnian(a: np.ndarray) -> complex:
    """Definition-level hafnian: enumerate all ``(n-1)!!`` perfect matchings."""
    a = _as_square(a, "hafnian input")
    _check_symmetric(a, "hafnian input")
    n = a.shape[0]
    if n > BRUTE_FORCE_LIMIT:
        raise GuardError(f"brute-force hafnian limited to n <= {BRUTE_FORCE_LIMIT}, got {n}")
    if n == 0:
        return complex(1.0)
    if n % 2:
        return complex(0.0)
    a = a.astype(np.complex128, copy=False)

    def match(indices: tuple[int, ...]) -> complex:
        if not indices:
            return complex(1.0)
        first, rest = indices[0], indices[1:]
        acc = complex(0.0)
        for pos, j in enumerate(rest):
            remaining = rest[:pos] + rest[pos + 1:]
            acc += a[first, j] * match(remaining)
        return acc

    return match(tuple(range(n)))


# ---------------------------------------------------------------------------
# permanent
# ---------------------------------------------------------------------------

def permanent(mat: np.ndarray) -> complex:
    """Permanent via Glynn's formula with Gray-code updates, ``O(n 2^n)``."""
    mat = _as_square(mat, "permanent input")
    n = mat.shape[0]
    if n == 0:
        return complex(1.0)
    mat = mat.astype(np.complex128, copy=False)
    if n == 1:
        return complex(mat[0, 0])

    # delta_0 is pinned to +1; Gray code walks delta_1 .. delta_{n-1}.
    col_sums = mat.sum(axis=0).astype(np.complex128)
    sign = 1.0
    total = complex(0.0)
    comp = complex(0.0)
    total, comp = _neumaier_add(total, comp, sign * np.prod(col_sums))
    delta = np.ones(n)
    for step in range(1, 1 << (n - 1)):
        flip = (step & -step).bit_length()  # index in 1..n-1
        col_sums -= 2.0 * delta[flip] * mat[flip, :]
        delta[flip] = -delta[flip]
        sign = -sign
        total, comp = _neumaier_add(total, comp, sign * np.prod(col_sums))
    return complex((total + comp) / 2 ** (n - 1))


@lru_cache(maxsize=8)
def _permutation_table(n: int) -> np.ndarray:
    from itertools import permutations

    return np.array(list(permutations(range(n))), dtype=np.intp)


_PERM_TABLE_LIMIT = 8


def _permanent_enumerated(mat: np.ndarray) -> complex:
    n = mat.shape[0]
    if n <= _PERM_TABLE_LIMIT:
        cols = _permutation_table(n)
        acc = mat[0, cols[:, 0]].copy()
        for row in range(1, n):
            acc *= mat[row, cols[:, row]]
        return complex(acc.sum())
    # expanding along the first row still visits every permutation product
    # exactly once; it just shares the row-0 factor between them
    total = complex(0.0)
    keep = np.arange(1, n)
    for j in range(n):
        if mat[0, j] == 0.0:
            continue
        minor = mat[np.ix_(keep, [c for c in range(n) if c != j])]
        total += mat[0, j] * _permanent_enumerated(minor)
    return total


def brute_force_permanent(mat: np.ndarray) -> complex:
    """Definition-level permanent: sum over all ``n!`` permutation products."""
    mat = _as_square(mat, "permanent input")
    n = mat.shape[0]
    if n > 10:
        raise GuardError(f"brute-force permanent limited to n <= 10, got {n}")
    if n == 0:
        return complex(1.0)
    return _permanent_enumerated(mat.astype(np.complex128, copy=False))


# ---------------------------------------------------------------------------
# torontonian
# ---------------------------------------------------------------------------

def _pair_indices(modes: list[int], n: int) -> list[int]:
    return list(modes) + [m + n for m in modes]


def torontonian(o: np.ndarray) -> float:
    """Torontonian of a ``2n x 2n`` pair-structured matrix.

    ``Tor(O) = sum_{Z subsets of modes} (-1)^{n-|Z|} / sqrt(det(I - O_Z))``
    where ``O_Z`` keeps both quadrature rows/columns of the modes in ``Z``.
    For ``O`` derived from a physical covariance every ``I - O_Z`` is
    positive definite; a non-positive-definite block raises
    :class:`UnphysicalStateError`.

    Accepts real symmetric input (quadrature basis) or complex Hermitian
    input (mode-operator basis); both give the same value.
    """
    o = _as_square(o, "torontonian input")
    n2 = o.shape[0]
    if n2 % 2:
        raise ValueError("torontonian input must have even dimension (pair structure)")
    n = n2 // 2
    scale = max(1.0, float(np.max(np.abs(o))) if o.size else 1.0)
    is_real = not np.iscomplexobj(o) or float(np.max(np.abs(o.imag))) <= SYMMETRY_TOL * scale
    if is_real:
        o = np.ascontiguousarray(o.real, dtype=np.float64)
        _check_symmetric(o, "torontonian input")
        hermitian = True
    else:
        o = o.astype(np.complex128, copy=False)
        dev_h = float(np.max(np.abs(o - o.conj().T)))
        dev_s = float(np.max(np.abs(o - o.T)))
        if min(dev_h, dev_s) > SYMMETRY_TOL * scale:
            raise ValueError("torontonian input must be symmetric or Hermitian")
        hermitian = dev_h <= SYMMETRY_TOL * scale

    eye = np.eye(n2, dtype=o.dtype)
    total = 0.0
    comp = 0.0
    imag_acc = 0.0
    for z in range(1 << n):
        modes = [i for i in range(n) if (z >> i) & 1]
        size = len(modes)
        sign = -1.0 if (n - size) % 2 else 1.0
        if size == 0:
            total, comp = _neumaier_add(total, comp, sign)
            continue
        idx = _pair_indices(modes, n)
        block = eye[np.ix_(idx, idx)] - o[np.ix_(idx, idx)]
        if hermitian:
            try:
                chol = np.linalg.cholesky(block)
            except np.linalg.LinAlgError as exc:
                raise UnphysicalStateError(
                    f"I - O_Z not positive definite for mode subset {modes}"
                ) from exc
            diag = np.abs(np.diagonal(chol))
            if diag.max() > np.sqrt(CONDITION_LIMIT) * diag.min():
                raise UnphysicalStateError(
                    f"I - O_Z condition estimate exceeds {CONDITION_LIMIT:.0e} "
                    f"for mode subset {modes}"
                )
            root_det = float(np.prod(diag))
            term = sign / root_det
        else:
            det = np.linalg.det(block)
            if det == 0:
                raise UnphysicalStateError(f"I - O_Z singular for mode subset {modes}")
            value = sign / np.sqrt(det)
            imag_acc += value.imag
            term = value.real
        total, comp = _neumaier_add(total, comp, term)
    result = total + comp
    if abs(imag_acc) > 1e-8 * max(1.0, abs(result)):
        raise KernelConsistencyError(
            f"torontonian accumulated a significant imaginary part {imag_acc:.3e}"
        )
    return float(result)


def brute_force_torontonian(o: np.ndarray) -> float:
    """Definition-level torontonian: plain subset loop with numpy determinants."""
    o = _as_square(o, "torontonian input")
    n2 = o.shape[0]
    if n2 % 2:
        raise ValueError("torontonian input must have even dimension (pair structure)")
    n = n2 // 2
    if n > BRUTE_FORCE_LIMIT:
        raise GuardError(f"brute-force torontonian limited to n <= {BRUTE_FORCE_LIMIT}, got {n}")
    eye = np.eye(n2, dtype=complex)
    total = 0.0 + 0.0j
    for z in range(1 << n):
        modes = [i for i in range(n) if (z >> i) & 1]
        sign = -1.0 if (n - len(modes)) % 2 else 1.0
        if not modes:
            total += sign
            continue
        idx = _pair_indices(modes, n)
        det = np.linalg.det(eye[np.ix_(idx, idx)] - np.asarray(o, dtype=complex)[np.ix_(idx, idx)])
        total += sign / np.sqrt(det)
    return float(total.real)


# ---------------------------------------------------------------------------
# counted kernels (numba)
#
# These back the chain-rule sampler.  Only scalar multiplies and additions
# inside them are tallied; divisions count as multiplications, square roots
# and bookkeeping (index shuffling, RNG) do not count.  ops[0] accumulates
# multiplications, ops[1] additions.
# ---------------------------------------------------------------------------

@njit(cache=True)
def _chol_det_counted(a, ops):  # pragma: no cover - exercised via wrappers
    """In-place Cholesky determinant of a symmetric positive-definite matrix.

    Returns ``(det, status)`` with status 0 = ok, 1 = not positive definite,
    2 = pivot-ratio condition estimate above 1e12.
    """
    n = a.shape[0]
    det = 1.0
    max_piv = 0.0
    min_piv = 1e300
    for j in range(n):
        s = a[j, j]
        for k in range(j):
            s -= a[j, k] * a[j, k]
        ops[0] += j
        ops[1] += j
        if s <= 0.0:
            return 0.0, 1
        if s > max_piv:
            max_piv = s
        if s < min_piv:
            min_piv = s
        det *= s
        ops[0] += 1
        ajj = np.sqrt(s)
        inv = 1.0 / ajj
        ops[0] += 1
        a[j, j] = ajj
        for i in range(j + 1, n):
            t = a[i, j]
            for k in range(j):
                t -= a[i, k] * a[j, k]
            a[i, j] = t * inv
        ops[0] += (n - j - 1) * (j + 1)
        ops[1] += (n - j - 1) * j
    if max_piv > 1e12 * min_piv:
        return det, 2
    return det, 0


def chol_det_counted(a: np.ndarray, ops: np.ndarray) -> float:
    """Counted determinant of a symmetric positive-definite matrix.

    Wrapper over the numba kernel; raises on non-PD or ill-conditioned input.
    """
    buf = np.array(a, dtype=np.float64, order="C")
    det, status = _chol_det_counted(buf, ops)
    if status == 1:
        raise UnphysicalStateError("matrix is not positive definite")
    if status == 2:
        raise UnphysicalStateError(f"matrix condition estimate exceeds {CONDITION_LIMIT:.0e}")
    return det

"""Truncated Fock-space reference engine for threshold-click statistics.

Deliberately independent of the package's covariance/torontonian machinery:

* squeezed inputs enter through closed-form Fock amplitudes,
* the interferometer acts as the sparse matrix exponential of its
  number-conserving hopping generator (``scipy.sparse.linalg.expm_multiply``),
* loss and threshold detection reduce to per-photon survival probabilities
  applied to the lossless photon-number distribution.

Conventions match the package: two-mode squeezing correlates the x
quadratures (amplitudes ``tanh^n r / cosh r`` on ``|n, n>``), single-mode
squeezing anti-squeezes x (amplitudes ``(tanh r)^k sqrt((2k)!) / (2^k k!
sqrt(cosh r))`` on ``|2k>``), and a photon in input mode j reaches output i
with amplitude ``U_ij``.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.sparse.linalg import expm_multiply


class FockOracle:
    def __init__(self, num_modes: int, cutoff: int):
        self.num_modes = num_modes
        self.cutoff = cutoff
        self.basis: list[tuple[int, ...]] = [
            n for n in product(range(cutoff + 1), repeat=num_modes) if sum(n) <= cutoff
        ]
        self.index = {n: i for i, n in enumerate(self.basis)}

    def input_state(
        self,
        pair_squeezers: list[tuple[int, int, float]] = (),
        single_squeezers: list[tuple[int, float]] = (),
    ) -> np.ndarray:
        """Product state of squeezed vacua given as (mode_a, mode_b, r) or (mode, r)."""
        psi = np.zeros(len(self.basis), dtype=np.complex128)
        for i, occ in enumerate(self.basis):
            amp = 1.0 + 0.0j
            assigned = set()
            for a, b, r in pair_squeezers:
                assigned |= {a, b}
                if occ[a] != occ[b]:
                    amp = 0.0
                    break
                amp *= math.tanh(r) ** occ[a] / math.cosh(r)
            if amp == 0.0:
                continue
            for mode, r in single_squeezers:
                assigned.add(mode)
                n = occ[mode]
                if n % 2:
                    amp = 0.0
                    break
                k = n // 2
                amp *= (
                    math.tanh(r) ** k
                    * math.sqrt(math.factorial(2 * k))
                    / (2**k * math.factorial(k) * math.sqrt(math.cosh(r)))
                )
            if amp == 0.0:
                continue
            if any(occ[m] != 0 for m in range(self.num_modes) if m not in assigned):
                continue
            psi[i] = amp
        norm = np.linalg.norm(psi)
        if norm < 0.999:
            raise ValueError(
                f"truncation cutoff {self.cutoff} loses too much weight (norm {norm:.6f})"
            )
        return psi

    def _hopping_operator(self, kappa: np.ndarray) -> scipy.sparse.csr_matrix:
        """Sparse matrix of ``sum_jk kappa_jk a_j^dag a_k`` on the basis."""
        rows, cols, vals = [], [], []
        for col, occ in enumerate(self.basis):
            for k in range(self.num_modes):
                if occ[k] == 0:
                    continue
                for j in range(self.num_modes):
                    if kappa[j, k] == 0.0:
                        continue
                    if j == k:
                        rows.append(col)
                        cols.append(col)
                        vals.append(kappa[j, k] * occ[k])
                        continue
                    target = list(occ)
                    target[k] -= 1
                    target[j] += 1
                    row = self.index.get(tuple(target))
                    if row is None:
                        continue
                    rows.append(row)
                    cols.append(col)
                    vals.append(kappa[j, k] * math.sqrt(occ[k] * (occ[j] + 1)))
        return scipy.sparse.csr_matrix(
            (vals, (rows, cols)), shape=(len(self.basis), len(self.basis))
        )

    def apply_interferometer(self, psi: np.ndarray, unitary: np.ndarray) -> np.ndarray:
        """Evolve so that mode operators transform as ``a -> U a``."""
        kappa = scipy.linalg.logm(np.asarray(unitary, dtype=complex))
        return expm_multiply(self._hopping_operator(kappa), psi)

    def number_probabilities(self, psi: np.ndarray) -> np.ndarray:
        return np.abs(psi) ** 2

    def click_probability(self, psi: np.ndarray, clicked_mask: int, eta: np.ndarray) -> float:
        """Probability of the exact click pattern after per-mode loss.

        Each of the ``n_j`` photons in mode j independently survives with
        probability ``eta_j``; mode j stays silent with ``(1-eta_j)^{n_j}``.
        """
        probs = self.number_probabilities(psi)
        total = 0.0
        for i, occ in enumerate(self.basis):
            if probs[i] == 0.0:
                continue
            term = probs[i]
            for j in range(self.num_modes):
                miss = (1.0 - eta[j]) ** occ[j]
                term *= (1.0 - miss) if (clicked_mask >> j) & 1 else miss
            total += term
        return total

    def click_distribution(self, psi: np.ndarray, eta: np.ndarray) -> np.ndarray:
        return np.array(
            [
                self.click_probability(psi, mask, eta)
                for mask in range(1 << self.num_modes)
            ]
        )

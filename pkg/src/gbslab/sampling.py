"""Threshold-detector click statistics and samplers for Gaussian states.

Exact distributions come from the determinant form of the no-click
probabilities: for a mode subset ``W`` the probability that no detector in
``W`` fires is ``1 / sqrt(det(sigma_Q[W]))`` with ``sigma_Q = sigma + I/2``.
Pattern probabilities follow by inclusion-exclusion, which for the full
distribution is evaluated as one superset Moebius transform over the
silent-set lattice; per pattern this is identical to
``Tor(O_S) / sqrt(det(sigma_Q))`` with ``O = I - sigma_Q^{-1}`` restricted
to the clicked modes.

Seed discipline: all samplers are deterministic given ``(config, seed)``.
Child streams for parallel workers derive from the root seed through
``numpy.random.SeedSequence((seed, worker_index))``; :func:`derive_rng` is
the single documented splitting rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import GuardError, KernelConsistencyError, UnphysicalStateError
from .gaussian import EfficiencySpec, GaussianState, Interferometer
from .matrixfn import _chol_det_counted

EXACT_DISTRIBUTION_MODE_LIMIT = 20
NORMALIZATION_TOL = 1e-9
CLAMP_BAND = 1e-9


def derive_rng(seed: int, *stream: int) -> np.random.Generator:
    """Documented seed-splitting rule: ``SeedSequence((seed, *stream))``."""
    return np.random.default_rng(np.random.SeedSequence((seed, *stream)))


# ---------------------------------------------------------------------------
# click patterns and distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClickPattern:
    """Subset of output modes whose threshold detectors fired.

    Stored as a bitmask: bit ``i`` set means the detector on mode ``i + 1``
    clicked (modes are 1-based in all text output).
    """

    num_modes: int
    mask: int

    def __post_init__(self):
        if self.num_modes < 1:
            raise ValueError("patterns need at least one mode")
        if not 0 <= self.mask < (1 << self.num_modes):
            raise ValueError(f"mask {self.mask} out of range for {self.num_modes} modes")

    @property
    def click_count(self) -> int:
        return bin(self.mask).count("1")

    @property
    def clicked_modes(self) -> tuple[int, ...]:
        """1-based indices of the modes that clicked."""
        return tuple(i + 1 for i in range(self.num_modes) if (self.mask >> i) & 1)

    def bitstring(self) -> str:
        """Bitstring with the most significant (leftmost) bit = mode 1."""
        return "".join("1" if (self.mask >> i) & 1 else "0" for i in range(self.num_modes))

    @classmethod
    def from_bitstring(cls, bits: str) -> "ClickPattern":
        if not bits or any(c not in "01" for c in bits):
            raise ValueError(f"invalid pattern bitstring {bits!r}")
        mask = 0
        for i, c in enumerate(bits):
            if c == "1":
                mask |= 1 << i
        return cls(len(bits), mask)

    @classmethod
    def from_clicked_modes(cls, num_modes: int, modes: tuple[int, ...]) -> "ClickPattern":
        """Build from 1-based clicked mode indices."""
        mask = 0
        for mode in modes:
            if not 1 <= mode <= num_modes:
                raise ValueError(f"mode {mode} out of range 1..{num_modes}")
            mask |= 1 << (mode - 1)
        return cls(num_modes, mask)


def _popcounts(size: int) -> np.ndarray:
    counts = np.zeros(size, dtype=np.int64)
    n = 1
    while n < size:
        counts[n:2 * n] = counts[:n] + 1
        n *= 2
    return counts


@dataclass
class ClickDistribution:
    """Normalized map from click pattern to probability.

    ``probs[mask]`` is the probability of the pattern with clicked-mode
    bitmask ``mask``.  When ``restricted_to`` is set the distribution was
    renormalized within one click sector and ``renormalized`` is flagged.
    """

    num_modes: int
    probs: np.ndarray
    restricted_to: int | None = None
    renormalized: bool = False

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != (1 << self.num_modes,):
            raise ValueError(
                f"need {1 << self.num_modes} probabilities for {self.num_modes} modes"
            )
        neg = probs.min()
        if neg < -CLAMP_BAND:
            raise KernelConsistencyError(f"negative probability {neg:.3e} in distribution")
        probs = np.clip(probs, 0.0, None)
        total = probs.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise KernelConsistencyError(
                f"distribution sums to {total!r}, outside 1 +- {NORMALIZATION_TOL}"
            )
        if self.restricted_to is not None:
            clicks = _popcounts(probs.size)
            if probs[clicks != self.restricted_to].sum() > NORMALIZATION_TOL:
                raise ValueError("restricted distribution has mass outside its sector")
        self.probs = probs

    def probability(self, pattern: ClickPattern | int) -> float:
        mask = pattern.mask if isinstance(pattern, ClickPattern) else int(pattern)
        return float(self.probs[mask])

    def restrict(self, click_count: int) -> "ClickDistribution":
        """Renormalized distribution of one click sector."""
        if not 0 <= click_count <= self.num_modes:
            raise ValueError(f"sector {click_count} out of range")
        if self.restricted_to is not None:
            if self.restricted_to != click_count:
                raise ValueError("distribution already restricted to a different sector")
            return self
        clicks = _popcounts(self.probs.size)
        sector = np.where(clicks == click_count, self.probs, 0.0)
        weight = sector.sum()
        if weight <= 0.0:
            raise ValueError(f"sector {click_count} has zero probability")
        return ClickDistribution(
            self.num_modes, sector / weight, restricted_to=click_count, renormalized=True
        )

    def sector_weight(self, click_count: int) -> float:
        clicks = _popcounts(self.probs.size)
        return float(self.probs[clicks == click_count].sum())

    def sample_masks(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw pattern bitmasks; categorical sampling over the full support."""
        return rng.choice(self.probs.size, size=size, p=self.probs)

    def sample(self, rng: np.random.Generator, size: int) -> list[ClickPattern]:
        return [ClickPattern(self.num_modes, int(m)) for m in self.sample_masks(rng, size)]

    def patterns(self) -> list[tuple[ClickPattern, float]]:
        """All patterns with nonzero probability, ascending mask order."""
        out = []
        for mask in np.flatnonzero(self.probs):
            out.append((ClickPattern(self.num_modes, int(mask)), float(self.probs[mask])))
        return out


def empirical_distribution(
    patterns: list[ClickPattern] | np.ndarray,
    num_modes: int,
    restricted_to: int | None = None,
) -> ClickDistribution:
    """Relative-frequency estimate from observed patterns (no smoothing)."""
    masks = np.asarray(
        [p.mask if isinstance(p, ClickPattern) else int(p) for p in patterns], dtype=np.int64
    )
    if masks.size == 0:
        raise ValueError("cannot estimate a distribution from zero samples")
    probs = np.bincount(masks, minlength=1 << num_modes).astype(np.float64)
    probs /= masks.size
    return ClickDistribution(
        num_modes, probs, restricted_to=restricted_to, renormalized=restricted_to is not None
    )


@dataclass
class OpCounter:
    """Tally of scalar multiplications/additions spent in sampling kernels.

    Divisions count as multiplications; square roots, RNG and index
    bookkeeping are excluded.  Counts only ever grow.
    """

    multiplications: int = 0
    additions: int = 0

    def _absorb(self, buf: np.ndarray) -> None:
        self.multiplications += int(buf[0])
        self.additions += int(buf[1])


# ---------------------------------------------------------------------------
# exact distribution
# ---------------------------------------------------------------------------

def _silent_set_probabilities(state: GaussianState) -> np.ndarray:
    """``f[mask] = P(no click on the modes in mask)`` for every subset."""
    m = state.num_modes
    sq = state.husimi_covariance()
    f = np.empty(1 << m)
    f[0] = 1.0
    for mask in range(1, 1 << m):
        modes = [i for i in range(m) if (mask >> i) & 1]
        idx = modes + [i + m for i in modes]
        block = sq[np.ix_(idx, idx)]
        try:
            chol = np.linalg.cholesky(block)
        except np.linalg.LinAlgError as exc:
            raise UnphysicalStateError(
                f"Husimi covariance block for modes {modes} is not positive definite"
            ) from exc
        f[mask] = 1.0 / np.prod(np.diagonal(chol))
    return f


def exact_distribution(
    state: GaussianState, restrict_n: int | None = None
) -> ClickDistribution:
    """Exact threshold-click distribution of a Gaussian state.

    Evaluates the inclusion-exclusion of no-click probabilities for all
    ``2^m`` patterns at once via a superset Moebius transform; this equals
    the per-pattern torontonian formula term by term.  Guarded at
    ``m <= 20``.
    """
    m = state.num_modes
    if m > EXACT_DISTRIBUTION_MODE_LIMIT:
        raise GuardError(
            f"exact distribution enumerates 2^m patterns; m = {m} exceeds "
            f"{EXACT_DISTRIBUTION_MODE_LIMIT}"
        )
    f = _silent_set_probabilities(state)
    # Moebius transform over supersets: afterwards f[N] is the probability
    # that exactly the modes outside N click.
    size = f.size
    masks = np.arange(size)
    for b in range(m):
        bit = 1 << b
        lower = masks[(masks & bit) == 0]
        f[lower] -= f[lower | bit]
    full = size - 1
    probs = np.empty_like(f)
    probs[masks] = f[full ^ masks]
    dist = ClickDistribution(m, probs)
    if restrict_n is not None:
        return dist.restrict(restrict_n)
    return dist


def pattern_probability(state: GaussianState, pattern: ClickPattern) -> float:
    """Single pattern probability via ``Tor(O_S) / sqrt(det(sigma_Q))``."""
    from .matrixfn import torontonian

    m = state.num_modes
    if pattern.num_modes != m:
        raise ValueError("pattern/state mode count mismatch")
    sq = state.husimi_covariance()
    root_det = float(np.sqrt(np.linalg.det(sq)))
    clicked = [i for i in range(m) if (pattern.mask >> i) & 1]
    if not clicked:
        return 1.0 / root_det
    o = np.eye(2 * m) - np.linalg.inv(sq)
    idx = clicked + [i + m for i in clicked]
    return torontonian(o[np.ix_(idx, idx)]) / root_det


# ---------------------------------------------------------------------------
# chain-rule sampler
# ---------------------------------------------------------------------------

@njit(cache=True)
def _chain_rule_batch(sigma_q, uniforms, per_sample_ops, out_masks):  # pragma: no cover
    """Sample click patterns mode by mode from conditional no-click ratios.

    Returns 0 on success, 2 on a conditional probability outside the
    clamping band, 3 on a determinant failure.  Row ``s`` of
    ``per_sample_ops`` receives the (multiplications, additions) spent on
    sample ``s``; divisions are tallied as multiplications.
    """
    m = sigma_q.shape[0] // 2
    n_samples = uniforms.shape[0]
    sel = np.empty(m, np.int64)
    buf = np.empty((2 * m, 2 * m))
    clicked = np.empty(m, np.int64)
    silent = np.empty(m, np.int64)
    for s in range(n_samples):
        ops = per_sample_ops[s]
        n_clicked = 0
        n_silent = 0
        p_prefix = 1.0
        mask = 0
        for k in range(m):
            # probability of the decided prefix with mode k added as silent
            total = 0.0
            comp = 0.0
            for w in range(1 << n_clicked):
                ns = 0
                for i in range(n_silent):
                    sel[ns] = silent[i]
                    ns += 1
                sel[ns] = k
                ns += 1
                sign = 1.0
                for b in range(n_clicked):
                    if (w >> b) & 1:
                        sel[ns] = clicked[b]
                        ns += 1
                        sign = -sign
                for i in range(ns):
                    for j in range(ns):
                        buf[i, j] = sigma_q[sel[i], sel[j]]
                        buf[i, j + ns] = sigma_q[sel[i], sel[j] + m]
                        buf[i + ns, j] = sigma_q[sel[i] + m, sel[j]]
                        buf[i + ns, j + ns] = sigma_q[sel[i] + m, sel[j] + m]
                det, status = _chol_det_counted(buf[: 2 * ns, : 2 * ns], ops)
                if status != 0:
                    return 3
                term = sign / np.sqrt(det)
                ops[0] += 1
                t = total + term
                if abs(total) >= abs(term):
                    comp += (total - t) + term
                else:
                    comp += (term - t) + total
                total = t
                ops[1] += 1
            p_silent_ext = total + comp
            # the conditional itself is chain-rule bookkeeping, not kernel
            # arithmetic, so the ratio is not tallied
            p_click = 1.0 - p_silent_ext / p_prefix
            if p_click < 0.0:
                if p_click < -CLAMP_BAND:
                    return 2
                p_click = 0.0
            elif p_click > 1.0:
                if p_click > 1.0 + CLAMP_BAND:
                    return 2
                p_click = 1.0
            if uniforms[s, k] < p_click:
                clicked[n_clicked] = k
                n_clicked += 1
                mask |= 1 << k
                p_prefix = p_prefix - p_silent_ext
            else:
                silent[n_silent] = k
                n_silent += 1
                p_prefix = p_silent_ext
        out_masks[s] = mask
    return 0


def chain_rule_sample_masks(
    state: GaussianState,
    n_samples: int,
    seed_or_rng: int | np.random.Generator,
    counter: OpCounter | None = None,
    return_ops: bool = False,
):
    """Draw click-pattern bitmasks with the mode-by-mode conditional sampler.

    Modes are decided in ascending index order; each conditional is a ratio
    of inclusion-exclusion prefix probabilities.  Cost per sample scales as
    ``2^n`` in its click number ``n``.  With ``return_ops`` the per-sample
    (multiplications, additions) array is returned alongside the masks.
    """
    if n_samples < 0:
        raise ValueError("sample count must be non-negative")
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else derive_rng(int(seed_or_rng), 0)
    )
    m = state.num_modes
    uniforms = rng.random((n_samples, m))
    out = np.zeros(n_samples, dtype=np.int64)
    per_sample_ops = np.zeros((n_samples, 2), dtype=np.int64)
    if n_samples > 0:
        sq = state.husimi_covariance()
        # vacuum short-circuit: nothing ever clicks, no kernel work to count
        if np.max(np.abs(sq - np.eye(2 * m))) >= 1e-14:
            status = _chain_rule_batch(
                np.ascontiguousarray(sq), uniforms, per_sample_ops, out
            )
            if status == 2:
                raise KernelConsistencyError(
                    "conditional click probability outside [-1e-9, 1 + 1e-9]"
                )
            if status == 3:
                raise UnphysicalStateError("prefix covariance block not positive definite")
    if counter is not None:
        counter._absorb(per_sample_ops.sum(axis=0))
    if return_ops:
        return out, per_sample_ops
    return out


def chain_rule_sample(
    state: GaussianState,
    seed_or_rng: int | np.random.Generator,
    counter: OpCounter | None = None,
) -> ClickPattern:
    """Draw one click pattern; see :func:`chain_rule_sample_masks`."""
    mask = chain_rule_sample_masks(state, 1, seed_or_rng, counter)[0]
    return ClickPattern(state.num_modes, int(mask))


# ---------------------------------------------------------------------------
# classical hypothesis samplers
# ---------------------------------------------------------------------------

def uniform_distribution(num_modes: int, click_count: int) -> ClickDistribution:
    """Uniform distribution over all patterns with exactly n clicks."""
    if not 0 <= click_count <= num_modes:
        raise ValueError(f"click count {click_count} out of range 0..{num_modes}")
    clicks = _popcounts(1 << num_modes)
    sector = (clicks == click_count).astype(np.float64)
    return ClickDistribution(
        num_modes,
        sector / sector.sum(),
        restricted_to=click_count,
        renormalized=True,
    )


def uniform_sample(
    num_modes: int, click_count: int, seed_or_rng: int | np.random.Generator
) -> ClickPattern:
    """One pattern drawn uniformly from the n-click sector."""
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else derive_rng(int(seed_or_rng), 3)
    )
    if not 0 <= click_count <= num_modes:
        raise ValueError(f"click count {click_count} out of range 0..{num_modes}")
    modes = rng.choice(num_modes, size=click_count, replace=False)
    mask = 0
    for mode in modes:
        mask |= 1 << int(mode)
    return ClickPattern(num_modes, mask)


def distinguishable_distribution(
    itf: Interferometer,
    input_means: np.ndarray,
    eff: EfficiencySpec,
) -> ClickDistribution:
    """Exact click distribution for the distinguishable-photon hypothesis.

    Every input mode independently emits photons with a thermal (geometric)
    photon-number law of the given mean; each photon is routed to output
    ``i`` with probability ``|U_ij|^2`` and survives with probability
    ``eta_i``.  The no-click probability of a mode set then factors over
    input modes, and pattern probabilities follow by the same Moebius
    transform as the Gaussian case.
    """
    u = itf.matrix
    m = itf.num_modes
    nbar = np.asarray(input_means, dtype=np.float64).reshape(-1)
    if nbar.size != m or eff.num_modes != m:
        raise ValueError("interferometer, input means and efficiency sizes must agree")
    if np.any(nbar < 0):
        raise ValueError("input mean photon numbers must be non-negative")
    weights = (np.abs(u) ** 2) * eff.per_mode_eta[:, None]  # weights[i, j], output i
    f = np.empty(1 << m)
    for mask in range(1 << m):
        rows = [i for i in range(m) if (mask >> i) & 1]
        s = weights[rows, :].sum(axis=0) if rows else np.zeros(m)
        f[mask] = float(np.prod(1.0 / (1.0 + nbar * s)))
    masks = np.arange(1 << m)
    for b in range(m):
        bit = 1 << b
        lower = masks[(masks & bit) == 0]
        f[lower] -= f[lower | bit]
    probs = np.empty_like(f)
    probs[masks] = f[(1 << m) - 1 ^ masks]
    return ClickDistribution(m, probs)


def distinguishable_sample_masks(
    itf: Interferometer,
    input_means: np.ndarray,
    eff: EfficiencySpec,
    n_samples: int,
    seed_or_rng: int | np.random.Generator,
) -> np.ndarray:
    """Direct simulation of the distinguishable-photon hypothesis."""
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else derive_rng(int(seed_or_rng), 2)
    )
    u = itf.matrix
    m = itf.num_modes
    nbar = np.asarray(input_means, dtype=np.float64).reshape(-1)
    routing = np.abs(u) ** 2  # routing[i, j] = P(input j -> output i)
    eta = eff.per_mode_eta
    out = np.zeros(n_samples, dtype=np.int64)
    # geometric law with mean nbar: P(k) = nbar^k / (1 + nbar)^(k + 1)
    success = 1.0 / (1.0 + nbar)
    for s in range(n_samples):
        mask = 0
        for j in range(m):
            if nbar[j] == 0.0:
                continue
            k = rng.geometric(success[j]) - 1
            if k == 0:
                continue
            outputs = rng.choice(m, size=k, p=routing[:, j])
            survived = rng.random(k) < eta[outputs]
            for i in outputs[survived]:
                mask |= 1 << int(i)
        out[s] = mask
    return out


def route_single_photon(
    itf: Interferometer,
    input_mode: int,
    eff: EfficiencySpec,
    rng: np.random.Generator,
) -> ClickPattern:
    """Route one photon from an input mode; clicks at most one output."""
    routing = np.abs(itf.matrix) ** 2
    i = int(rng.choice(itf.num_modes, p=routing[:, input_mode]))
    mask = (1 << i) if rng.random() < eff.per_mode_eta[i] else 0
    return ClickPattern(itf.num_modes, mask)


# ---------------------------------------------------------------------------
# stream and table output
# ---------------------------------------------------------------------------

def write_sample_stream(fh, patterns) -> None:
    """One line per sample: bitstring (MSB = mode 1), a tab, the click count."""
    for p in patterns:
        fh.write(f"{p.bitstring()}\t{p.click_count}\n")


def read_sample_stream(fh) -> list[ClickPattern]:
    out = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        bits = line.split("\t")[0]
        out.append(ClickPattern.from_bitstring(bits))
    return out


def write_distribution_csv(fh, dist: ClickDistribution) -> None:
    """CSV with header ``pattern,probability``; patterns as bitstrings."""
    fh.write("pattern,probability\n")
    for mask in range(dist.probs.size):
        p = ClickPattern(dist.num_modes, mask)
        fh.write(f"{p.bitstring()},{float(dist.probs[mask])!r}\n")


def read_distribution_csv(fh) -> ClickDistribution:
    header = fh.readline().strip()
    if header != "pattern,probability":
        raise ValueError(f"unexpected distribution CSV header {header!r}")
    rows = {}
    num_modes = None
    for line in fh:
        line = line.strip()
        if not line:
            continue
        bits, prob = line.split(",")
        pattern = ClickPattern.from_bitstring(bits)
        num_modes = pattern.num_modes
        rows[pattern.mask] = float(prob)
    if num_modes is None:
        raise ValueError("distribution CSV has no rows")
    probs = np.zeros(1 << num_modes)
    for mask, prob in rows.items():
        probs[mask] = prob
    return ClickDistribution(num_modes, probs)

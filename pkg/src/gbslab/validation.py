"""Certification statistics: similarity, total-variation distance, sorted
distribution overlays and the likelihood-ratio counter.

All metrics compare distributions within one click sector; cross-sector
comparison is rejected.  Empirical distributions are plain relative
frequencies, and metric standard errors come from a seeded bootstrap with
200 resamples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampling import ClickDistribution, ClickPattern, derive_rng, empirical_distribution

BOOTSTRAP_RESAMPLES = 200
METRIC_CONSISTENCY_TOL = 1e-9


def _check_comparable(p: ClickDistribution, q: ClickDistribution) -> None:
    if p.num_modes != q.num_modes:
        raise ValueError(
            f"distributions live on different mode counts: {p.num_modes} vs {q.num_modes}"
        )
    if p.restricted_to != q.restricted_to:
        raise ValueError(
            f"mismatched click sectors: {p.restricted_to} vs {q.restricted_to}"
        )


def similarity(p: ClickDistribution, q: ClickDistribution) -> float:
    """Bhattacharyya-style overlap ``sum_i sqrt(p_i q_i)``; 1 iff ``p = q``."""
    _check_comparable(p, q)
    return float(np.sqrt(p.probs * q.probs).sum())


def tvd(p: ClickDistribution, q: ClickDistribution) -> float:
    """Total variation distance ``(1/2) sum_i |p_i - q_i|``."""
    _check_comparable(p, q)
    return float(0.5 * np.abs(p.probs - q.probs).sum())


@dataclass(frozen=True)
class MetricReport:
    """Similarity and total-variation distance of an empirical distribution
    against a reference, with bootstrap standard errors."""

    similarity: float
    tvd: float
    click_sector: int | None
    sample_count: int
    similarity_stderr: float
    tvd_stderr: float

    def __post_init__(self):
        if not -METRIC_CONSISTENCY_TOL <= self.similarity <= 1.0 + METRIC_CONSISTENCY_TOL:
            raise ValueError(f"similarity {self.similarity} out of [0, 1]")
        if not -METRIC_CONSISTENCY_TOL <= self.tvd <= 1.0 + METRIC_CONSISTENCY_TOL:
            raise ValueError(f"tvd {self.tvd} out of [0, 1]")
        # Bhattacharyya / total-variation inequalities
        if 1.0 - self.similarity > self.tvd + 1e-6:
            raise ValueError(f"metrics violate 1 - S <= D: S={self.similarity}, D={self.tvd}")
        bound = math.sqrt(max(0.0, 1.0 - self.similarity**2))
        if self.tvd > bound + 1e-6:
            raise ValueError(f"metrics violate D <= sqrt(1 - S^2): S={self.similarity}, D={self.tvd}")

    def to_text(self) -> str:
        lines = [
            f"similarity: {self.similarity!r}",
            f"similarity_stderr: {self.similarity_stderr!r}",
            f"tvd: {self.tvd!r}",
            f"tvd_stderr: {self.tvd_stderr!r}",
            f"click_sector: {self.click_sector}",
            f"sample_count: {self.sample_count}",
            f"stderr_method: bootstrap({BOOTSTRAP_RESAMPLES} resamples)",
        ]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        header = "similarity,similarity_stderr,tvd,tvd_stderr,click_sector,sample_count"
        row = (
            f"{self.similarity!r},{self.similarity_stderr!r},{self.tvd!r},"
            f"{self.tvd_stderr!r},{self.click_sector},{self.sample_count}"
        )
        return header + "\n" + row + "\n"


def metric_report(
    samples: list[ClickPattern] | np.ndarray,
    reference: ClickDistribution,
    seed: int,
    bootstrap_resamples: int = BOOTSTRAP_RESAMPLES,
) -> MetricReport:
    """Estimate S and D of observed samples against a reference distribution.

    Samples must lie in the reference's click sector when it is restricted.
    Standard errors are bootstrap estimates over resampled sample sets.
    """
    masks = np.asarray(
        [p.mask if isinstance(p, ClickPattern) else int(p) for p in samples], dtype=np.int64
    )
    if masks.size == 0:
        raise ValueError("metric report needs at least one sample")
    emp = empirical_distribution(masks, reference.num_modes, reference.restricted_to)
    s_val = similarity(emp, reference)
    d_val = tvd(emp, reference)
    rng = derive_rng(seed, 100)
    s_boot = np.empty(bootstrap_resamples)
    d_boot = np.empty(bootstrap_resamples)
    for i in range(bootstrap_resamples):
        resampled = rng.choice(masks, size=masks.size, replace=True)
        boot = empirical_distribution(resampled, reference.num_modes, reference.restricted_to)
        s_boot[i] = similarity(boot, reference)
        d_boot[i] = tvd(boot, reference)
    return MetricReport(
        similarity=s_val,
        tvd=d_val,
        click_sector=reference.restricted_to,
        sample_count=int(masks.size),
        similarity_stderr=float(s_boot.std(ddof=1)),
        tvd_stderr=float(d_boot.std(ddof=1)),
    )


def sorted_overlay(
    p_exp: ClickDistribution,
    q_theory: ClickDistribution,
    r_thermal: ClickDistribution,
) -> np.ndarray:
    """Each distribution independently sorted ascending, as aligned columns.

    Only the nonzero sector entries are tabulated; row count equals the
    sector size.  Sorting is stable (numpy mergesort).
    """
    _check_comparable(p_exp, q_theory)
    _check_comparable(p_exp, r_thermal)
    if p_exp.restricted_to is not None:
        from .sampling import _popcounts

        keep = _popcounts(p_exp.probs.size) == p_exp.restricted_to
    else:
        keep = np.ones(p_exp.probs.size, dtype=bool)
    cols = [
        np.sort(dist.probs[keep], kind="mergesort")
        for dist in (p_exp, q_theory, r_thermal)
    ]
    return np.column_stack(cols)


def write_sorted_overlay_csv(fh, table: np.ndarray) -> None:
    fh.write("rank,experimental,theoretical,thermal\n")
    for i, row in enumerate(table):
        fh.write(f"{i + 1},{float(row[0])!r},{float(row[1])!r},{float(row[2])!r}\n")


@dataclass
class LrtTrace:
    """Running likelihood-ratio counter over a sample stream.

    Steps are +1 when the first distribution explains the sample strictly
    better, -1 when the second does, 0 on exact ties.  A final counter
    above zero rejects the hypothesis distribution.
    """

    hypothesis: str
    counters: np.ndarray

    def __post_init__(self):
        counters = np.asarray(self.counters, dtype=np.int64)
        steps = np.diff(np.concatenate([[0], counters]))
        if np.any(np.abs(steps) > 1):
            raise ValueError("likelihood-ratio counter must move in unit steps")
        self.counters = counters

    @property
    def final(self) -> int:
        return int(self.counters[-1]) if self.counters.size else 0

    @property
    def verdict(self) -> str:
        return "reject hypothesis" if self.final > 0 else "consistent with hypothesis"

    def to_csv(self) -> str:
        lines = ["sample_index,counter"]
        for i, c in enumerate(self.counters):
            lines.append(f"{i + 1},{int(c)}")
        return "\n".join(lines) + "\n"


def likelihood_ratio_test(
    samples: list[ClickPattern] | np.ndarray,
    p_gbs: ClickDistribution,
    p_hyp: ClickDistribution,
    hypothesis: str = "hypothesis",
) -> LrtTrace:
    """Per-sample sign counter between two candidate distributions.

    Zero handling: if the hypothesis assigns zero and the first distribution
    does not, the step is +1 (and symmetrically -1); a sample outside both
    supports is an input error.
    """
    _check_comparable(p_gbs, p_hyp)
    masks = np.asarray(
        [p.mask if isinstance(p, ClickPattern) else int(p) for p in samples], dtype=np.int64
    )
    pg = p_gbs.probs[masks]
    ph = p_hyp.probs[masks]
    outside = (pg == 0.0) & (ph == 0.0)
    if np.any(outside):
        bad = ClickPattern(p_gbs.num_modes, int(masks[np.argmax(outside)]))
        raise ValueError(f"sample {bad.bitstring()} lies outside both supports")
    steps = np.sign(pg - ph).astype(np.int64)
    return LrtTrace(hypothesis, np.cumsum(steps))


def expected_lrt_drift(p_gbs: ClickDistribution, p_hyp: ClickDistribution) -> float:
    """Exact per-sample drift ``sum_s p_gbs(s) sign(p_gbs(s) - p_hyp(s))``."""
    _check_comparable(p_gbs, p_hyp)
    return float(np.sum(p_gbs.probs * np.sign(p_gbs.probs - p_hyp.probs)))

"""Experiment pipelines: build states from configs and run the four verbs.

Every verb writes plot-ready data files plus a ``manifest.json`` recording
the resolved configuration, its hash, the effective seed and the package
version; re-running a manifest reproduces byte-identical outputs.

Randomness discipline: every stream derives from the config seed through
:func:`gbslab.sampling.derive_rng` with a fixed per-purpose tag, so runs
are reproducible and independent streams never collide.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .errors import ConfigError
from .gaussian import (
    EfficiencySpec,
    GaussianState,
    Interferometer,
    SqueezerSpec,
    apply_interferometer,
    apply_loss,
    apply_single_mode_squeezer,
    apply_two_mode_squeezer,
    thermalize,
    vacuum,
)
from .maxhaf import (
    SearchCurve,
    WeightedGraph,
    brute_force_max_haf,
    encode_graph,
    load_graph_file,
    random_search,
)
from .sampling import (
    ClickDistribution,
    ClickPattern,
    chain_rule_sample_masks,
    derive_rng,
    distinguishable_distribution,
    exact_distribution,
    empirical_distribution,
    uniform_distribution,
    write_distribution_csv,
    write_sample_stream,
)
from .validation import (
    likelihood_ratio_test,
    metric_report,
    sorted_overlay,
    write_sorted_overlay_csv,
)

# reference cost figures for the 12-mode threshold sampling task, used for
# side-by-side comparison in the cost report (no equality is asserted)
REFERENCE_COSTS = {
    3: {"multiplications": 7400.0, "additions": 6900.0, "rate_khz": 832.0},
    4: {"multiplications": 9800.0, "additions": 9000.0, "rate_khz": 163.0},
    5: {"multiplications": 13000.0, "additions": 11900.0, "rate_khz": 23.0},
}

# derive_rng stream tags used by the pipelines
STREAM_DISTRIBUTION = 10
STREAM_VALIDATION_GBS = 11
STREAM_VALIDATION_HYP = 12
STREAM_COST = 13
STREAM_METRIC_BOOTSTRAP = 14


def input_state(config: ExperimentConfig) -> GaussianState:
    st = vacuum(config.modes)
    for spec in config.squeezers:
        if isinstance(spec, SqueezerSpec):
            st = apply_two_mode_squeezer(st, spec)
        else:
            st = apply_single_mode_squeezer(st, spec)
    return st


def build_gbs_state(config: ExperimentConfig, itf: Interferometer | None = None) -> GaussianState:
    """Squeezers, then the interferometer, then per-mode loss."""
    itf = itf or config.resolve_interferometer()
    st = apply_interferometer(input_state(config), itf)
    return apply_loss(st, EfficiencySpec(np.array(config.efficiency)))


def build_thermal_state(config: ExperimentConfig, itf: Interferometer | None = None) -> GaussianState:
    """Same pipeline with the squeezed input replaced by thermal modes."""
    itf = itf or config.resolve_interferometer()
    st = apply_interferometer(thermalize(config.modes, list(config.squeezers)), itf)
    return apply_loss(st, EfficiencySpec(np.array(config.efficiency)))


def input_mean_photons(config: ExperimentConfig) -> np.ndarray:
    """Per-input-mode mean photon numbers implied by the squeezer list."""
    means = np.zeros(config.modes)
    for spec in config.squeezers:
        for mode in spec.modes:
            means[mode] += math.sinh(spec.r) ** 2
    return means


def gbs_distribution(config: ExperimentConfig, itf: Interferometer | None = None) -> ClickDistribution:
    return exact_distribution(build_gbs_state(config, itf))


def thermal_distribution(config: ExperimentConfig, itf: Interferometer | None = None) -> ClickDistribution:
    return exact_distribution(build_thermal_state(config, itf))


def distinguishable_hypothesis_distribution(
    config: ExperimentConfig, itf: Interferometer | None = None
) -> ClickDistribution:
    itf = itf or config.resolve_interferometer()
    return distinguishable_distribution(
        itf, input_mean_photons(config), EfficiencySpec(np.array(config.efficiency))
    )


def gbs_sample_masks(config: ExperimentConfig, n_samples: int, seed: int | None = None) -> np.ndarray:
    """Chain-rule samples of the configured experiment."""
    return chain_rule_sample_masks(
        build_gbs_state(config), n_samples, derive_rng(seed if seed is not None else config.seed, 0)
    )


def thermal_sample_masks(config: ExperimentConfig, n_samples: int, seed: int | None = None) -> np.ndarray:
    """Chain-rule samples of the thermal stand-in; same kernels, same pipeline."""
    return chain_rule_sample_masks(
        build_thermal_state(config),
        n_samples,
        derive_rng(seed if seed is not None else config.seed, 1),
    )


def distinguishable_sample_masks_for(
    config: ExperimentConfig, n_samples: int, seed: int | None = None
) -> np.ndarray:
    """Direct simulation of the distinguishable-photon hypothesis."""
    from .sampling import distinguishable_sample_masks

    return distinguishable_sample_masks(
        config.resolve_interferometer(),
        input_mean_photons(config),
        EfficiencySpec(np.array(config.efficiency)),
        n_samples,
        derive_rng(seed if seed is not None else config.seed, 2),
    )


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _write_manifest(out_dir: Path, verb: str, config: ExperimentConfig, outputs: list[str]) -> None:
    manifest = {
        "verb": verb,
        "version": __version__,
        "seed": config.seed,
        "config_hash": config.config_hash(),
        "config": config.canonical_dict(),
        "outputs": sorted(outputs),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="ascii")


def _prepare_out(out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(config: ExperimentConfig, *, sector: bool = False, samples: bool = False) -> None:
    problems = []
    if sector and config.sector is None:
        problems.append("this run needs a 'sector' entry")
    if samples and config.samples < 1:
        problems.append("this run needs a positive 'samples' budget")
    if problems:
        raise ConfigError("invalid configuration:\n  - " + "\n  - ".join(problems))


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------

def run_distribution(config: ExperimentConfig, out_dir) -> Path:
    """Exact vs sampled distribution in one click sector, with metrics.

    Writes the sector-restricted theoretical distribution, the empirical
    distribution of chain-rule samples, a metric report (text + CSV), the
    sampled stream, and the ascending sorted overlay against the thermal
    stand-in.
    """
    _require(config, sector=True, samples=True)
    out = _prepare_out(out_dir)
    itf = config.resolve_interferometer()
    state = build_gbs_state(config, itf)
    full = exact_distribution(state)
    sector = config.sector
    theory = full.restrict(sector)

    masks = chain_rule_sample_masks(
        state, config.samples, derive_rng(config.seed, STREAM_DISTRIBUTION)
    )
    kept = masks[np.array([bin(int(x)).count("1") for x in masks]) == sector]
    if kept.size == 0:
        raise ConfigError(
            f"no samples landed in the {sector}-click sector; raise 'samples'"
        )
    empirical = empirical_distribution(kept, config.modes, restricted_to=sector)
    report = metric_report(kept, theory, seed=config.seed)

    thermal = thermal_distribution(config, itf).restrict(sector)
    overlay = sorted_overlay(empirical, theory, thermal)

    outputs = []
    with open(out / "theoretical_distribution.csv", "w", encoding="ascii") as fh:
        write_distribution_csv(fh, theory)
    outputs.append("theoretical_distribution.csv")
    with open(out / "empirical_distribution.csv", "w", encoding="ascii") as fh:
        write_distribution_csv(fh, empirical)
    outputs.append("empirical_distribution.csv")
    with open(out / "samples.txt", "w", encoding="ascii") as fh:
        write_sample_stream(fh, (ClickPattern(config.modes, int(x)) for x in kept))
    outputs.append("samples.txt")
    (out / "metric_report.txt").write_text(report.to_text(), encoding="ascii")
    outputs.append("metric_report.txt")
    (out / "metric_report.csv").write_text(report.to_csv(), encoding="ascii")
    outputs.append("metric_report.csv")
    with open(out / "sorted_overlay.csv", "w", encoding="ascii") as fh:
        write_sorted_overlay_csv(fh, overlay)
    outputs.append("sorted_overlay.csv")
    _write_manifest(out, "distribution", config, outputs)
    return out


def run_validation(config: ExperimentConfig, out_dir) -> Path:
    """Likelihood-ratio counters against the three classical hypotheses.

    Samples are drawn from the sector-restricted exact distributions
    (categorical draws), which the chain-rule sampler provably reproduces;
    each hypothesis gets a forward trace (scored on sampling-model samples),
    a reverse trace (scored on hypothesis samples) and the matched-model
    control trace.
    """
    _require(config, sector=True, samples=True)
    out = _prepare_out(out_dir)
    itf = config.resolve_interferometer()
    sector = config.sector
    n = config.samples

    gbs = gbs_distribution(config, itf).restrict(sector)
    hypotheses = {
        "thermal": thermal_distribution(config, itf).restrict(sector),
        "distinguishable": distinguishable_hypothesis_distribution(config, itf).restrict(sector),
        "uniform": uniform_distribution(config.modes, sector),
    }
    gbs_masks = gbs.sample_masks(derive_rng(config.seed, STREAM_VALIDATION_GBS), n)

    outputs = []
    summary = []
    for i, (name, hyp) in enumerate(hypotheses.items()):
        forward = likelihood_ratio_test(gbs_masks, gbs, hyp, hypothesis=name)
        rev_masks = hyp.sample_masks(derive_rng(config.seed, STREAM_VALIDATION_HYP, i), n)
        reverse = likelihood_ratio_test(rev_masks, gbs, hyp, hypothesis=f"{name} (reverse)")
        for tag, trace in (("", forward), ("_reverse", reverse)):
            fname = f"lrt_{name}{tag}.csv"
            (out / fname).write_text(trace.to_csv(), encoding="ascii")
            outputs.append(fname)
        summary.append(f"{name}_final_counter: {forward.final}")
        summary.append(f"{name}_verdict: {forward.verdict}")
        summary.append(f"{name}_reverse_final_counter: {reverse.final}")
    control = likelihood_ratio_test(gbs_masks, gbs, gbs, hypothesis="control")
    (out / "lrt_control.csv").write_text(control.to_csv(), encoding="ascii")
    outputs.append("lrt_control.csv")
    summary.append(f"control_final_counter: {control.final}")
    summary.append(f"sector: {sector}")
    summary.append(f"samples: {n}")
    (out / "summary.txt").write_text("\n".join(summary) + "\n", encoding="ascii")
    outputs.append("summary.txt")
    _write_manifest(out, "validate", config, outputs)
    return out


def run_maxhaf(config: ExperimentConfig, graph: WeightedGraph | str, out_dir) -> Path:
    """Sampling-driven max-|hafnian| search curves for three samplers.

    The sample streams are post-selected k-click events (sector-conditioned
    draws), matching how hardware runs are consumed; the uniform stream
    proposes uniform k-subsets directly.
    """
    if config.maxhaf is None:
        raise ConfigError("invalid configuration:\n  - the maxhaf verb needs a 'maxhaf' section")
    out = _prepare_out(out_dir)
    if not isinstance(graph, WeightedGraph):
        graph = load_graph_file(graph)
    settings = config.maxhaf
    k = settings.subgraph_size
    if k > graph.num_vertices:
        raise ConfigError(
            f"invalid configuration:\n  - subgraph_size {k} exceeds the "
            f"{graph.num_vertices}-vertex graph"
        )
    target = max(config.modes, graph.num_vertices) if config.modes else graph.num_vertices
    encoding = encode_graph(graph, target_modes=target, tanh_cap=settings.tanh_cap)

    best_subset, optimum = brute_force_max_haf(graph, k)
    gbs_sector = exact_distribution(encoding.state()).restrict(k)
    thermal_sector = exact_distribution(encoding.thermal_state()).restrict(k)
    uniform_sector = uniform_distribution(encoding.num_modes, k)

    outputs = []
    curves: dict[str, SearchCurve] = {}
    for i, (label, dist) in enumerate(
        [("gbs", gbs_sector), ("thermal", thermal_sector), ("uniform", uniform_sector)]
    ):
        curve = random_search(
            lambda rng, count, d=dist: d.sample_masks(rng, count),
            graph,
            k,
            list(settings.budgets),
            trials=settings.trials,
            seed=config.seed + i,
            label=label,
            optimum=optimum,
        )
        curves[label] = curve
        fname = f"search_{label}.csv"
        (out / fname).write_text(curve.to_csv(), encoding="ascii")
        outputs.append(fname)

    record = [
        f"subgraph_size: {k}",
        f"optimal_subset: {tuple(v + 1 for v in best_subset)}",
        f"optimal_abs_hafnian: {optimum!r}",
        f"encoding_scale: {encoding.scale!r}",
        f"encoded_mean_photons: {encoding.mean_photons!r}",
        f"trials: {settings.trials}",
    ]
    (out / "optimum.txt").write_text("\n".join(record) + "\n", encoding="ascii")
    outputs.append("optimum.txt")
    _write_manifest(out, "maxhaf", config, outputs)
    return out


def cost_statistics(config: ExperimentConfig) -> dict:
    """Instrumented per-sample operation counts, grouped by click number."""
    _require(config, samples=True)
    state = build_gbs_state(config)
    masks, ops = chain_rule_sample_masks(
        state,
        config.samples,
        derive_rng(config.seed, STREAM_COST),
        return_ops=True,
    )
    clicks = np.array([bin(int(x)).count("1") for x in masks])
    stats: dict[int, dict] = {}
    for n in sorted(set(clicks.tolist())):
        sel = clicks == n
        stats[int(n)] = {
            "samples": int(sel.sum()),
            "mean_multiplications": float(ops[sel, 0].mean()),
            "mean_additions": float(ops[sel, 1].mean()),
        }
    return stats


def fit_log2_slope(stats: dict, ns: tuple[int, ...] = (3, 4, 5)) -> float:
    """Least-squares slope of ``log2(mean multiplications)`` against n."""
    missing = [n for n in ns if n not in stats or stats[n]["samples"] == 0]
    if missing:
        raise ValueError(f"no samples observed with click numbers {missing}")
    ys = [math.log2(stats[n]["mean_multiplications"]) for n in ns]
    return float(np.polyfit(ns, ys, 1)[0])


def run_cost_report(config: ExperimentConfig, out_dir) -> Path:
    """Arithmetic cost of sampling, next to the reference experiment figures.

    Reports mean multiplications/additions per n-click sample for
    n = 3, 4, 5 and the fitted exponential growth rate; the reference
    hardware-equivalence values are printed for comparison only, since the
    exact counting perimeter behind them is not published.
    """
    _require(config, samples=True)
    out = _prepare_out(out_dir)
    stats = cost_statistics(config)
    lines = []
    csv_lines = [
        "clicks,samples,mean_multiplications,mean_additions,"
        "reference_multiplications,reference_additions"
    ]
    my_rate_sum = 0.0
    ref_rate_sum_mul = 0.0
    ref_rate_sum_add = 0.0
    for n in (3, 4, 5):
        entry = stats.get(n)
        ref = REFERENCE_COSTS[n]
        if entry is None or entry["samples"] == 0:
            lines.append(f"clicks_{n}: no samples observed")
            csv_lines.append(f"{n},0,,,{ref['multiplications']!r},{ref['additions']!r}")
            continue
        lines.append(
            f"clicks_{n}: samples={entry['samples']} "
            f"mean_multiplications={entry['mean_multiplications']!r} "
            f"mean_additions={entry['mean_additions']!r} "
            f"reference_multiplications={ref['multiplications']!r} "
            f"reference_additions={ref['additions']!r}"
        )
        csv_lines.append(
            f"{n},{entry['samples']},{entry['mean_multiplications']!r},"
            f"{entry['mean_additions']!r},{ref['multiplications']!r},{ref['additions']!r}"
        )
        my_rate_sum += ref["rate_khz"] * 1e3 * entry["mean_multiplications"]
        ref_rate_sum_mul += ref["rate_khz"] * 1e3 * ref["multiplications"]
        ref_rate_sum_add += ref["rate_khz"] * 1e3 * ref["additions"]
    try:
        slope = fit_log2_slope(stats)
        lines.append(f"log2_slope_n3_to_n5: {slope!r}")
    except ValueError as exc:
        lines.append(f"log2_slope_n3_to_n5: unavailable ({exc})")
    lines.append(
        "reference_equivalent_rates_ghz: "
        f"multiplications={ref_rate_sum_mul / 1e9:.1f} additions={ref_rate_sum_add / 1e9:.1f}"
    )
    lines.append(
        f"this_sampler_equivalent_multiplication_rate_ghz: {my_rate_sum / 1e9:.2f}"
    )
    lines.append(f"samples: {config.samples}")
    (out / "cost_report.txt").write_text("\n".join(lines) + "\n", encoding="ascii")
    (out / "cost_report.csv").write_text("\n".join(csv_lines) + "\n", encoding="ascii")
    _write_manifest(out, "cost", config, ["cost_report.txt", "cost_report.csv"])
    return out

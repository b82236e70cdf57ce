"""Named experiments and their on-disk artifacts.

Every experiment writes into one output directory: CSV tables with a
fixed header row, a metadata.json sidecar (config echo, seed, package
version), any images, and finally a DONE sentinel. A directory whose
sentinel is missing holds an incomplete run. Reruns refuse to touch a
non-empty directory unless forced.

Replicate k of a multi-seed experiment uses integer seed (config seed
+ k); all randomness inside a replicate derives from that seed via
RandomStream splitting.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .eeladder import (
    MOVE_NAMES,
    empirical_jump_chain_matrix,
    idealized_jump_matrix,
    ledger_from_iid,
    run_ladder,
)
from .errors import ConfigError
from .kernels import (
    IndependenceKernel,
    MixtureKernel,
    RandomWalkKernel,
    reversibility_gap,
    stationary_distribution,
    stationary_gap,
)
from .netpbm import read_pgm, write_label_pgm, write_overlay_ppm
from .rng import RandomStream
from .spectral import Partition, coarsen, eigen_spectrum, mis_gap_report, ratio_extremes, tv_distance
from .statespace import enumerate_distribution
from .swcut import (
    GibbsSiteSampler,
    SwCutSampler,
    agreement,
    edge_affinity,
    initial_labeling,
    make_two_region_image,
    segment,
)

DONE_SENTINEL = "DONE"


# ---------------------------------------------------------------------------
# Artifact writing
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    """UTF-8, LF line endings, repr-formatted floats (bit-deterministic)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            if len(row) != len(header):
                raise ConfigError(
                    f"row width {len(row)} does not match header {len(header)}"
                )
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def prepare_out_dir(out: Path, force: bool) -> None:
    if out.exists() and any(out.iterdir()):
        if not force:
            raise ConfigError(
                f"output directory {out} is not empty; pass --force to overwrite"
            )
        sentinel = out / DONE_SENTINEL
        if sentinel.exists():
            sentinel.unlink()  # invalidate the old run before rewriting
    out.mkdir(parents=True, exist_ok=True)


def finish(out: Path, config: ExperimentConfig) -> None:
    write_json(out / "metadata.json", {
        "version": __version__,
        "experiment": config.experiment,
        "seed": config.seed,
        "config": config.to_dict(),
    })
    with open(out / DONE_SENTINEL, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("done\n")


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------


def _tv_curve(traceset, level, n_states, pi, checkpoints):
    """(step, tv) pairs at evenly spaced checkpoints over the trace."""
    tr = traceset.levels[level]
    n = len(tr)
    out = []
    for k in range(1, checkpoints + 1):
        upto = max(1, (n * k) // checkpoints)
        counts = traceset.empirical_counts(level, n_states, upto)
        total = counts.sum()
        if total == 0:
            out.append((upto, 1.0))
            continue
        out.append((upto, tv_distance(counts / total, pi.probs)))
    return out


def _mode_targets(model):
    """Start state (left-mode bottom) and target set (right-mode basin floor)
    of a two-mode 1-D model."""
    h = model.energies()
    n = len(h)
    if n < 4:
        raise ConfigError("mode-escape experiments need a model with >= 4 states")
    lo, hi = n // 4, max(n // 4 + 1, 3 * n // 4)
    barrier = int(np.argmax(h[lo:hi])) + lo
    left = int(np.argmin(h[:barrier])) if barrier > 0 else 0
    right = barrier + int(np.argmin(h[barrier:]))
    floor = h[right] + 0.25
    target = {s for s in range(barrier, n) if h[s] <= floor}
    return left, target


def _first_passage(states, target):
    for t, s in enumerate(states):
        if s in target:
            return t
    return -1


def _ladder_runs(config, model, variations, out: Path):
    """Run the ladder over (label, overrides) variations x replicates and
    write TV curves, first-passage steps, and a summary."""
    pi = enumerate_distribution(model, config.ladder.levels()[0])
    init, target = _mode_targets(model)
    curve_rows, passage_rows = [], []
    summary = {}
    for label, base_overrides in variations:
        overrides = dict(base_overrides)
        if config.ladder.init_state is None:
            overrides["init_state"] = init
        ladder = config.ladder.build(**overrides)
        final_tvs, passages, fallback_shares = [], [], []
        for k in range(config.replicates):
            seed = config.seed + k
            ts = run_ladder(model, ladder, seed)
            curve = _tv_curve(ts, 0, model.size, pi, config.tv_checkpoints)
            curve_rows.extend((label, seed, s, tv) for s, tv in curve)
            fp = _first_passage(ts.levels[0].states.tolist(), target)
            passage_rows.append((label, seed, fp))
            final_tvs.append(curve[-1][1])
            moves = ts.levels[0].move_types
            fallback_shares.append(float((moves == 2).mean()))
            if fp >= 0:
                passages.append(fp)
        summary[label] = {
            "median_final_tv": float(np.median(final_tvs)),
            "median_first_passage": (float(np.median(passages)) if passages
                                     else None),
            "reached_second_mode": len(passages),
            "mean_fallback_share": float(np.mean(fallback_shares)),
        }
    write_csv(out / "tv_curves.csv", ["variant", "seed", "step", "tv"], curve_rows)
    write_csv(out / "first_passage.csv",
              ["variant", "seed", "first_passage_step"], passage_rows)
    write_json(out / "summary.json", summary)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def exp_run(config: ExperimentConfig, out: Path) -> None:
    """Single ladder run with the full trace exported."""
    model = config.build_model()
    ts = run_ladder(model, config.ladder.build(), config.seed)
    rows = []
    for tr in ts.levels:
        for t in range(len(tr)):
            rows.append((
                int(tr.steps[t]), tr.level, int(tr.states[t]),
                float(tr.energies[t]), int(tr.rings[t]),
                MOVE_NAMES[int(tr.move_types[t])], int(tr.accepted[t]),
            ))
    write_csv(out / "trace.csv",
              ["step", "level", "state_id", "energy", "ring", "move_type",
               "accepted"], rows)
    pi = enumerate_distribution(model, config.ladder.levels()[0])
    counts = ts.empirical_counts(0, model.size)
    tv = (tv_distance(counts / counts.sum(), pi.probs)
          if counts.sum() > 0 else None)
    summary = {
        "tv_level0": tv,
        "acceptance_rate": {
            str(tr.level): (float(tr.accepted.mean()) if len(tr) else None)
            for tr in ts.levels
        },
        "ledger_totals": [led.total for led in ts.ledgers],
    }
    write_json(out / "summary.json", summary)


def exp_q1(config: ExperimentConfig, out: Path) -> None:
    """Restricted vs unrestricted jumps on a deep two-mode target."""
    model = config.build_model()
    _ladder_runs(config, model,
                 [("restricted", {"jump_mode": "restricted"}),
                  ("unrestricted", {"jump_mode": "unrestricted"})], out)


def exp_q2(config: ExperimentConfig, out: Path) -> None:
    """Parallel vs serial ladder schedules, same target and budget."""
    model = config.build_model()
    _ladder_runs(config, model,
                 [("parallel", {"schedule": "parallel"}),
                  ("serial", {"schedule": "serial"})], out)


def exp_q3(config: ExperimentConfig, out: Path) -> None:
    """Ledger-size bias sweep against the exact ring-truncated kernel."""
    model = config.build_model()
    levels = config.ladder.levels()
    if len(levels) < 2:
        raise ConfigError("q3 needs a ladder with at least 2 levels")
    boundaries = config.ladder.build().boundaries()
    pi = enumerate_distribution(model, levels[0])
    p_jump = float(config.q3["p_jump"])

    K_ideal = idealized_jump_matrix(model, levels[0], levels[1], boundaries)
    K_local = RandomWalkKernel(model, levels[0]).exact_matrix()
    K_ideal_chain = p_jump * K_ideal + (1.0 - p_jump) * K_local
    ideal = {
        "stationary_gap": stationary_gap(K_ideal, pi.probs),
        "reversibility_gap": reversibility_gap(K_ideal, pi.probs),
        "chain_tv": tv_distance(stationary_distribution(K_ideal_chain), pi.probs),
    }

    rows = []
    medians = {}
    for size in config.q3["ledger_sizes"]:
        tvs = []
        for k in range(config.replicates):
            seed = config.seed + k
            rng = RandomStream.from_seed(seed)
            ledger = ledger_from_iid(model, levels[1], boundaries, size, rng)
            K = empirical_jump_chain_matrix(
                model, levels[0], levels[1], ledger, p_jump
            )
            tv = tv_distance(stationary_distribution(K), pi.probs)
            rows.append((size, seed, tv))
            tvs.append(tv)
        medians[str(size)] = float(np.median(tvs))
    write_csv(out / "ledger_bias.csv", ["ledger_size", "seed", "tv"], rows)
    write_json(out / "summary.json",
               {"idealized_kernel": ideal, "median_tv_by_ledger_size": medians,
                "p_jump": p_jump})


def _report_row(name, rep):
    return (name, rep.lambda2, rep.gap,
            rep.ratio_min_pi_over_q if rep.ratio_min_pi_over_q is not None else "",
            rep.ratio_max_pi_over_q if rep.ratio_max_pi_over_q is not None else "",
            rep.bound_printed if rep.bound_printed is not None else "",
            rep.bound_alternate if rep.bound_alternate is not None else "",
            rep.matched_bound if rep.matched_bound is not None else "")


def _spectral_reports(config: ExperimentConfig):
    model = config.build_model()
    levels = config.ladder.levels()
    if len(levels) < 2:
        raise ConfigError("spectral experiments need at least 2 ladder levels")
    pi = enumerate_distribution(model, levels[0])
    q = enumerate_distribution(model, levels[1])
    alpha = float(config.q4["alpha"])

    local = RandomWalkKernel(model, levels[0])
    jump = IndependenceKernel(pi, q)
    mix = MixtureKernel(alpha, local, jump)

    reports = {
        "local": eigen_spectrum(local.exact_matrix(), pi),
        "mis": mis_gap_report(pi, q),
        "mixture": eigen_spectrum(mix.exact_matrix(), pi),
    }
    return model, pi, q, alpha, reports


def exp_spectral(config: ExperimentConfig, out: Path) -> None:
    """Spectral reports for the local, independence, and mixture kernels."""
    _, _, _, alpha, reports = _spectral_reports(config)
    write_json(out / "spectral.json",
               {name: rep.to_dict() for name, rep in reports.items()})
    write_csv(out / "spectral.csv",
              ["kernel", "lambda2", "gap", "ratio_min", "ratio_max",
               "bound_printed", "bound_alternate", "matched_bound"],
              [_report_row(name, rep) for name, rep in reports.items()])


def exp_q4(config: ExperimentConfig, out: Path) -> None:
    """Gap bounds and ratio extremes on the fine and coarsened spaces.

    The summary records which closed-form bound the exact second
    eigenvalue matches; the two candidates generally differ and only one
    of them is exact.
    """
    model, pi, q, alpha, reports = _spectral_reports(config)
    n = model.size
    m = min(int(config.q4["coarse_cells"]), n)
    part = Partition((np.arange(n) * m) // n)
    pi_c, q_c = coarsen(pi, part), coarsen(q, part)

    # coarse-space kernels: local walk over the coarse cells, independence
    # jumps from the coarsened proposal, and their mixture
    from .statespace import builtin_model

    coarse_model = builtin_model("energy_table",
                                 energies=(-np.log(pi_c.probs)).tolist())
    coarse_local = RandomWalkKernel(coarse_model)
    coarse_jump = IndependenceKernel(pi_c, q_c)
    coarse_mix = MixtureKernel(alpha, coarse_local, coarse_jump)
    reports["coarse_local"] = eigen_spectrum(coarse_local.exact_matrix(), pi_c)
    reports["coarse_mis"] = mis_gap_report(pi_c, q_c)
    reports["coarse_mixture"] = eigen_spectrum(coarse_mix.exact_matrix(), pi_c)

    fine_lo, fine_hi = ratio_extremes(pi, q)
    coarse_lo, coarse_hi = ratio_extremes(pi_c, q_c)

    write_json(out / "spectral_reports.json",
               {name: rep.to_dict() for name, rep in reports.items()})
    write_csv(out / "q4_summary.csv",
              ["kernel", "lambda2", "gap", "ratio_min", "ratio_max",
               "bound_printed", "bound_alternate", "matched_bound"],
              [_report_row(name, rep) for name, rep in reports.items()])
    write_json(out / "summary.json", {
        "alpha": alpha,
        "gap_local": reports["local"].gap,
        "gap_mis": reports["mis"].gap,
        "gap_mixture": reports["mixture"].gap,
        "mixture_beats_local": reports["mixture"].gap > reports["local"].gap,
        "fine_ratio_extremes": [fine_lo, fine_hi],
        "coarse_ratio_extremes": [coarse_lo, coarse_hi],
        "coarse_cells": m,
        "mis_matched_bound": reports["mis"].matched_bound,
        "printed_bound_matches_lambda2":
            reports["mis"].matched_bound in ("printed", "both"),
        "alternate_bound_matches_lambda2":
            reports["mis"].matched_bound in ("alternate", "both"),
    })


def _build_image(config: ExperimentConfig):
    img_cfg = config.segmentation.image
    if img_cfg.kind == "pgm":
        return read_pgm(img_cfg.path), None
    image, truth = make_two_region_image(
        img_cfg.width, img_cfg.height,
        means=tuple(img_cfg.means[:2]),
        noise_sd=img_cfg.noise_sd,
        seed=img_cfg.image_seed,
        layout=img_cfg.layout,
    )
    return image, truth


def exp_segment(config: ExperimentConfig, out: Path) -> None:
    """One segmentation run: label map, boundary overlay, energy trace."""
    seg = config.segmentation
    image, truth = _build_image(config)
    aff = edge_affinity(image, p_max=seg.p_max, p_min=seg.p_min, scale=seg.scale)
    final, trace = segment(
        image,
        n_labels=seg.n_labels,
        beta=seg.beta,
        region_cfg=seg.region_config(),
        affinity=aff,
        sampler=seg.sampler,
        sweeps=seg.sweeps,
        init=seg.init,
        cluster_pick=seg.cluster_pick,
        seed=config.seed,
    )
    write_label_pgm(out / "labels.pgm", final)
    write_overlay_ppm(out / "overlay.ppm", image, final)
    write_csv(out / "trace.csv", ["step", "log_posterior"],
              [(t, float(v)) for t, v in enumerate(trace.logposts)])
    summary = {"sampler": seg.sampler, "sweeps": seg.sweeps,
               "final_log_posterior":
                   float(trace.logposts[-1]) if len(trace.logposts) else None}
    if truth is not None:
        summary["ground_truth_agreement"] = agreement(final, truth)
    write_json(out / "summary.json", summary)


def _sweeps_to_agreement(sampler, image, truth, n_labels, rng, max_sweeps,
                         target, check_every):
    """Fractional sweeps until ground-truth agreement reaches the target."""
    lab = initial_labeling(image, n_labels, "random", rng).flat.copy()
    tf = truth.flat
    n = image.n_pixels
    for t in range(max_sweeps * n):
        sampler.step(lab, rng)
        if (t + 1) % check_every == 0:
            direct = float((lab == tf).mean())
            swapped = float((lab == 3 - tf).mean()) if n_labels == 2 else 0.0
            if max(direct, swapped) >= target:
                return (t + 1) / n
    return math.inf


def exp_swcut_vs_gibbs(config: ExperimentConfig, out: Path) -> None:
    """Sweeps-to-agreement distributions for cluster vs single-site moves."""
    seg = config.segmentation
    image, truth = _build_image(config)
    if truth is None:
        raise ConfigError("swcut_vs_gibbs needs a synthetic two_region image")
    aff = edge_affinity(image, p_max=seg.p_max, p_min=seg.p_min, scale=seg.scale)
    cfg = seg.region_config()
    max_sweeps = int(config.mixing["max_sweeps"])
    target = float(config.mixing["target_agreement"])
    check_every = int(config.mixing["check_every"])

    rows = []
    results = {"swcut": [], "gibbs": []}
    for k in range(config.replicates):
        seed = config.seed + k
        for name in ("swcut", "gibbs"):
            if name == "swcut":
                sampler = SwCutSampler(image, seg.n_labels, seg.beta, cfg, aff,
                                       seg.cluster_pick)
            else:
                sampler = GibbsSiteSampler(image, seg.n_labels, seg.beta, cfg)
            rng = RandomStream.from_seed(seed)
            sweeps = _sweeps_to_agreement(sampler, image, truth, seg.n_labels,
                                          rng, max_sweeps, target, check_every)
            rows.append((name, seed, sweeps))
            results[name].append(sweeps)
    write_csv(out / "mixing.csv", ["sampler", "seed", "sweeps_to_target"], rows)

    med_sw = float(np.median(results["swcut"]))
    med_gb = float(np.median(results["gibbs"]))
    write_json(out / "summary.json", {
        "median_sweeps_swcut": med_sw,
        "median_sweeps_gibbs": med_gb,
        "speedup_ratio": (med_gb / med_sw if med_sw > 0 else None),
        "target_agreement": target,
        "replicates": config.replicates,
    })


_EXPERIMENTS = {
    "run": exp_run,
    "spectral": exp_spectral,
    "segment": exp_segment,
    "q1": exp_q1,
    "q2": exp_q2,
    "q3": exp_q3,
    "q4": exp_q4,
    "swcut_vs_gibbs": exp_swcut_vs_gibbs,
}


def run_experiment(config: ExperimentConfig, out_dir=None, force: bool = False) -> Path:
    """Run the configured experiment; returns the output directory."""
    out = Path(out_dir if out_dir is not None
               else (config.out if config.out is not None
                     else os.path.join("runs", config.experiment)))
    prepare_out_dir(out, force)
    _EXPERIMENTS[config.experiment](config, out)
    finish(out, config)
    return out

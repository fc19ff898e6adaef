"""Scenario runners.

Each runner is a pure function of the configuration; ``emit_*`` helpers turn
results into CSV files plus a manifest.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from ..classical import ClassicalEnsemble, evolve_classical_ensemble, find_period1_fixed_point, poincare_portrait, seed_lattice
from ..core.histogram import MomentumHistogram, classical_histogram, uniform_edges
from ..core.params import PhasePoint
from ..core.series import StroboscopicSeries
from ..moyal import ModifiedResonance, evolve_modified_ensemble, find_modified_resonance, veff_factor, EffectiveContext
from ..parallel import pmap
from ..qmc import ensemble_distribution, packet_lattice
from ..quantum import resonance_start, tunneling_series
from .config import ExperimentConfig
from .output import write_csv, write_manifest
from .peaks import PeakSet, find_peaks, side_peak

log = logging.getLogger(__name__)

#: classical histograms tolerate a few escaped particles out of 10^5
MAX_OUTSIDE = 1e-3


def _guess(cfg: ExperimentConfig) -> PhasePoint:
    return PhasePoint(cfg.packet.guess_q, cfg.packet.guess_p)


# -- portraits -----------------------------------------------------------------


def run_portraits(cfg: ExperimentConfig) -> dict:
    """Original portrait and one effective portrait per configured kbar."""
    params = cfg.physics.params()
    pc = cfg.portrait
    seeds = seed_lattice(pc.seeds_q, pc.seeds_p, (pc.p_min, pc.p_max))
    kw = dict(substeps=cfg.classical_substeps, workers=cfg.workers)
    out = {"original": poincare_portrait(seeds, pc.cycles, params, label="original", **kw)}
    for kb in pc.kbars:
        pk = params.with_(kbar=kb)
        try:
            res = find_modified_resonance(_guess(cfg), pk, xi=cfg.packet.resonance_xi, substeps=cfg.classical_substeps)
        except Exception as exc:  # no side resonance (e.g. unmodulated): plain compression
            log.info("no modified resonance at kbar=%s (%s); using a frozen reference at p=0", kb, exc)
            ctx = EffectiveContext(0.0, cfg.packet.resonance_xi, kb)
        else:
            ctx = res.ctx
        label = f"effective_kbar{kb:g}"
        out[label] = poincare_portrait(seeds, pc.cycles, pk, ctx=ctx, label=label, **kw)
    return out


def emit_portraits(portraits: dict, cfg: ExperimentConfig, out_dir) -> list[Path]:
    files = []
    for name, portrait in portraits.items():
        n_seeds, n_pts, _ = portrait.orbits.shape

        def rows(o=portrait.orbits):
            for s in range(n_seeds):
                for c in range(n_pts):
                    q, p = o[s, c]
                    if math.isfinite(q):
                        yield s, c, q, p

        files.append(write_csv(Path(out_dir) / f"portrait_{name}.csv", ["seed_id", "cycle", "q", "p"], rows()))
    diag = {name: {"failed_seeds": int(p.failed.sum())} for name, p in portraits.items()}
    files.append(write_manifest(out_dir, "portrait", cfg, files, diag))
    return files


# -- tunneling and kbar scan ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class TunnelingRun:
    start: str
    kbar: float
    point: PhasePoint
    xi: float
    series: StroboscopicSeries


def run_tunneling(cfg: ExperimentConfig, start: str, kbar: float | None = None, cycles: int | None = None) -> TunnelingRun:
    params = cfg.physics.params()
    if kbar is not None:
        params = params.with_(kbar=kbar)
    point, xi = resonance_start(start, params, cfg.packet.xi, resonance_xi=cfg.packet.resonance_xi, guess=_guess(cfg))
    log.info("start=%s kbar=%s point=(%.10g, %.10g) xi=%.6g", start, params.kbar, point.q, point.p, xi)
    tc = cfg.tunneling
    series = tunneling_series(
        start, tc.cycles if cycles is None else cycles, params, xi=cfg.packet.xi,
        resonance_xi=cfg.packet.resonance_xi, n=cfg.grid.n, wells=cfg.grid.wells,
        steps_per_cycle=tc.steps_per_cycle, validate=tc.validate,
    )
    return TunnelingRun(start, params.kbar, point, xi, series)


def _series_rows(series: StroboscopicSeries):
    return series.rows()


def emit_tunneling(runs, cfg: ExperimentConfig, out_dir, command="tunneling") -> list[Path]:
    files, diag = [], {}
    for run in runs:
        name = f"{command}_{run.start}_kbar{run.kbar:g}"
        files.append(write_csv(Path(out_dir) / f"{name}.csv", ["cycle", "time", "mean_p", "var_p"], _series_rows(run.series)))
        diag[name] = {"q0": run.point.q, "p0": run.point.p, "xi": run.xi}
    files.append(write_manifest(out_dir, command, cfg, files, diag))
    return files


def _scan_one(kb, cfg):
    return run_tunneling(cfg.with_overrides(workers=1), "modified", kbar=kb, cycles=cfg.tunneling.scan_cycles)


def run_kbar_scan(cfg: ExperimentConfig, kbars=None) -> list[TunnelingRun]:
    kbars = list(cfg.tunneling.kbars if kbars is None else kbars)
    if not kbars:
        raise ValueError("kbar list is empty")
    return pmap(partial(_scan_one, cfg=cfg), kbars, cfg.workers)


# -- Fig.-4 style comparison --------------------------------------------------


@dataclass(frozen=True, eq=False)
class Comparison:
    epsilon: float
    histograms: dict
    peaks: dict
    side_peaks: dict
    resonance: ModifiedResonance | None
    n_members: int
    diagnostics: dict

    @property
    def bin_width(self) -> float:
        return self.histograms["quantum"].bin_width


def run_comparison(cfg: ExperimentConfig, epsilon: float | None = None) -> Comparison:
    """Quantum, modified-classical and classical histograms at one snapshot."""
    cc = cfg.comparison
    params = cc.params(epsilon)
    edges = uniform_edges(cc.p_min, cc.p_max, cc.bins)
    spont = cfg.spontaneous.settings()
    seed = cfg.master_seed

    quantum = ensemble_distribution(
        packet_lattice(cc.n_packets, cc.sigma_p, params.kbar), cc.snapshot_cycle, params, spont, seed, edges,
        n=cc.grid_n, wells=cc.grid_wells, steps_per_cycle=cc.steps_per_cycle, t_start=cc.t_start,
        workers=cfg.workers,
    )
    cloud = ClassicalEnsemble.cloud(cc.n_particles, cc.sigma_p, seed)
    ens_kw = dict(master_seed=seed, t_start=cc.t_start, substeps=cc.classical_substeps, workers=cfg.workers)
    classical = evolve_classical_ensemble(cloud, cc.snapshot_cycle, params, spont, **ens_kw)[-1]

    resonance = None
    if params.eps > 0:
        resonance = find_modified_resonance(_guess(cfg), params, xi=cfg.packet.resonance_xi, substeps=cc.classical_substeps)
    snaps, sign = evolve_modified_ensemble(
        cloud, cc.snapshot_cycle, params, resonance, spont,
        half_q=cc.member_half_q, half_p=cc.member_half_p, **ens_kw,
    )
    modified = snaps[-1]

    hists = {
        "quantum": quantum.histogram,
        "modified": classical_histogram(modified.p, edges, "modified", MAX_OUTSIDE),
        "classical": classical_histogram(classical.p, edges, "classical", MAX_OUTSIDE),
    }
    peaks, sides = {}, {}
    for name, h in hists.items():
        peaks[name] = find_peaks(h, cc.smoothing, cc.threshold)
        sides[name] = side_peak(h, cc.smoothing, cc.threshold, cc.side_min_p)
    diag = {
        "quantum_failed": list(quantum.failed),
        "outside": {k: h.outside for k, h in hists.items()},
        "flagged_particles": {"classical": classical.n_flagged, "modified": modified.n_flagged},
        "side_peaks": sides,
    }
    if resonance is not None:
        diag["resonance"] = {"q": resonance.q, "p": resonance.p, "iterations": resonance.iterations}
    return Comparison(params.eps, hists, peaks, sides, resonance, int(np.count_nonzero(sign)), diag)


def comparison_rows(cmp: Comparison):
    h = cmp.histograms
    return zip(h["quantum"].centers, h["quantum"].masses, h["modified"].masses, h["classical"].masses)


def emit_comparison(results, cfg: ExperimentConfig, out_dir) -> list[Path]:
    files, diag = [], {}
    header = ["bin_center", "mass_quantum", "mass_modified", "mass_classical"]
    for cmp in results:
        name = f"compare_eps{cmp.epsilon:g}"
        files.append(write_csv(Path(out_dir) / f"{name}.csv", header, comparison_rows(cmp)))
        peak_rows = [(k, x, m) for k, ps in cmp.peaks.items() for x, m in zip(ps.positions, ps.masses)]
        files.append(write_csv(Path(out_dir) / f"{name}_peaks.csv", ["simulation", "p", "mass"], peak_rows))
        diag[name] = dict(cmp.diagnostics, members=cmp.n_members)
    files.append(write_manifest(out_dir, "compare", cfg, files, diag))
    return files


# -- small utilities -----------------------------------------------------------


def run_resonance(cfg: ExperimentConfig) -> dict:
    params = cfg.physics.params()
    fp = find_period1_fixed_point(_guess(cfg), params, substeps=cfg.classical_substeps)
    res = find_modified_resonance(_guess(cfg), params, xi=cfg.packet.resonance_xi, substeps=cfg.classical_substeps)
    return {
        "classical": {"q": fp.point.q, "p": fp.point.p, "trace": fp.trace, "det": fp.det, "stable": fp.stable},
        "modified": {
            "q": res.q, "p": res.p, "trace": res.fixed_point.trace, "stable": res.fixed_point.stable,
            "iterations": res.iterations, "kbar": params.kbar, "xi": cfg.packet.resonance_xi,
        },
    }


def veff_table(kbar: float, xi: float, p_mean: float, p_values) -> list[tuple[float, float]]:
    ctx = EffectiveContext(p_mean, xi, kbar)
    p_values = np.asarray(p_values, dtype=float)
    return list(zip(p_values, np.atleast_1d(veff_factor(p_values, ctx))))


__all__ = [
    "Comparison",
    "MomentumHistogram",
    "PeakSet",
    "TunnelingRun",
    "comparison_rows",
    "emit_comparison",
    "emit_portraits",
    "emit_tunneling",
    "run_comparison",
    "run_kbar_scan",
    "run_portraits",
    "run_resonance",
    "run_tunneling",
    "veff_table",
]

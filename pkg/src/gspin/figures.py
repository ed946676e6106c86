"""Reproduction pipelines: bundled config, simulation, fit and threshold checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import FitModel, extract_zfs, fft_power_spectrum, fit, rabi_ratio, spectral_peaks
from .analysis.fitting import FitResult
from .config import ExperimentConfig, bundled_config_path, load_config
from .experiments import ExperimentSpec, run_experiment
from .io import TraceRecord, dumps_report, write_sidecar, write_trace
from .photodynamics import g2_curve
from .sequences import site_lines
from .simulate import simulate
from .spin import correct_detuning

FIGURES = ("fig1c", "fig1d", "fig2c", "fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig4f")


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    target: str
    passed: bool


@dataclass
class FigureReport:
    figure: str
    traces: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, value, target: str, passed) -> None:
        self.checks.append(Check(name, float(value), target, bool(passed)))

    def table(self) -> str:
        width = max(len(c.name) for c in self.checks)
        rows = [f"{self.figure}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            mark = "pass" if c.passed else "FAIL"
            rows.append(f"  {mark}  {c.name:<{width}}  {c.value:>12.6g}  {c.target}")
        return "\n".join(rows)

    def write(self, out_dir: str | Path, fmt_name: str = "csv") -> Path:
        out = Path(out_dir) / self.figure
        out.mkdir(parents=True, exist_ok=True)
        for name, rec in self.traces.items():
            path = write_trace(rec, out / f"{name}.{fmt_name}", fmt_name)
            write_sidecar(path, rec.meta)
        for name, res in self.fits.items():
            (out / f"{name}.fit.json").write_text(dumps_report(res.to_dict()))
        summary = {
            "figure": self.figure,
            "passed": self.passed,
            "checks": [c.__dict__ for c in self.checks],
        }
        (out / "summary.json").write_text(dumps_report(summary))
        return out


def _config(name: str) -> ExperimentConfig:
    return load_config(bundled_config_path(name))


def _noiseless(cfg: ExperimentConfig) -> ExperimentConfig:
    run = cfg.run.model_copy(update={"shot_noise": False, "sample_sites": False})
    return cfg.model_copy(update={"run": run})


def _with_sequence(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return cfg.model_copy(update={"sequence": cfg.sequence.model_copy(update=changes)})


def _fit(rec: TraceRecord, kind: str, n: int = 1) -> FitResult:
    return fit(FitModel(kind, n), rec.sweep, rec.signal, rec.weights())


def _within(value, center, tol) -> bool:
    return abs(value - center) <= tol


def _fig1c(seed, jobs):
    rep = FigureReport("fig1c")
    cfg = _config("fig1c")
    rec = simulate(cfg, jobs, seed)
    rep.traces["g2"] = rec
    res = _fit(rec, "g2_three_level")
    rep.fits["g2"] = res
    dyn = cfg.build_system().dynamics
    g0 = float(g2_curve(dyn, [0.0])[0])
    g_inf = float(g2_curve(dyn, [1e7])[0])
    rep.check("g2(0) ideal", g0, "< 0.05", g0 < 0.05)
    rep.check("g2(inf)", g_inf, "1 +- 1e-6", _within(g_inf, 1.0, 1e-6))
    rep.check("bunching max", rec.signal.max(), "> 1", rec.signal.max() > 1)
    rep.check("fit converged", res.converged, "true", res.converged)
    return rep


def _fig1d(seed, jobs):
    rep = FigureReport("fig1d")
    cfg = _config("fig1d")
    rec = simulate(cfg, jobs, seed)
    rep.traces["saturation"] = rec
    res = _fit(rec, "saturation")
    rep.fits["saturation"] = res
    dyn = cfg.build_system().dynamics
    i_sat, p_sat = dyn.saturation_count_rate, dyn.saturation_power
    rep.check("fit converged", res.converged, "true", res.converged)
    di = res.params["i_sat"] / i_sat - 1
    dp = res.params["p_sat"] / p_sat - 1
    rep.check("I_sat relative error", di, "|x| < 0.05", abs(di) < 0.05)
    rep.check("P_sat relative error", dp, "|x| < 0.05", abs(dp) < 0.05)
    return rep


def _fig2c(seed, jobs):
    rep = FigureReport("fig2c")
    rec = simulate(_config("fig2c"), jobs, seed)
    rep.traces["odmr"] = rec
    res = _fit(rec, "lorentzian_sum", 2)
    rep.fits["odmr"] = res
    c = res.component("center")
    rep.check("fit converged", res.converged, "true", res.converged)
    rep.check("nu+ (MHz)", c[0], "689 +- 4", _within(c[0], 689, 4))
    rep.check("nu- (MHz)", c[1], "1721 +- 4", _within(c[1], 1721, 4))
    zfs, err_d, err_e = extract_zfs(res)
    rep.check("|D| (MHz)", abs(zfs.d), "1205 +- 6", _within(abs(zfs.d), 1205, 6))
    rep.check("E (MHz)", zfs.e, "516 +- 6", _within(zfs.e, 516, 6))
    return rep


def _fig3a(seed, jobs):
    rep = FigureReport("fig3a")
    cfg = _config("fig3a")
    rec = simulate(cfg, jobs, seed)
    rep.traces["rabi"] = rec
    res = _fit(rec, "sinusoid")
    rep.fits["rabi"] = res
    system = cfg.build_system()
    target = _resonant_omega(system, "plus", cfg.sequence.mw_mhz)
    f = res.params["freq"]
    rep.check("fit converged", res.converged, "true", res.converged)
    rep.check("Rabi frequency (MHz)", f, f"{target:.4g} +- 3%", _within(f, target, 0.03 * target))
    return rep


def _resonant_omega(system, branch, mw):
    """Rabi frequency of the allowed site whose line is closest to ``mw``."""
    best = None
    for i in range(6):
        lines = site_lines(i, system.defect, system.drive)
        if lines.omega[branch] > 0:
            d = abs(lines.nu[branch] - mw)
            if best is None or d < best[0]:
                best = (d, lines.omega[branch] * system.drive.scale(mw))
    return best[1]


def configured_detunings(system, branch: str, mw: float) -> np.ndarray:
    """Distinct |nu_i - mw| over sites allowed on ``branch``, inside the coupling window."""
    out = []
    for i in range(6):
        lines = site_lines(i, system.defect, system.drive)
        d = abs(lines.nu[branch] - mw)
        if lines.omega[branch] > 0 and d <= system.drive.coupling_window:
            out.append(round(d, 9))
    return np.unique(out)


def ramsey_checks(rep: FigureReport, name: str, cfg: ExperimentConfig, rec: TraceRecord, branch: str):
    system = cfg.build_system()
    deltas = configured_detunings(system, branch, cfg.sequence.mw_mhz)
    freq, power = fft_power_spectrum(rec.sweep, rec.signal)
    peaks = spectral_peaks(freq, power)
    bin_width = freq[1] - freq[0]
    rep.check(f"{name} FFT peak count", peaks.size, f"== {deltas.size}", peaks.size == deltas.size)
    if peaks.size == deltas.size:
        worst = float(np.max(np.abs(peaks - deltas)) / bin_width)
    else:
        worst = np.inf
    rep.check(f"{name} peak offset (bins)", worst, "<= 1", worst <= 1)
    res = _fit(rec, "damped_cosine_sum", deltas.size)
    rep.fits[name] = res
    t2 = system.defect.t2star(branch)
    rel = res.params["t2"] / t2 - 1
    rep.check(f"{name} fit converged", res.converged, "true", res.converged)
    rep.check(f"{name} T2* relative error", rel, "|x| < 0.15", abs(rel) < 0.15)


def _fig3b(seed, jobs):
    rep = FigureReport("fig3b")
    for branch in ("plus", "minus"):
        cfg = _config(f"fig3b_{branch}")
        rec = simulate(cfg, jobs, seed)
        name = f"ramsey_{branch}"
        rep.traces[name] = rec
        ramsey_checks(rep, name, cfg, rec, branch)
    return rep


def resolution_checks(rep: FigureReport, broad: FitResult, narrow: FitResult, system, branch: str):
    ratio = float(np.mean(broad.component("fwhm")) / np.mean(narrow.component("fwhm")))
    rep.check("linewidth ratio 15 ns / 300 ns", ratio, ">= 5", ratio >= 5)
    width = float(np.mean(narrow.component("fwhm")))
    lines = np.unique(np.round([
        site_lines(i, system.defect, system.drive).nu[branch]
        for i in range(6) if site_lines(i, system.defect, system.drive).omega[branch] > 0
    ], 9))
    centers = narrow.component("center")
    sep = np.diff(lines)
    isolated = [k for k in range(lines.size)
                if (k == 0 or sep[k - 1] > 2 * width) and (k == lines.size - 1 or sep[k] > 2 * width)]
    found = [np.min(np.abs(centers - lines[k])) for k in isolated]
    worst = max(found) if found else 0.0
    rep.check("resolvable lines matched (MHz)", worst, f"<= {width / 4:.3g}", worst <= width / 4)


def _fig3c(seed, jobs):
    rep = FigureReport("fig3c")
    fits = {}
    for branch, n in (("plus", 4), ("minus", 5)):
        cfg = _config(f"fig3c_{branch}")
        rec = simulate(cfg, jobs, seed)
        name = f"odmr_{branch}"
        rep.traces[name] = rec
        res = _fit(rec, "lorentzian_sum", n)
        rep.fits[name] = res
        fits[branch] = (cfg, res)
        rep.check(f"{name} fit converged", res.converged, "true", res.converged)
    cfg, narrow = fits["plus"]
    broad_cfg = _with_sequence(_config("fig2c"), sweep_mhz=cfg.sequence.sweep_mhz.model_copy(
        update={"start": 600.0, "stop": 780.0, "step": 1.0}))
    broad = _fit(simulate(_noiseless(broad_cfg), jobs, seed), "lorentzian_sum", 1)
    rep.fits["odmr_plus_15ns"] = broad
    resolution_checks(rep, broad, narrow, cfg.build_system(), "plus")
    return rep


def _fig4a(seed, jobs):
    rep = FigureReport("fig4a")
    cfg = _config("fig4a")
    system = cfg.build_system()
    for mw in (1704.0, 1712.0, 1720.0):
        sub = _with_sequence(cfg, mw_mhz=mw)
        rec = simulate(sub, jobs, seed)
        name = f"rabi_{mw:g}"
        rep.traces[name] = rec
        res = _fit(rec, "sinusoid")
        rep.fits[name] = res
        target = _resonant_omega(system, "minus", mw)
        rep.check(f"{name} frequency (MHz)", res.params["freq"], f"{target:.3g} +- 0.1",
                  res.converged and _within(res.params["freq"], target, 0.1))
    return rep


def fast_line_detuning(system, mw: float) -> float:
    """Detuning of the strongly coupled minus-branch sites from ``mw``."""
    w = [site_lines(i, system.defect, system.drive).omega["minus"] for i in range(6)]
    strong = [i for i in range(6) if w[i] >= max(w) * (1 - 1e-9)]
    d = [abs(site_lines(i, system.defect, system.drive).nu["minus"] - mw) for i in strong]
    return float(np.mean(d))


def rabi_ratio_pipeline(cfg_fast: ExperimentConfig, cfg_slow: ExperimentConfig, jobs: int = 1,
                        seed: int | None = None) -> dict:
    """Fit fast and slow Rabi traces and form the detuning-corrected ratio."""
    system = cfg_fast.build_system()
    delta = fast_line_detuning(system, cfg_fast.sequence.mw_mhz)
    # independent noise streams for the two traces
    seed = cfg_fast.run.seed if seed is None else int(seed)
    out = {"delta": delta}
    for label, fast, slow in (("noisy", cfg_fast, cfg_slow),
                              ("noiseless", _noiseless(cfg_fast), _noiseless(cfg_slow))):
        rf, rs = simulate(fast, jobs, seed), simulate(slow, jobs, seed + 1)
        ff, fs = _fit(rf, "sinusoid"), _fit(rs, "sinusoid")
        ratio, err = rabi_ratio(ff, fs, delta)
        out[label] = {"traces": (rf, rs), "fits": (ff, fs), "ratio": ratio, "error": err}
    return out


def _fig4b(seed, jobs):
    rep = FigureReport("fig4b")
    cfg_fast = _config("fig4b")
    cfg_slow = _with_sequence(cfg_fast, mw_mhz=1712.0)
    res = rabi_ratio_pipeline(cfg_fast, cfg_slow, jobs, seed)
    noisy, clean = res["noisy"], res["noiseless"]
    rep.traces["rabi_fast"], rep.traces["rabi_slow"] = noisy["traces"]
    rep.fits["rabi_fast"], rep.fits["rabi_slow"] = noisy["fits"]
    c = correct_detuning(3.8, 1.9)
    rep.check("correct_detuning(3.8, 1.9)", c, "3.29 (2 dp)", round(c, 2) == 3.29)
    rep.check("detuning of fast lines (MHz)", res["delta"], "1.9 +- 0.1", _within(res["delta"], 1.9, 0.1))
    converged = all(f.converged for f in noisy["fits"] + clean["fits"])
    rep.check("fits converged", converged, "true", converged)
    r = noisy["ratio"]
    rep.check("ratio (shot noise)", r, "2.2 +- 0.2 (1 dp)", 2.0 <= round(r, 1) <= 2.4)
    rep.check("ratio (noiseless)", clean["ratio"], "2.00 +- 0.05", _within(clean["ratio"], 2.0, 0.05))
    return rep


def broadband_rabi_oracle(t_us: np.ndarray, omega: float, branch: str) -> np.ndarray:
    """Occupancy-averaged P0 / 0.5 with uniform occupancy and B along [001].

    ``omega`` is the Rabi frequency of the four weakly coupled minus sites on
    the minus branch, or of the four allowed sites on the plus branch.
    """
    s1 = np.sin(np.pi * omega * t_us) ** 2
    if branch == "plus":
        return 2 * s1 / 3
    return (2 * s1 + np.sin(2 * np.pi * omega * t_us) ** 2) / 3


def _fig4f(seed, jobs):
    rep = FigureReport("fig4f")
    for branch in ("plus", "minus"):
        cfg = _config(f"fig4f_{branch}")
        rec = simulate(cfg, jobs, seed)
        rep.traces[f"rabi_{branch}"] = rec
        system = cfg.build_system()
        omega = min(w for w in (site_lines(i, system.defect, system.drive).omega[branch]
                                for i in range(6)) if w > 0)
        omega *= system.drive.scale(cfg.sequence.mw_mhz)
        err = float(np.max(np.abs(rec.signal - broadband_rabi_oracle(rec.sweep, omega, branch))))
        rep.check(f"{branch} vs closed form", err, "<= 1e-9", err <= 1e-9)
        if branch == "minus":
            t = np.array([1 / 3, 1 / 2]) / omega * 1000
            spec = ExperimentSpec("rabi", tuple(t), mw_freq=cfg.sequence.mw_mhz, unit_contrast=True,
                                  laser=cfg.sequence.laser_ns, delay=cfg.sequence.delay_ns,
                                  window=cfg.sequence.window_ns)
            peak, dip = run_experiment(spec, system).signal
            rep.check("camel-back max at Omega t = 1/3", peak, "0.75", _within(peak, 0.75, 1e-9))
            rep.check("camel-back dip at Omega t = 1/2", dip, "2/3", _within(dip, 2 / 3, 1e-9))
    return rep


_PIPELINES = {
    "fig1c": _fig1c,
    "fig1d": _fig1d,
    "fig2c": _fig2c,
    "fig3a": _fig3a,
    "fig3b": _fig3b,
    "fig3c": _fig3c,
    "fig4a": _fig4a,
    "fig4b": _fig4b,
    "fig4f": _fig4f,
}


def reproduce(figure: str, seed: int | None = None, jobs: int = 1) -> FigureReport:
    """Run one figure pipeline; ``seed`` overrides the bundled configs' seeds."""
    if figure not in _PIPELINES:
        raise KeyError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    return _PIPELINES[figure](seed, jobs)


__all__ = ["FIGURES", "FigureReport", "reproduce"]

"""Experiment drivers behind the command line.

Each driver takes a validated ``Config`` and returns a ``Table``.  Drivers do
not touch the file system; ``write_csv`` does, so the numerics stay testable.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bath import ModelParams, noise_kernel, nu1_from, spectral_density
from .errors import ConfigError, LMGError, NumericError
from .lindblad import build_adjoint_lindbladian, build_lindbladian, evolve_observable, liouvillian_spectrum
from .lindblad import stationarity_residual
from .semiclassical import ClassicalState, ground_energy, integrate_classical
from .slowflow import dissipation_A, eigenvalue_flow
from .spin_algebra import build_spin_operators
from .thermal import coherent_state_for_energy, gibbs_expectation, gibbs_state, rescaled_hamiltonian

EXPERIMENTS = ("figure1", "figure2", "gap-scan", "slowflow", "classical", "kernels", "stationarity")


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _optional_float(text: str):
    return None if text.strip().lower() in ("auto", "none", "") else float(text)


def _optional_floats(text: str):
    return None if text.strip().lower() in ("auto", "none", "") else _floats(text)


def _choice(*options):
    def parse(text: str) -> str:
        value = text.strip().lower()
        if value not in options:
            raise ValueError(f"expected one of {options}")
        return value

    return parse


# key -> (parser, default text)
SCHEMA = {
    "lambda": (_floats, "0.5, 2"),
    "gamma": (float, "0.05"),
    "s": (float, "20"),
    "s_list": (_floats, "5, 10, 20, 30"),
    "ttilde": (_floats, "0.5, 2"),
    "omega_c": (_optional_float, "auto"),
    "nu1": (_optional_float, "none"),
    "beta_tilde": (_floats, "1, 3"),
    "energies": (_optional_floats, "auto"),
    "gamma_t_max": (float, "60"),
    "n_t": (int, "121"),
    "n_eps": (int, "401"),
    "n_grid": (int, "201"),
    "form": (_choice("gksl", "variant"), "gksl"),
    "method": (_choice("auto", "eig", "dense", "expm", "rk45"), "auto"),
    "tol": (float, "5e-3"),
}


@dataclass(frozen=True)
class Config:
    experiment: str
    values: dict
    source: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def omega_c(self, lam: float) -> float:
        """Cutoff for coupling lam; defaults to 10 max(1, lam)."""
        oc = self.values["omega_c"]
        return 10.0 * max(1.0, lam) if oc is None else oc

    def header_lines(self) -> list:
        lines = [f"lmg {__version__}", f"experiment = {self.experiment}"]
        lines += [f"{k} = {self.source[k]}" for k in sorted(self.source)]
        return lines


def make_config(experiment: str, entries: dict) -> Config:
    """Validate raw string entries against SCHEMA before any computation."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    unknown = sorted(set(entries) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    source = {k: default for k, (_, default) in SCHEMA.items()}
    source.update({k: str(v).strip() for k, v in entries.items()})
    values = {}
    for key, (parse, _) in SCHEMA.items():
        try:
            values[key] = parse(source[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {source[key]!r} ({exc})") from exc
    cfg = Config(experiment, values, source)
    _validate(cfg)
    return cfg


def _validate(cfg: Config):
    v = cfg.values
    if not v["lambda"]:
        raise ConfigError("lambda list is empty")
    if any(not math.isfinite(x) or x < 0 for x in v["lambda"]):
        raise ConfigError("lambda values must be finite and >= 0")
    if not (v["gamma"] >= 0 and math.isfinite(v["gamma"])):
        raise ConfigError("gamma must be finite and >= 0")
    for key in ("n_t", "n_eps", "n_grid"):
        if v[key] < 2:
            raise ConfigError(f"{key} must be >= 2")
    if not v["gamma_t_max"] > 0:
        raise ConfigError("gamma_t_max must be > 0")
    if any(t <= 0 for t in v["ttilde"]):
        raise ConfigError("ttilde values must be > 0")
    if any(not b > 0 for b in v["beta_tilde"]):
        raise ConfigError("beta_tilde values must be > 0")
    if v["omega_c"] is not None and not v["omega_c"] > 0:
        raise ConfigError("omega_c must be > 0")
    # exercise the parameter contracts up front so bad input never reaches the numerics
    try:
        for lam in v["lambda"]:
            for s in set(v["s_list"]) | {v["s"]}:
                for tt in v["ttilde"]:
                    ModelParams(lam, v["gamma"], s, ttilde=tt, omega_c=cfg.omega_c(lam), nu1_override=v["nu1"])
    except LMGError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.experiment in ("figure2", "classical", "slowflow") and v["gamma"] == 0:
        raise ConfigError(f"{cfg.experiment} needs gamma > 0")


@dataclass
class Table:
    columns: tuple
    rows: list
    notes: list = field(default_factory=list)


def format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def render_csv(cfg: Config, table: Table) -> str:
    lines = ["# " + line for line in cfg.header_lines() + table.notes]
    lines.append(",".join(table.columns))
    lines += [",".join(format_value(x) for x in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def default_energies(lam: float) -> tuple:
    """Three initial energies spanning the basins: above and below zero, and below -1 when lam > 1."""
    if lam > 1.0:
        return 0.5, -0.5, 0.5 * (ground_energy(lam) - 1.0)
    return 0.5, 0.0, -0.5


def _energies(cfg: Config, lam: float) -> tuple:
    return cfg["energies"] if cfg["energies"] is not None else default_energies(lam)


def _params(cfg: Config, lam: float, s: float, **kw) -> ModelParams:
    return ModelParams(lam, cfg["gamma"], s, omega_c=cfg.omega_c(lam), nu1_override=cfg["nu1"], **kw)


# ---------------------------------------------------------------- drivers


def run_figure1(cfg: Config) -> Table:
    rows = []
    for lam in cfg["lambda"]:
        eps_g = ground_energy(lam)
        for eps in np.linspace(eps_g, 1.0, cfg["n_eps"]):
            rows.append((lam, eps, dissipation_A(float(eps), lam)))
    return Table(("lambda", "epsilon", "A"), rows)


def run_figure2(cfg: Config) -> Table:
    s = cfg["s"]
    ops = build_spin_operators(s)
    gamma_t = np.linspace(0.0, cfg["gamma_t_max"], cfg["n_t"])
    rows, notes = [], []
    for lam in cfg["lambda"]:
        h = rescaled_hamiltonian(ops, lam)
        starts = [coherent_state_for_energy(ops, lam, e) for e in _energies(cfg, lam)]
        for tt in cfg["ttilde"]:
            params = _params(cfg, lam, s, ttilde=tt)
            ladj = build_adjoint_lindbladian(ops, params, form=cfg["form"])
            h_t = evolve_observable(ladj, h, gamma_t / cfg["gamma"], method=cfg["method"])
            gibbs = gibbs_expectation(gibbs_state(ops, lam, 1.0 / tt), h)
            for (rho0, _), e0 in zip(starts, _energies(cfg, lam)):
                series = np.einsum("tij,ji->t", h_t, rho0).real
                converged = abs(series[-1] - gibbs) < cfg["tol"]
                label = f"h0={e0:+.4f}"
                if not converged:
                    notes.append(f"not converged: lambda={lam} Ttilde={tt} {label} deviation={series[-1] - gibbs:.3e}")
                rows += [(lam, tt, label, g, v, converged) for g, v in zip(gamma_t, series)]
            rows.append((lam, tt, "gibbs", gamma_t[-1], gibbs, True))
    return Table(("lambda", "Ttilde", "label", "gamma_t", "h", "converged"), rows, notes)


def run_gap_scan(cfg: Config) -> Table:
    rows, notes = [], []
    for lam in cfg["lambda"]:
        for tt in cfg["ttilde"]:
            gaps = []
            for s in cfg["s_list"]:
                ops = build_spin_operators(s)
                try:
                    spec = liouvillian_spectrum(build_lindbladian(ops, _params(cfg, lam, s, ttilde=tt), form=cfg["form"]), 2)
                except NumericError as exc:
                    notes.append(f"solver failure: lambda={lam} Ttilde={tt} S={s}: {exc}")
                    rows.append((s, lam, tt, math.nan, math.nan, math.nan))
                    continue
                gap = -spec[1].real
                gaps.append(gap)
                rows.append((s, lam, tt, gap, spec[1].real, spec[1].imag))
            if gaps and min(gaps) > 0:
                notes.append(f"flatness lambda={lam} Ttilde={tt}: max/min gap = {max(gaps) / min(gaps):.6f}")
    return Table(("S", "lambda", "Ttilde", "gap", "lambda1_real", "lambda1_imag"), rows, notes)


def run_slowflow(cfg: Config) -> Table:
    s_grid = np.linspace(0.0, cfg["gamma_t_max"], cfg["n_t"])
    rows = []
    for lam in cfg["lambda"]:
        for e0 in _energies(cfg, lam):
            eps = eigenvalue_flow(e0, lam, s_grid)
            rows += [(lam, e0, s, e) for s, e in zip(s_grid, eps)]
    return Table(("lambda", "eps0", "gamma_t", "epsilon"), rows)


def classical_state_for_energy(lam: float, h0: float) -> ClassicalState:
    """Point on the y = 0 great circle with energy h0, on the branch z <= 1/lam."""
    q = 0.5 * lam
    c = -0.5 * lam - h0
    disc = max(1.0 - 4.0 * q * c, 0.0)
    z = 2.0 * c / (1.0 + math.sqrt(disc))
    z = min(max(z, -1.0), 1.0)
    return ClassicalState(math.sqrt(max(1.0 - z * z, 0.0)), 0.0, z)


def run_classical(cfg: Config) -> Table:
    gamma = cfg["gamma"]
    gamma_t = np.linspace(0.0, cfg["gamma_t_max"], cfg["n_t"])
    rows = []
    for lam in cfg["lambda"]:
        for e0 in _energies(cfg, lam):
            traj = integrate_classical(classical_state_for_energy(lam, e0), lam, gamma, gamma_t / gamma)
            flow = eigenvalue_flow(float(traj.h[0]), lam, gamma_t)
            for i, g in enumerate(gamma_t):
                rows.append((lam, e0, g, traj.x[i], traj.y[i], traj.z[i], traj.h[i], flow[i]))
    return Table(("lambda", "h0", "gamma_t", "x", "y", "z", "h", "h_slowflow"), rows)


def run_kernels(cfg: Config) -> Table:
    rows = []
    for lam in cfg["lambda"]:
        oc = cfg.omega_c(lam)
        for w in np.linspace(0.0, 5.0 * oc, cfg["n_grid"]):
            rows.append(("J", oc, w, spectral_density(w, oc)))
        for tau in np.linspace(0.0, 5.0 / oc, cfg["n_grid"]):
            rows.append(("eta", oc, tau, noise_kernel(tau, oc)))
        for t in np.linspace(0.05, 5.0, cfg["n_grid"]):
            rows.append(("nu1", oc, t, nu1_from(t, oc)))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return Table(("kernel", "omega_c", "argument", "value"), rows)


def run_stationarity(cfg: Config) -> Table:
    rows = []
    for lam in cfg["lambda"]:
        for bt in cfg["beta_tilde"]:
            previous = None
            for s in sorted(cfg["s_list"]):
                ops = build_spin_operators(s)
                # bath temperature matched to the Gibbs state under test
                params = _params(cfg, lam, s, ttilde=1.0 / bt)
                r = stationarity_residual(ops, params, beta_tilde=bt, form=cfg["form"])
                ratio = r / previous if previous else math.nan
                rows.append((s, lam, bt, r, ratio))
                previous = r
    return Table(("S", "lambda", "beta_tilde", "residual", "ratio_to_previous"), rows)


DRIVERS = {
    "figure1": run_figure1,
    "figure2": run_figure2,
    "gap-scan": run_gap_scan,
    "slowflow": run_slowflow,
    "classical": run_classical,
    "kernels": run_kernels,
    "stationarity": run_stationarity,
}


def run_experiment(cfg: Config) -> Table:
    return DRIVERS[cfg.experiment](cfg)

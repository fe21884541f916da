"""Parameter sweeps behind the command-line subcommands.

Each experiment returns a header and a 2-d float table. Time grids are cut
into fixed-size chunks that are evaluated independently (possibly on a
thread pool) and concatenated in order, so the table does not depend on the
number of workers.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import oracle as orc
from .core import (UP, BellState, Explicit, FieldConfig, GaussianProfile, Uniform, ValidationError,
                   bell_state, make_bath)
from .measures import concurrence, decoherence_measure, purity
from .sectors import collapse_uniform, shift_histogram, spectrum_for
from .single import (polarizations, pz_asymptotic, pz_offset, reduced_state, transition_probability)
from .two import (TwoQubitFieldConfig, evolve_separate_baths_bell, evolve_separate_baths_general,
                  evolve_separate_baths_series, reduced_state_2q_common, separate_bath_path)

CHUNK = 64


# ---------------------------------------------------------------- key types

def _float(s: str) -> float:
    return float(s)


def _int(s: str) -> int:
    return int(s)


def _str(s: str) -> str:
    return s.strip()


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _strs(s: str) -> tuple:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _pairs(s: str) -> tuple:
    out = []
    for item in s.split(","):
        if item.strip():
            a, b = item.split(":")
            out.append((float(a), float(b)))
    return tuple(out)


_COMMON = {
    "omega0": (_float, 100.0),
    "omega1": (_float, 10.0),
    "n_spins": (_int, 20),
    "polarization": (_float, 0.0),
    "g_total": (_float, 20.0),
    "alpha": (_float, 0.01),
    "t_start": (_float, 0.0),
    "t_stop": (_float, 5.0),
    "t_steps": (_int, 501),
}

SCHEMAS = {
    "shift-dist": {
        "n_spins": (_int, 20), "polarization": (_float, 0.0), "g_total": (_float, 20.0),
        "alpha": (_float, 0.01), "couplings": (_strs, ("uniform", "gaussian")),
        "bins": (_int, 21), "omega0": (_float, 0.0), "omega": (_float, 0.0),
    },
    "rabi-sweep": {
        **_COMMON,
        "sweep": (_str, "omega"),
        "omega": (_float, 100.0),
        "omega_start": (_float, 90.0), "omega_stop": (_float, 110.0), "omega_steps": (_int, 81),
        "time": (_float, float("nan")),
        "polarizations": (_floats, (0.0,)),
        "couplings": (_strs, ("uniform",)),
    },
    "polarization": {
        **_COMMON,
        "omega": (_float, float("nan")),
        "couplings": (_strs, ("uniform", "gaussian")),
    },
    "asymptote": {
        "omega1": (_float, 10.0), "n_spins": (_int, 2000), "gamma": (_float, 0.25),
        "t_start": (_float, 0.0), "t_stop": (_float, 20.0), "t_steps": (_int, 2001),
    },
    "bell-common": {
        **_COMMON,
        "omega": (_float, 100.0),
        "J": (_float, 0.0),
        "detunings": (_floats, (0.0, 5.0)),
        "states": (_strs, ("triplet0", "phi+", "phi-", "singlet")),
        "t_stop": (_float, 10.0),
    },
    "bell-separate": {
        "omega0_1": (_float, 100.0), "omega0_2": (_float, 110.0), "omega1": (_float, 10.0),
        "n_spins": (_int, 20), "polarization": (_float, 0.0), "g_total": (_float, 20.0),
        "J": (_float, 0.0), "detunings": (_pairs, ((0.0, 0.0), (2.0, 2.0), (10.0, 10.0))),
        "state": (_str, "singlet"),
        "t_start": (_float, 0.0), "t_stop": (_float, 10.0), "t_steps": (_int, 501),
    },
    "oracle-check": {
        "n_spins": (_int, 6), "points": (_int, 4), "seed": (_int, 0),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A subcommand with its fully resolved parameters."""

    subcommand: str
    params: dict = field(default_factory=dict)
    out: str | None = None
    threads: int = 1

    def __post_init__(self):
        if self.subcommand not in SCHEMAS:
            raise ValidationError("subcommand", f"unknown subcommand {self.subcommand!r}")
        schema = SCHEMAS[self.subcommand]
        unknown = sorted(set(self.params) - set(schema))
        if unknown:
            raise ValidationError(unknown[0], f"unknown key; valid keys: {', '.join(sorted(schema))}")
        full = {k: default for k, (_, default) in schema.items()}
        full.update(self.params)
        object.__setattr__(self, "params", full)
        if self.threads < 1:
            raise ValidationError("threads", f"must be >= 1, got {self.threads}")
        if "t_steps" in full:
            _grid(full, "t")
        if self.subcommand == "rabi-sweep" and full["sweep"] == "omega":
            _grid(full, "omega")

    def __getitem__(self, key):
        return self.params[key]


def parse_value(subcommand: str, key: str, text: str):
    schema = SCHEMAS[subcommand]
    if key not in schema:
        raise ValidationError(key, f"unknown key; valid keys: {', '.join(sorted(schema))}")
    try:
        return schema[key][0](text)
    except ValueError as exc:
        raise ValidationError(key, f"cannot parse {text!r}: {exc}") from None


def parse_config_text(subcommand: str, text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    params = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}", f"expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        params[key] = parse_value(subcommand, key, value)
    return params


def _grid(p: dict, prefix: str) -> np.ndarray:
    start, stop, steps = p[f"{prefix}_start"], p[f"{prefix}_stop"], p[f"{prefix}_steps"]
    if steps < 2:
        raise ValidationError(f"{prefix}_steps", f"must be >= 2, got {steps}")
    if not stop > start:
        raise ValidationError(f"{prefix}_stop", f"grid must be increasing ({start} -> {stop})")
    return np.linspace(start, stop, steps)


def _chunked(fn, t: np.ndarray, threads: int) -> np.ndarray:
    """Apply ``fn`` to fixed-size slices of ``t`` and stack the results along axis 0."""
    pieces = [t[i:i + CHUNK] for i in range(0, t.size, CHUNK)]
    if threads > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, pieces))
    else:
        parts = [fn(piece) for piece in pieces]
    return np.concatenate(parts, axis=0)


def _coupling(name: str, n: int, g_total: float, alpha: float):
    if name == "uniform":
        return Uniform(g_total / n)
    if name == "gaussian":
        return GaussianProfile(g_total, alpha)
    raise ValidationError("couplings", f"unknown coupling model {name!r} (uniform, gaussian)")


def _spectrum(p: dict, coupling_name: str = "uniform", polarization: float | None = None):
    pol = p["polarization"] if polarization is None else polarization
    bath = make_bath(p["n_spins"], pol, _coupling(coupling_name, p["n_spins"], p["g_total"], p.get("alpha", 0.0)))
    return spectrum_for(bath)


def _tag(x: float) -> str:
    return repr(float(x))


# ------------------------------------------------------------- experiments

def shift_dist(cfg: ExperimentConfig):
    """Histogram of sector detunings omega - (omega0 + shift) for each coupling model."""
    p = cfg.params
    spectra = [_spectrum(p, name) for name in p["couplings"]]
    detuning = p["omega"] - p["omega0"]
    reach = max(float(np.max(np.abs(s.shifts))) for s in spectra)
    pad = reach / max(p["bins"] - 1, 1) if reach else 0.5
    rng = (detuning - reach - pad, detuning + reach + pad)
    cols = [shift_histogram(s, p["bins"], rng, detuning) for s in spectra]
    table = np.column_stack([[c for c, _ in cols[0]]] + [[m for _, m in col] for col in cols])
    return ["delta"] + [f"p_{name}" for name in p["couplings"]], table


def rabi_sweep(cfg: ExperimentConfig):
    """Spin-flip probability against drive frequency (fixed t) or against time (fixed omega)."""
    p = cfg.params
    combos = [(c, pb) for c in p["couplings"] for pb in p["polarizations"]]
    spectra = [_spectrum(p, c, pb) for c, pb in combos]
    header = [f"p_down_{c}_pb{_tag(pb)}" for c, pb in combos]
    if p["sweep"] == "omega":
        t = p["time"] if np.isfinite(p["time"]) else np.pi / p["omega1"]
        omegas = _grid(p, "omega")

        def column(sp):
            return np.array([transition_probability(FieldConfig(p["omega0"], p["omega1"], w), sp, t)
                             for w in omegas])
        return ["omega"] + header, np.column_stack([omegas] + [column(sp) for sp in spectra])
    if p["sweep"] == "time":
        field_ = FieldConfig(p["omega0"], p["omega1"], p["omega"])
        t = _grid(p, "t")
        cols = [_chunked(lambda tc, sp=sp: transition_probability(field_, sp, tc), t, cfg.threads)
                for sp in spectra]
        return ["t"] + header, np.column_stack([t] + cols)
    raise ValidationError("sweep", f"must be 'omega' or 'time', got {p['sweep']!r}")


def polarization(cfg: ExperimentConfig):
    """Bloch components, their norm and 1 - |P|^2 against time for each coupling model."""
    p = cfg.params
    omega = p["omega"] if np.isfinite(p["omega"]) else p["omega0"]
    field_ = FieldConfig(p["omega0"], p["omega1"], omega)
    t = _grid(p, "t")
    header, cols = ["t"], [t]
    for name in p["couplings"]:
        sp = _spectrum(p, name)
        vec = _chunked(lambda tc: polarizations(field_, sp, tc).T, t, cfg.threads)
        norm = np.sqrt(np.sum(vec * vec, axis=1))
        deco = np.array([decoherence_measure(v) for v in vec])
        header += [f"{name}_px", f"{name}_py", f"{name}_pz", f"{name}_norm", f"{name}_decoherence"]
        cols += [vec[:, 0], vec[:, 1], vec[:, 2], norm, deco]
    return header, np.column_stack(cols)


def asymptote(cfg: ExperimentConfig):
    """Exact resonant Pz of a large unpolarized uniform bath next to the power-law form.

    The per-spin coupling follows from gamma = N g^2 / (4 omega1^2).
    """
    p = cfg.params
    n, w1, gamma = p["n_spins"], p["omega1"], p["gamma"]
    if w1 <= 0:
        raise ValidationError("omega1", "must be > 0 for the asymptotic law")
    if gamma < 0:
        raise ValidationError("gamma", f"must be >= 0, got {gamma}")
    g = 2 * w1 * np.sqrt(gamma / n)
    sp = collapse_uniform(n, g, 0.0)
    field_ = FieldConfig(0.0, w1, 0.0)
    t = _grid(p, "t")
    exact = _chunked(lambda tc: polarizations(field_, sp, tc)[2], t, cfg.threads)
    closed = pz_asymptotic(w1, n, g, t)
    offset = pz_offset(field_, sp)
    table = np.column_stack([t, exact, closed, exact - offset, closed - gamma])
    return ["t", "pz_exact", "pz_asymptotic", "pz_exact_oscillation", "pz_asymptotic_oscillation"], table


_STATE_NAMES = {s.value: s for s in BellState}


def _bell(name: str):
    if name not in _STATE_NAMES:
        raise ValidationError("states", f"unknown Bell state {name!r}; valid: {', '.join(_STATE_NAMES)}")
    return bell_state(_STATE_NAMES[name])


def bell_common(cfg: ExperimentConfig):
    """Concurrence and purity of Bell inputs in a common bath, per omega - omega0 offset."""
    p = cfg.params
    sp = _spectrum(p)
    t = _grid(p, "t")
    header, cols = ["t"], [t]
    for dw in p["detunings"]:
        field_ = FieldConfig(p["omega"] - dw, p["omega1"], p["omega"])
        two = TwoQubitFieldConfig.common(field_, p["J"])
        for name in p["states"]:
            rho0 = _bell(name)

            def run(tc, two=two, rho0=rho0):
                out = np.empty((tc.size, 2))
                for k, tk in enumerate(tc):
                    rho = reduced_state_2q_common(two, sp, rho0, tk)
                    out[k] = concurrence(rho), purity(rho)
                return out
            res = _chunked(run, t, cfg.threads)
            header += [f"concurrence_{name}_dw{_tag(dw)}", f"purity_{name}_dw{_tag(dw)}"]
            cols += [res[:, 0], res[:, 1]]
    return header, np.column_stack(cols)


def bell_separate(cfg: ExperimentConfig):
    """Concurrence of a Bell input with one private bath per qubit.

    Each detuning pair (d1, d2) sets omega_a = omega0_a - d_a.
    """
    p = cfg.params
    sp = _spectrum(p)
    rho0 = _bell(p["state"])
    t = _grid(p, "t")
    header, cols = ["t"], [t]
    for d1, d2 in p["detunings"]:
        two = TwoQubitFieldConfig(p["omega0_1"], p["omega0_2"], p["omega0_1"] - d1, p["omega0_2"] - d2,
                                  p["omega1"], p["J"])

        def run(tc, two=two):
            if p["J"] == 0:
                states = [evolve_separate_baths_bell(two, (sp, sp), rho0, tk) for tk in tc]
            else:
                states = evolve_separate_baths_series(two, (sp, sp), rho0, tc)
            return np.array([concurrence(rho) for rho in states])
        cols.append(_chunked(run, t, cfg.threads))
        header.append(f"concurrence_dw{_tag(d1)}_{_tag(d2)}")
    return header, np.column_stack(cols)


def oracle_check(cfg: ExperimentConfig):
    """Engine against the brute-force oracle on random small systems.

    Returns rows (check index, max trace distance, tolerance) and the check
    names; a row fails when its deviation exceeds the tolerance.
    """
    p = cfg.params
    n = p["n_spins"]
    if not 1 <= n <= 6:
        raise ValidationError("n_spins", f"oracle-check runs 1..6 bath spins per bath, got {n}")
    rng = np.random.default_rng(p["seed"])
    checks = []

    def times():
        return rng.uniform(0.05, 1.5, p["points"])

    g = tuple(rng.uniform(0.5, 3.0, n))
    bath = make_bath(n, float(rng.uniform(-0.8, 0.8)), Explicit(g))
    sp = spectrum_for(bath)
    field_ = FieldConfig(100.0, 10.0, float(100 + rng.uniform(-4, 4)))
    spec = orc.FullSystemSpec.single(field_, bath)
    rho0 = np.outer(UP, UP.conj())
    eig = orc.oracle_eig(spec)
    ts = times()
    checks.append(("single-exact", max(orc.trace_distance(
        reduced_state(field_, sp, rho0, tk).matrix, orc.oracle_reduced_state(spec, rho0, tk, eig=eig))
        for tk in ts), 1e-9))
    checks.append(("single-stepped-vs-exact", max(orc.trace_distance(
        orc.oracle_reduced_state(spec, rho0, tk, method="stepped"),
        orc.oracle_reduced_state(spec, rho0, tk, eig=eig)) for tk in ts[:1]), 1e-8))

    two = TwoQubitFieldConfig.common(field_, J=float(rng.uniform(-5, 5)))
    spec = orc.FullSystemSpec.common(two, bath)
    eig = orc.oracle_eig(spec)
    rho0 = _bell("phi+").matrix
    checks.append(("common-exact", max(orc.trace_distance(
        reduced_state_2q_common(two, sp, rho0, tk).matrix, orc.oracle_reduced_state(spec, rho0, tk, eig=eig))
        for tk in times()), 1e-9))

    m = max(1, n // 2)
    b1 = make_bath(m, float(rng.uniform(-0.8, 0.8)), Explicit(tuple(rng.uniform(0.5, 3.0, m))))
    b2 = make_bath(m, float(rng.uniform(-0.8, 0.8)), Explicit(tuple(rng.uniform(0.5, 3.0, m))))
    spectra = (spectrum_for(b1), spectrum_for(b2))
    rho0 = _bell("singlet").matrix
    for label, two in (
        ("separate-shared-frame", TwoQubitFieldConfig(100.0, 104.0, 101.0, 101.0, 10.0, 3.0)),
        ("separate-distinct-frames", TwoQubitFieldConfig(100.0, 104.0, 101.0, 103.0, 10.0, 3.0)),
    ):
        spec = orc.FullSystemSpec.separate(two, b1, b2)
        method = "exact" if separate_bath_path(two) == "rotating-frame" else "stepped"
        eig = orc.oracle_eig(spec) if method == "exact" else None
        ts = times() if method == "exact" else times()[:1]
        checks.append((label, max(orc.trace_distance(
            evolve_separate_baths_general(two, spectra, rho0, tk).matrix,
            orc.oracle_reduced_state(spec, rho0, tk, method=method, eig=eig)) for tk in ts), 1e-9))
    names = [c[0] for c in checks]
    table = np.array([[k, dev, tol] for k, (_, dev, tol) in enumerate(checks)])
    return names, table


RUNNERS = {
    "shift-dist": shift_dist,
    "rabi-sweep": rabi_sweep,
    "polarization": polarization,
    "asymptote": asymptote,
    "bell-common": bell_common,
    "bell-separate": bell_separate,
    "oracle-check": oracle_check,
}


def run_experiment(cfg: ExperimentConfig):
    return RUNNERS[cfg.subcommand](cfg)

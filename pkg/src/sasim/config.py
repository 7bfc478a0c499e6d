"""Experiment configuration: flat key-value files and named presets.

The config format is one ``key = value`` per line, ``#`` starts a comment
line, and keys carry dotted section prefixes (``rates.p_pair``). Parsing
is total: unknown keys, duplicates, bad values and missing required keys
all fail with a diagnostic before anything runs.

Presets bundle the parameter sets behind the stock scenarios: the six
coincidence-map channels (three spectral windows at two crystal
orientations), the CHSH table rows, tomography runs and the correlation
(g2) regimes. A preset is just a config mapping; an explicit config file
overrides preset keys.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .crystal import (
    LASER_WAVENUMBER_CM1,
    CrystalOrientation,
    SpectralConfig,
    WeightModelParams,
    generate_sas_state,
    path_amplitudes,
    raman_singles_polarization,
)
from .errors import ConfigError
from .estimators import ChshSettings, chsh_maximum
from .polarization import (
    MAXIMALLY_MIXED,
    DensityMatrix4,
    JonesVector,
    TwoPhotonState,
    density_from_pure,
    mix,
    purity,
)
from .simulate import SourceRates

_REQUIRED = object()


def _float(text: str) -> float:
    return float(text)


def _int(text: str) -> int:
    return int(text, 0)


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _optional_float(text: str):
    if text.strip().lower() in ("", "none"):
        return None
    return float(text)


def _choice(*allowed: str):
    def cast(text: str) -> str:
        if text not in allowed:
            raise ValueError(f"expected one of {allowed}, got {text!r}")
        return text

    return cast


# key -> (caster, default); _REQUIRED marks keys a config must provide.
KEY_SPECS = {
    "crystal.theta_deg": (_float, 0.0),
    "crystal.laser_angle_deg": (_float, 0.0),
    "spectral.shift_cm1": (_float, 900.0),
    "spectral.omega_phonon_cm1": (_float, 1332.0),
    "spectral.gamma_phonon_cm1": (_float, 600.0),
    "spectral.laser_wavenumber_cm1": (_float, LASER_WAVENUMBER_CM1),
    "weights.g_e": (_float, 1.0),
    "weights.g_r": (_optional_float, None),
    "weights.decay_width_cm1": (_float, 3000.0),
    "weights.relative_phase_rad": (_float, 0.0),
    "weights.in_phase": (_bool, False),
    "weights.anchor_shift_cm1": (_float, 900.0),
    "rates.p_pair": (_float, 0.01),
    "rates.p_s_single": (_float, 0.0),
    "rates.p_as_single": (_float, 0.0),
    "rates.p_triple": (_float, 0.0),
    "rates.eta_s": (_float, 1.0),
    "rates.eta_as": (_float, 1.0),
    "rates.dark_s": (_float, 0.0),
    "rates.dark_as": (_float, 0.0),
    "rates.rep_period_ns": (_float, 13.158),
    "background.fraction": (_float, 0.0),
    "background.purity_target": (_optional_float, None),
    "run.n_pulses": (_int, _REQUIRED),
    "run.seed": (_int, _REQUIRED),
    "chsh.angle_policy": (_choice("canonical", "optimal", "explicit"), "canonical"),
    "chsh.a_deg": (_float, 0.0),
    "chsh.a_prime_deg": (_float, 45.0),
    "chsh.b_deg": (_float, 22.5),
    "chsh.b_prime_deg": (_float, 67.5),
    "tomography.mode": (_choice("36", "16"), "36"),
    "tomography.method": (_choice("mle", "linear"), "mle"),
    "tomography.tol": (_float, 1e-9),
    "tomography.max_iter": (_int, 5000),
    "g2.max_delay": (_int, 10),
    "simulate.channels": (_choice("vh4", "chsh", "tomo"), "vh4"),
    "sweep.parameter": (_choice("none", "theta", "shift"), "none"),
    "sweep.start": (_float, 0.0),
    "sweep.stop": (_float, 90.0),
    "sweep.steps": (_int, 7),
    "sweep.calibration_factor": (_float, 1.0),
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse config text into a raw key -> string mapping.

    Raises :class:`ConfigError` with line diagnostics for anything that is
    not a comment, a blank line or a known ``key = value`` pair.
    """
    raw: dict[str, str] = {}
    problems: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            problems.append(f"{source}:{lineno}: expected 'key = value'")
            continue
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KEY_SPECS:
            problems.append(f"{source}:{lineno}: unknown key {key!r}")
            continue
        if key in raw:
            problems.append(f"{source}:{lineno}: duplicate key {key!r}")
            continue
        raw[key] = value
    if problems:
        raise ConfigError("; ".join(problems))
    return raw


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, fully typed experiment configuration."""

    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def seed(self) -> int:
        return self.values["run.seed"]

    @property
    def n_pulses(self) -> int:
        return self.values["run.n_pulses"]

    @classmethod
    def from_raw(cls, raw: dict) -> "ExperimentConfig":
        values = {}
        problems = []
        missing = []
        for key, (cast, default) in KEY_SPECS.items():
            if key in raw:
                text = raw[key]
                if not isinstance(text, str):
                    text = str(text)
                try:
                    values[key] = cast(text)
                except ValueError as exc:
                    problems.append(f"{key}: {exc}")
            elif default is _REQUIRED:
                missing.append(key)
            else:
                values[key] = default
        if missing:
            problems.append("missing required keys: " + ", ".join(sorted(missing)))
        if problems:
            raise ConfigError("; ".join(problems))
        return cls(values=values)

    def canonical_text(self) -> str:
        lines = []
        for key in sorted(self.values):
            value = self.values[key]
            if isinstance(value, bool):
                rendered = "true" if value else "false"
            elif value is None:
                rendered = "none"
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            lines.append(f"{key} = {rendered}")
        return "\n".join(lines) + "\n"

    def sha(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def load_config(
    preset: str | None = None,
    config_text: str | None = None,
    source: str = "<config>",
    overrides: dict | None = None,
) -> ExperimentConfig:
    """Merge preset, config file and overrides (later wins) and validate."""
    raw: dict[str, str] = {}
    if preset is not None:
        if preset not in PRESETS:
            known = ", ".join(sorted(PRESETS))
            raise ConfigError(f"unknown preset {preset!r}; available: {known}")
        raw.update(PRESETS[preset])
    if config_text is not None:
        raw.update(parse_config_text(config_text, source=source))
    if overrides:
        raw.update({k: str(v) for k, v in overrides.items()})
    return ExperimentConfig.from_raw(raw)


# ----------------------------------------------------------------------
# Builders from a validated config to the physics objects.


def build_orientation(cfg: ExperimentConfig) -> CrystalOrientation:
    return CrystalOrientation(cfg["crystal.theta_deg"])


def build_laser(cfg: ExperimentConfig) -> JonesVector:
    return JonesVector.linear(cfg["crystal.laser_angle_deg"])


def build_spectral(cfg: ExperimentConfig) -> SpectralConfig:
    return SpectralConfig(
        shift=cfg["spectral.shift_cm1"],
        omega_laser=cfg["spectral.laser_wavenumber_cm1"],
        omega_phonon=cfg["spectral.omega_phonon_cm1"],
        gamma_phonon=cfg["spectral.gamma_phonon_cm1"],
    )


def build_weight_model(cfg: ExperimentConfig) -> WeightModelParams:
    if cfg["weights.g_r"] is None:
        return WeightModelParams.calibrated(
            gamma_phonon=cfg["spectral.gamma_phonon_cm1"],
            omega_phonon=cfg["spectral.omega_phonon_cm1"],
            decay_width_cm1=cfg["weights.decay_width_cm1"],
            relative_phase_rad=cfg["weights.relative_phase_rad"],
            g_electronic=cfg["weights.g_e"],
            anchor_shift_cm1=cfg["weights.anchor_shift_cm1"],
            in_phase=cfg["weights.in_phase"],
        )
    return WeightModelParams(
        g_raman_mag=cfg["weights.g_r"],
        g_electronic=cfg["weights.g_e"],
        relative_phase_rad=cfg["weights.relative_phase_rad"],
        decay_width_cm1=cfg["weights.decay_width_cm1"],
        anchor_shift_cm1=cfg["weights.anchor_shift_cm1"],
        in_phase=cfg["weights.in_phase"],
    )


def build_pair_state(cfg: ExperimentConfig) -> TwoPhotonState:
    amps = path_amplitudes(build_spectral(cfg), build_weight_model(cfg))
    return generate_sas_state(build_laser(cfg), build_orientation(cfg), amps)


def solve_background_fraction(pair_purity: float, target: float) -> float:
    """Unpolarized admixture fraction that lowers the purity to ``target``.

    For rho(f) = (1-f) rho_pair + f I/4 the purity is quadratic in f;
    the smaller root in [0, 1] is returned.
    """
    if not 0.25 <= target <= pair_purity + 1e-12:
        raise ConfigError(
            f"purity target {target} unreachable from pair purity {pair_purity:.4f}"
        )
    a = pair_purity - 0.25
    b = 0.5 - 2.0 * pair_purity
    c = pair_purity - target
    if abs(a) < 1e-12:
        return 0.0 if abs(c) < 1e-12 else float(-c / b)
    disc = b * b - 4.0 * a * c
    root = (-b - np.sqrt(max(disc, 0.0))) / (2.0 * a)
    return float(min(max(root, 0.0), 1.0))


def background_fraction(cfg: ExperimentConfig, rho_pair: DensityMatrix4) -> float:
    target = cfg["background.purity_target"]
    if target is not None:
        return solve_background_fraction(purity(rho_pair), target)
    fraction = cfg["background.fraction"]
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"background.fraction must lie in [0, 1], got {fraction}")
    return fraction


def build_effective_rho(cfg: ExperimentConfig) -> DensityMatrix4:
    """Pair state mixed with the configured unpolarized background."""
    rho_pair = density_from_pure(build_pair_state(cfg))
    fraction = background_fraction(cfg, rho_pair)
    if fraction == 0.0:
        return rho_pair
    return mix([(1.0 - fraction, rho_pair), (fraction, MAXIMALLY_MIXED)])


def build_rates(cfg: ExperimentConfig) -> SourceRates:
    return SourceRates(
        p_pair=cfg["rates.p_pair"],
        p_s_single=cfg["rates.p_s_single"],
        p_as_single=cfg["rates.p_as_single"],
        p_triple=cfg["rates.p_triple"],
        eta_s=cfg["rates.eta_s"],
        eta_as=cfg["rates.eta_as"],
        dark_s=cfg["rates.dark_s"],
        dark_as=cfg["rates.dark_as"],
        rep_period_ns=cfg["rates.rep_period_ns"],
    )


def build_stokes_singles_state(cfg: ExperimentConfig) -> JonesVector:
    """Polarization of uncorrelated Stokes singles (one-photon scattering)."""
    return raman_singles_polarization(build_laser(cfg), build_orientation(cfg))


def build_chsh_settings(cfg: ExperimentConfig, rho: DensityMatrix4) -> ChshSettings:
    policy = cfg["chsh.angle_policy"]
    if policy == "canonical":
        return ChshSettings.canonical()
    if policy == "explicit":
        return ChshSettings(
            cfg["chsh.a_deg"],
            cfg["chsh.a_prime_deg"],
            cfg["chsh.b_deg"],
            cfg["chsh.b_prime_deg"],
        )
    return chsh_maximum(rho).settings


# ----------------------------------------------------------------------
# Preset catalog.


def _merge(*parts: dict) -> dict:
    out: dict[str, str] = {}
    for part in parts:
        out.update(part)
    return out


_CLEAN_PAIR_RATES = {
    "rates.p_pair": "0.05",
    "rates.eta_s": "0.9",
    "rates.eta_as": "0.9",
}

_TABLE1_RATES = {
    "rates.p_pair": "0.01",
    "rates.p_s_single": "0.001",
    "rates.p_as_single": "0.001",
    "rates.eta_s": "0.7",
    "rates.eta_as": "0.7",
    "rates.dark_s": "1e-5",
    "rates.dark_as": "1e-5",
}

_G2_BASE = {
    "rates.eta_s": "0.9",
    "rates.eta_as": "0.9",
    "rates.dark_s": "1e-6",
    "rates.dark_as": "1e-6",
    "g2.max_delay": "10",
}


def _window(shift: str, theta: str) -> dict:
    return {"spectral.shift_cm1": shift, "crystal.theta_deg": theta}


PRESETS: dict[str, dict] = {
    # Coincidence polarization maps: four V/H channels per window.
    "fig3a": _merge(_window("900", "0"), _CLEAN_PAIR_RATES,
                    {"run.n_pulses": "2000000", "run.seed": "20107"}),
    "fig3b": _merge(_window("1332", "0"), _CLEAN_PAIR_RATES,
                    {"run.n_pulses": "2000000", "run.seed": "20207"}),
    "fig3c": _merge(_window("1900", "0"), _CLEAN_PAIR_RATES,
                    {"run.n_pulses": "2000000", "run.seed": "20307"}),
    "fig3d": _merge(_window("900", "45"), _CLEAN_PAIR_RATES,
                    {"run.n_pulses": "2000000", "run.seed": "20407"}),
    "fig3e": _merge(_window("1332", "45"), _CLEAN_PAIR_RATES,
                    {"run.n_pulses": "2000000", "run.seed": "20507"}),
    "fig3f": _merge(_window("1900", "45"), _CLEAN_PAIR_RATES,
                    {"run.n_pulses": "2000000", "run.seed": "20607"}),
    # CHSH table rows. The 45-degree rows use the canonical angles; the
    # 0-degree rows use the per-state optimum. The resonance rows model
    # the three-photon background as an unpolarized admixture tuned to a
    # post-selected purity of 0.65, with in-phase path amplitudes.
    "table1-900-theta0": _merge(
        _window("900", "0"), _TABLE1_RATES,
        {"simulate.channels": "chsh", "chsh.angle_policy": "optimal",
         "run.n_pulses": "1000000", "run.seed": "31001"}),
    "table1-900-theta45": _merge(
        _window("900", "45"), _TABLE1_RATES,
        {"simulate.channels": "chsh", "chsh.angle_policy": "canonical",
         "run.n_pulses": "4000000", "run.seed": "31045"}),
    "table1-1332-theta0": _merge(
        _window("1332", "0"),
        {"rates.p_pair": "0.01", "rates.eta_s": "0.7", "rates.eta_as": "0.7",
         "rates.dark_s": "1e-6", "rates.dark_as": "1e-6",
         "weights.in_phase": "true", "background.purity_target": "0.65",
         "simulate.channels": "chsh", "chsh.angle_policy": "optimal",
         "run.n_pulses": "2000000", "run.seed": "31320"}),
    "table1-1332-theta45": _merge(
        _window("1332", "45"),
        {"rates.p_pair": "0.01", "rates.eta_s": "0.7", "rates.eta_as": "0.7",
         "rates.dark_s": "1e-6", "rates.dark_as": "1e-6",
         "weights.in_phase": "true", "background.purity_target": "0.65",
         "simulate.channels": "chsh", "chsh.angle_policy": "canonical",
         "run.n_pulses": "2000000", "run.seed": "31345"}),
    "table1-1900-theta0": _merge(
        _window("1900", "0"),
        {"rates.p_pair": "1e-5", "rates.p_s_single": "0.01",
         "rates.p_as_single": "0.01", "rates.eta_s": "0.7", "rates.eta_as": "0.7",
         "rates.dark_s": "1e-5", "rates.dark_as": "1e-5",
         "simulate.channels": "chsh", "chsh.angle_policy": "optimal",
         "run.n_pulses": "4000000", "run.seed": "31900"}),
    "table1-1900-theta45": _merge(
        _window("1900", "45"), _TABLE1_RATES,
        {"simulate.channels": "chsh", "chsh.angle_policy": "canonical",
         "run.n_pulses": "4000000", "run.seed": "31945"}),
    # Tomography runs.
    "tomo-900-theta0": _merge(
        _window("900", "0"), _CLEAN_PAIR_RATES,
        {"simulate.channels": "tomo", "run.n_pulses": "2500000",
         "run.seed": "41001"}),
    "tomo-resonance": _merge(
        _window("1332", "0"), _CLEAN_PAIR_RATES,
        {"weights.in_phase": "true", "background.purity_target": "0.65",
         "simulate.channels": "tomo", "run.n_pulses": "2500000",
         "run.seed": "41320"}),
    # Correlation (g2) regimes.
    "g2-singles-only": _merge(
        _G2_BASE,
        {"rates.p_pair": "0", "rates.p_s_single": "0.01",
         "rates.p_as_single": "0.01", "run.n_pulses": "5000000",
         "run.seed": "51001"}),
    "g2-accidental": _merge(
        _G2_BASE,
        {"rates.p_pair": "1e-4", "rates.p_s_single": "0.01",
         "rates.p_as_single": "0.01", "run.n_pulses": "10000000",
         "run.seed": "51002"}),
    "g2-pair-dominant": _merge(
        _G2_BASE,
        {"rates.p_pair": "1e-3", "rates.p_s_single": "1e-3",
         "rates.p_as_single": "1e-3", "run.n_pulses": "2000000",
         "run.seed": "51003"}),
}

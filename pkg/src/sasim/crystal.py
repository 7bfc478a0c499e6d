"""Two-path source model for the pair polarization state.

The crystal response superposes an electronic four-wave-mixing path with a
phonon-mediated path. In the transverse plane the electronic susceptibility
is isotropic (a multiple of the identity), while the phonon path couples
through the single in-plane component of the triply degenerate optical
phonon, which in the crystal frame exchanges V and H.

Lab frame: ``theta`` is the angle between the crystal [100] axis and the
lab V axis, with the beam along [001]. The lab-frame phonon tensor is the
active rotation ``R(theta)^T A R(theta)`` of the crystal-frame tensor
``A = [[0, 1], [1, 0]]``. At ``theta = 0`` the phonon path converts V
light to H; at ``theta = 45`` both paths emit V, so the pair is separable.

The relative size of the two paths versus the spectral window follows a
driven-oscillator model: the phonon-path amplitude is a complex Lorentzian
in the detuning from the phonon energy, and the electronic amplitude falls
off exponentially with the Raman shift. Neither scale is measured
directly, so the ratio is calibrated at a fixed anchor window (see
:meth:`WeightModelParams.calibrated`).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateInput
from .polarization import JonesVector, TwoPhotonState, normalize

LASER_WAVENUMBER_CM1 = 1e7 / 785.0  # 785 nm pump
DEFAULT_PHONON_CM1 = 1332.0
DEFAULT_PHONON_WIDTH_CM1 = 600.0
DEFAULT_DECAY_WIDTH_CM1 = 3000.0
DEFAULT_ANCHOR_SHIFT_CM1 = 900.0
# HH/VV weight ratio the model is pinned to at the anchor window.
DEFAULT_ANCHOR_WEIGHT_RATIO = 0.28 / 0.72


@dataclass(frozen=True)
class CrystalOrientation:
    """Crystal [100] axis angle (degrees) from the lab V axis.

    The physical response repeats every 90 degrees; ``reduced_deg`` gives
    the angle folded into [0, 90). Tensor-valued operations keep the raw
    angle because the tensor itself flips sign across periods even though
    all outcome probabilities are identical.
    """

    theta_deg: float

    @property
    def reduced_deg(self) -> float:
        return self.theta_deg % 90.0


@dataclass(frozen=True)
class SpectralConfig:
    """Spectral window of a pair measurement, all values in cm^-1."""

    shift: float
    omega_laser: float = LASER_WAVENUMBER_CM1
    omega_phonon: float = DEFAULT_PHONON_CM1
    gamma_phonon: float = DEFAULT_PHONON_WIDTH_CM1

    def __post_init__(self):
        if self.shift <= 0.0:
            raise ValueError("shift must be positive")
        if self.gamma_phonon <= 0.0:
            raise ValueError("gamma_phonon must be positive")
        if self.shift >= self.omega_laser:
            raise ValueError("shift must be below the laser wavenumber")
        w_s = self.omega_laser - self.shift
        w_as = 2.0 * self.omega_laser - w_s
        # Pin 2*omega_laser == omega_stokes + omega_antistokes bit-exactly,
        # nudging the anti-Stokes value by at most a few ulp if rounding
        # broke the identity.
        for _ in range(4):
            residual = 2.0 * self.omega_laser - (w_s + w_as)
            if residual == 0.0:
                break
            w_as += residual
        object.__setattr__(self, "_omega_stokes", w_s)
        object.__setattr__(self, "_omega_antistokes", w_as)

    @property
    def omega_stokes(self) -> float:
        return self._omega_stokes

    @property
    def omega_antistokes(self) -> float:
        return self._omega_antistokes

    @property
    def detuning(self) -> float:
        """omega_phonon - shift; zero on the phonon resonance."""
        return self.omega_phonon - self.shift


@dataclass(frozen=True)
class PathAmplitudes:
    """Relative complex amplitudes of the electronic and phonon paths."""

    electronic: complex
    raman: complex

    def __post_init__(self):
        if abs(self.electronic) == 0.0 and abs(self.raman) == 0.0:
            raise DegenerateInput("both path amplitudes are zero")


@dataclass(frozen=True)
class WeightModelParams:
    """Parameters of the two-path weight model.

    ``g_raman_mag`` carries the anchor phase convention: the phonon-path
    amplitude at ``anchor_shift_cm1`` has phase ``relative_phase_rad``
    relative to the (real) electronic amplitude. With ``in_phase`` set,
    the Lorentzian phase is dropped entirely and only its magnitude is
    kept, which models the two paths as interfering in phase at every
    shift.
    """

    g_raman_mag: float
    g_electronic: float = 1.0
    relative_phase_rad: float = 0.0
    decay_width_cm1: float = DEFAULT_DECAY_WIDTH_CM1
    anchor_shift_cm1: float = DEFAULT_ANCHOR_SHIFT_CM1
    in_phase: bool = False

    def __post_init__(self):
        if self.g_raman_mag < 0.0:
            raise ValueError("g_raman_mag must be non-negative")
        if self.decay_width_cm1 <= 0.0:
            raise ValueError("decay_width_cm1 must be positive")

    @classmethod
    def calibrated(
        cls,
        gamma_phonon: float = DEFAULT_PHONON_WIDTH_CM1,
        omega_phonon: float = DEFAULT_PHONON_CM1,
        decay_width_cm1: float = DEFAULT_DECAY_WIDTH_CM1,
        relative_phase_rad: float = 0.0,
        g_electronic: float = 1.0,
        anchor_shift_cm1: float = DEFAULT_ANCHOR_SHIFT_CM1,
        anchor_weight_ratio: float = DEFAULT_ANCHOR_WEIGHT_RATIO,
        in_phase: bool = False,
    ) -> "WeightModelParams":
        """Fix ``g_raman_mag`` so that at the anchor shift (V-polarized
        pump, crystal axes along the lab axes) the HH/VV weight ratio
        equals ``anchor_weight_ratio``."""
        delta = omega_phonon - anchor_shift_cm1
        half_width = 0.5 * gamma_phonon
        a_e = g_electronic * np.exp(-anchor_shift_cm1 / decay_width_cm1)
        g_mag = np.sqrt(anchor_weight_ratio) * a_e * np.hypot(delta, half_width)
        return cls(
            g_raman_mag=float(g_mag),
            g_electronic=g_electronic,
            relative_phase_rad=relative_phase_rad,
            decay_width_cm1=decay_width_cm1,
            anchor_shift_cm1=anchor_shift_cm1,
            in_phase=in_phase,
        )

    def with_in_phase(self, in_phase: bool) -> "WeightModelParams":
        return replace(self, in_phase=in_phase)


def raman_tensor_lab(orientation: CrystalOrientation) -> np.ndarray:
    """Phonon-path coupling tensor in lab (V, H) components.

    Equal to ``R(theta)^T [[0, 1], [1, 0]] R(theta)``, i.e.
    ``[[sin 2t, cos 2t], [cos 2t, -sin 2t]]``.
    """
    t2 = 2.0 * np.deg2rad(orientation.theta_deg)
    s, c = np.sin(t2), np.cos(t2)
    out = np.array([[s, c], [c, -s]])
    out.setflags(write=False)
    return out


def electronic_tensor_lab(orientation: CrystalOrientation) -> np.ndarray:
    """Electronic-path coupling tensor; isotropic, so the identity for
    every orientation."""
    out = np.eye(2)
    out.setflags(write=False)
    return out


def path_amplitudes(spectral: SpectralConfig, model: WeightModelParams) -> PathAmplitudes:
    """Evaluate the two path amplitudes for one spectral window.

    The phonon path is a complex Lorentzian ``g_R / (delta - i gamma/2)``
    in the detuning ``delta = omega_phonon - shift`` (maximal magnitude on
    resonance), phase-anchored as described on :class:`WeightModelParams`.
    The electronic path is real and decays as ``exp(-shift / w)``.
    """
    half_width = 0.5 * spectral.gamma_phonon
    anchor_delta = spectral.omega_phonon - model.anchor_shift_cm1
    phase = model.relative_phase_rad + np.angle(anchor_delta - 1j * half_width)
    a_r = model.g_raman_mag * np.exp(1j * phase) / (spectral.detuning - 1j * half_width)
    a_e = model.g_electronic * np.exp(-spectral.shift / model.decay_width_cm1)
    if model.in_phase:
        a_r = abs(a_r) * np.exp(1j * model.relative_phase_rad)
    return PathAmplitudes(complex(a_e), complex(a_r))


def generate_sas_state(
    laser: JonesVector,
    orientation: CrystalOrientation,
    amplitudes: PathAmplitudes,
) -> TwoPhotonState:
    """Pair state emitted by the superposition of the two paths.

    Each path imprints its tensor on both photons of the pair:
    ``A_e (chi L) x (chi L) + A_R (alpha L) x (alpha L)``, normalized.
    Raises :class:`DegenerateInput` if the two contributions cancel.
    """
    chi_out = electronic_tensor_lab(orientation) @ laser.components
    alpha_out = raman_tensor_lab(orientation) @ laser.components
    raw = amplitudes.electronic * np.kron(chi_out, chi_out)
    raw = raw + amplitudes.raman * np.kron(alpha_out, alpha_out)
    if np.linalg.norm(raw) < 1e-12:
        raise DegenerateInput("path contributions cancel for this orientation")
    return TwoPhotonState(normalize(raw))


def raman_singles_polarization(
    laser: JonesVector, orientation: CrystalOrientation
) -> JonesVector:
    """Polarization of ordinary one-photon Stokes scattering.

    The phonon tensor is orthogonal, so the output is always well defined
    for a normalized pump.
    """
    return JonesVector(normalize(raman_tensor_lab(orientation) @ laser.components))

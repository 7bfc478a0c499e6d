"""Jones-calculus model of the per-arm detection chain.

Each arm consists of a half-wave plate, then a quarter-wave plate, then a
polarizing beamsplitter, in that propagation order. The PBS transmits H
and reflects V. Waveplate matrices use the symmetric phase convention
``R(t) diag(e^{-i d/2}, e^{+i d/2}) R(-t)`` so they are special-unitary.

A measurement outcome is labelled by the PBS output port; the "+" port of
a setting is whichever port the setting selects and "-" is the other one.
The default everywhere is the reflected (V) port with both waveplates at
zero, which measures the raw V/H basis. ``AnalyzerSetting.linear(a, b)``
builds the common case of plain linear analyzers at angles ``a`` and
``b`` (the half-wave plate rotates the target polarization onto V).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polarization import DensityMatrix4

TRANSMITTED = "transmitted"
REFLECTED = "reflected"
_PORT_VECTORS = {
    TRANSMITTED: np.array([0.0, 1.0], dtype=complex),  # H passes through
    REFLECTED: np.array([1.0, 0.0], dtype=complex),
}
_OTHER_PORT = {TRANSMITTED: REFLECTED, REFLECTED: TRANSMITTED}


def _rotation(theta_rad: float) -> np.ndarray:
    c, s = np.cos(theta_rad), np.sin(theta_rad)
    return np.array([[c, -s], [s, c]])


def waveplate_jones(angle_deg: float, retardance_rad: float) -> np.ndarray:
    """Waveplate matrix for a fast axis at ``angle_deg`` from V."""
    r = _rotation(np.deg2rad(angle_deg))
    core = np.diag([np.exp(-0.5j * retardance_rad), np.exp(0.5j * retardance_rad)])
    return r @ core @ r.T


def hwp_jones(angle_deg: float) -> np.ndarray:
    """Half-wave plate; maps linear polarization at ``p`` to ``2*angle - p``."""
    return waveplate_jones(angle_deg, np.pi)


def qwp_jones(angle_deg: float) -> np.ndarray:
    """Quarter-wave plate; at 45 degrees it turns V into circular light."""
    return waveplate_jones(angle_deg, np.pi / 2)


@dataclass(frozen=True)
class WaveplateSetting:
    """Fast-axis angles (degrees from V); both are 180-degree periodic."""

    hwp_deg: float = 0.0
    qwp_deg: float = 0.0


@dataclass(frozen=True)
class ArmSetting:
    """Waveplate angles plus the PBS port counted as the "+" outcome."""

    plates: WaveplateSetting = WaveplateSetting()
    port: str = REFLECTED

    def __post_init__(self):
        if self.port not in _PORT_VECTORS:
            raise ValueError(f"unknown PBS port {self.port!r}")


@dataclass(frozen=True)
class AnalyzerSetting:
    """One joint measurement configuration for the two arms."""

    stokes: ArmSetting = ArmSetting()
    antistokes: ArmSetting = ArmSetting()

    @classmethod
    def linear(cls, stokes_deg: float, antistokes_deg: float) -> "AnalyzerSetting":
        """Linear analyzers: "+" projects onto the given angle from V."""
        return cls(
            stokes=ArmSetting(WaveplateSetting(hwp_deg=stokes_deg / 2.0)),
            antistokes=ArmSetting(WaveplateSetting(hwp_deg=antistokes_deg / 2.0)),
        )

    @classmethod
    def vh(cls) -> "AnalyzerSetting":
        return cls.linear(0.0, 0.0)


def analyzed_vector(plates: WaveplateSetting, port: str) -> np.ndarray:
    """Single-photon state the chain maps onto the given PBS port."""
    chain = qwp_jones(plates.qwp_deg) @ hwp_jones(plates.hwp_deg)
    return chain.conj().T @ _PORT_VECTORS[port]


def arm_projector(plates: WaveplateSetting, port: str) -> np.ndarray:
    """Rank-1 projector measured by one arm for one PBS port."""
    e = analyzed_vector(plates, port)
    return np.outer(e, e.conj())


def joint_projector(setting: AnalyzerSetting) -> np.ndarray:
    """Projector for a joint click on the two selected ports."""
    return np.kron(
        arm_projector(setting.stokes.plates, setting.stokes.port),
        arm_projector(setting.antistokes.plates, setting.antistokes.port),
    )


def joint_probability(rho: DensityMatrix4, setting: AnalyzerSetting) -> float:
    """Born probability ``Tr[rho (P_S x P_aS)]`` of the selected ports."""
    return float(np.trace(rho.entries @ joint_projector(setting)).real)


def outcome_probabilities(rho: DensityMatrix4, setting: AnalyzerSetting) -> np.ndarray:
    """Probabilities of the four port outcomes, ordered (pp, pm, mp, mm).

    The first slot of each label is the Stokes arm; "p" is the setting's
    selected port, "m" the other one. The four values sum to one for any
    physical state.
    """
    s_port = setting.stokes.port
    a_port = setting.antistokes.port
    probs = np.empty(4)
    for i, sp in enumerate((s_port, _OTHER_PORT[s_port])):
        p_s = arm_projector(setting.stokes.plates, sp)
        for j, ap in enumerate((a_port, _OTHER_PORT[a_port])):
            p_a = arm_projector(setting.antistokes.plates, ap)
            probs[2 * i + j] = np.trace(rho.entries @ np.kron(p_s, p_a)).real
    return probs


def flip_port(setting: AnalyzerSetting, arm: str) -> AnalyzerSetting:
    """Copy of ``setting`` with one arm's selected port swapped."""
    if arm == "stokes":
        return AnalyzerSetting(
            stokes=ArmSetting(setting.stokes.plates, _OTHER_PORT[setting.stokes.port]),
            antistokes=setting.antistokes,
        )
    if arm == "antistokes":
        return AnalyzerSetting(
            stokes=setting.stokes,
            antistokes=ArmSetting(
                setting.antistokes.plates, _OTHER_PORT[setting.antistokes.port]
            ),
        )
    raise ValueError(f"unknown arm {arm!r}")

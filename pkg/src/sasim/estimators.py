"""Correlation and CHSH estimators for coincidence counts.

The CHSH combination used throughout is

    S = E(a, b) - E(a, b') + E(a', b) + E(a', b')

with linear analyzer angles measured from V. The canonical angle set
(0, 45, 22.5, 67.5) maximizes S for phi+ like states; per-state optimal
angles are available from :func:`predict_optimal_S` (closed form for
states of the form c1|VV> + c2|HH>) and :func:`chsh_maximum` (numeric
search for arbitrary density matrices).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .analyzer import AnalyzerSetting
from .errors import InsufficientData
from .polarization import DensityMatrix4, TwoPhotonState
from .simulate import CoincidenceCounts, ValueWithError

CHSH_PAIR_LABELS = ("ab", "abp", "apb", "apbp")
# Signs of the four E values in the CHSH sum, same order as the labels.
CHSH_SIGNS = (1.0, -1.0, 1.0, 1.0)


def correlation_E(counts: CoincidenceCounts) -> ValueWithError:
    """Correlation value ``(n_pp + n_mm - n_pm - n_mp) / total``.

    The standard error propagates independent Poisson fluctuations of the
    four counters. Raises :class:`InsufficientData` for zero total counts.
    """
    total = counts.total()
    if total == 0:
        raise InsufficientData("no coincidences recorded for this setting")
    signs = np.array([1.0, -1.0, -1.0, 1.0])
    n = counts.as_array().astype(float)
    value = float(signs @ n) / total
    var = float(np.sum(n * (signs - value) ** 2)) / total**2
    return ValueWithError(value=value, stderr=np.sqrt(var))


def chsh_S(
    e_ab: ValueWithError,
    e_abp: ValueWithError,
    e_apb: ValueWithError,
    e_apbp: ValueWithError,
) -> ValueWithError:
    """CHSH sum of the four correlation values with quadrature errors."""
    values = (e_ab.value, e_abp.value, e_apb.value, e_apbp.value)
    errors = (e_ab.stderr, e_abp.stderr, e_apb.stderr, e_apbp.stderr)
    s = sum(sign * v for sign, v in zip(CHSH_SIGNS, values))
    return ValueWithError(value=s, stderr=float(np.hypot.reduce(errors)))


@dataclass(frozen=True)
class ChshSettings:
    """The two analyzer bases per arm of a CHSH measurement (degrees)."""

    a_deg: float
    a_prime_deg: float
    b_deg: float
    b_prime_deg: float

    @classmethod
    def canonical(cls) -> "ChshSettings":
        return cls(0.0, 45.0, 22.5, 67.5)

    def angle_pairs(self) -> list[tuple[str, float, float]]:
        """The four (label, stokes angle, anti-Stokes angle) pairs."""
        return [
            ("ab", self.a_deg, self.b_deg),
            ("abp", self.a_deg, self.b_prime_deg),
            ("apb", self.a_prime_deg, self.b_deg),
            ("apbp", self.a_prime_deg, self.b_prime_deg),
        ]

    def setting_pairs(self) -> list[tuple[str, AnalyzerSetting]]:
        return [
            (label, AnalyzerSetting.linear(sa, aa))
            for label, sa, aa in self.angle_pairs()
        ]


def chsh_from_counts(counts_by_pair) -> tuple[ValueWithError, dict]:
    """CHSH value from a mapping of pair label to CoincidenceCounts."""
    e_values = {label: correlation_E(counts_by_pair[label]) for label in CHSH_PAIR_LABELS}
    s = chsh_S(*(e_values[label] for label in CHSH_PAIR_LABELS))
    return s, e_values


def correlation_submatrix(rho: DensityMatrix4) -> np.ndarray:
    """2x2 correlation block reachable with linear analyzers.

    Component (i, j) is ``Tr[rho sigma_i x sigma_j]`` for i, j in (z, x),
    with sigma_z = |V><V| - |H><H| and sigma_x = |V><H| + |H><V|.
    """
    sz = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    paulis = (sz, sx)
    m = np.empty((2, 2))
    for i, si in enumerate(paulis):
        for j, sj in enumerate(paulis):
            m[i, j] = np.trace(rho.entries @ np.kron(si, sj)).real
    return m


def analytic_E(rho: DensityMatrix4, stokes_deg: float, antistokes_deg: float) -> float:
    """Born-rule correlation value for linear analyzers at the two angles."""
    m = correlation_submatrix(rho)
    u = _analyzer_direction(stokes_deg)
    v = _analyzer_direction(antistokes_deg)
    return float(u @ m @ v)


def _analyzer_direction(angle_deg: float) -> np.ndarray:
    a2 = 2.0 * np.deg2rad(angle_deg)
    return np.array([np.cos(a2), np.sin(a2)])


def analytic_chsh(rho: DensityMatrix4, settings: ChshSettings) -> float:
    """Noise-free CHSH value of a state at fixed analyzer angles."""
    return float(
        sum(
            sign * analytic_E(rho, sa, aa)
            for sign, (_, sa, aa) in zip(CHSH_SIGNS, settings.angle_pairs())
        )
    )


@dataclass(frozen=True)
class OptimalChsh:
    """A CHSH optimum: the value and the analyzer angles that reach it."""

    s_value: float
    settings: ChshSettings


def predict_optimal_S(state: TwoPhotonState) -> OptimalChsh:
    """Best CHSH value of a state ``c1|VV> + c2|HH>`` in closed form.

    With t = 2|c1||c2| the maximum over linear analyzers is
    ``2 sqrt(1 + t^2)``, reached at a = 0, a' = 45 and
    b = atan(t)/2, b' = 90 - atan(t)/2. The value is phase independent;
    the returned angles are the optimum for real, same-sign coefficients.
    States with VH or HV amplitude need :func:`chsh_maximum` instead.
    """
    amps = state.amplitudes
    if max(abs(amps[1]), abs(amps[2])) > 1e-9:
        raise ValueError(
            "state has cross-polarized amplitudes; use chsh_maximum on its "
            "density matrix"
        )
    t = 2.0 * abs(amps[0]) * abs(amps[3])
    s_value = 2.0 * np.sqrt(1.0 + t * t)
    half_chi = np.degrees(np.arctan(t)) / 2.0
    settings = ChshSettings(0.0, 45.0, half_chi, 90.0 - half_chi)
    return OptimalChsh(s_value=float(s_value), settings=settings)


def chsh_maximum(rho: DensityMatrix4, restarts: int = 6) -> OptimalChsh:
    """Numerically maximized CHSH value over the four analyzer angles.

    Gradient-free search (Powell) from the canonical angles plus a few
    deterministic perturbations; the best restart wins. Matches the
    closed form of :func:`predict_optimal_S` on c1|VV> + c2|HH> states.
    """
    m = correlation_submatrix(rho)

    def negative_s(angles: np.ndarray) -> float:
        a, ap, b, bp = (np.deg2rad(2.0 * x) for x in angles)
        u_a = np.array([np.cos(a), np.sin(a)])
        u_ap = np.array([np.cos(ap), np.sin(ap)])
        v_b = np.array([np.cos(b), np.sin(b)])
        v_bp = np.array([np.cos(bp), np.sin(bp)])
        s = u_a @ m @ v_b - u_a @ m @ v_bp + u_ap @ m @ v_b + u_ap @ m @ v_bp
        return -s

    canonical = np.array([0.0, 45.0, 22.5, 67.5])
    rng = np.random.default_rng(20240229)
    starts = [canonical]
    starts.extend(canonical + rng.uniform(-40.0, 40.0, size=4) for _ in range(restarts))

    best = None
    for start in starts:
        result = optimize.minimize(
            negative_s,
            start,
            method="Powell",
            options={"xtol": 1e-12, "ftol": 1e-14, "maxiter": 20000},
        )
        if best is None or result.fun < best.fun:
            best = result
    a, ap, b, bp = (float(x % 180.0) for x in best.x)
    return OptimalChsh(s_value=float(-best.fun), settings=ChshSettings(a, ap, b, bp))

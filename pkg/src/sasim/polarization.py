"""Polarization-qubit algebra for photon pairs.

Conventions used by every module in this package:

* Single-photon (Jones) components are ordered (V, H).
* Two-photon amplitudes are ordered (VV, VH, HV, HH); the first slot is
  always the Stokes arm, the second the anti-Stokes arm.
* ``normalize`` fixes the global phase by making the first component of
  nonzero magnitude real and positive, so equal states compare equal.

All values are immutable after construction and all operations are pure
functions, so they are safe to share between concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InvalidMixture

NORM_TOL = 1e-12
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-9

BASIS_LABELS = ("VV", "VH", "HV", "HH")
BELL_LABELS = ("phi_plus", "phi_minus", "psi_plus", "psi_minus")


def normalize(components) -> np.ndarray:
    """Scale a complex vector to unit norm and fix its global phase.

    The first component with magnitude above ``NORM_TOL`` is rotated to be
    real and positive. Raises :class:`DegenerateInput` for a zero vector.
    """
    v = np.asarray(components, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateInput("cannot normalize a zero or non-finite vector")
    u = v / norm
    lead = u[np.flatnonzero(np.abs(u) > NORM_TOL)[0]]
    u = u * (lead.conjugate() / abs(lead))
    u.setflags(write=False)
    return u


def _frozen_array(values, shape, dtype=complex) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class JonesVector:
    """Single-photon polarization amplitudes in the (V, H) lab basis."""

    components: np.ndarray

    def __post_init__(self):
        v = _frozen_array(self.components, (2,))
        if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
            raise ValueError("JonesVector components must have unit norm")
        object.__setattr__(self, "components", v)

    @classmethod
    def linear(cls, angle_deg: float) -> "JonesVector":
        """Linear polarization at ``angle_deg`` measured from the V axis."""
        a = np.deg2rad(angle_deg)
        return cls(np.array([np.cos(a), np.sin(a)]))


V_POL = JonesVector(np.array([1.0, 0.0]))
H_POL = JonesVector(np.array([0.0, 1.0]))
D_POL = JonesVector(normalize([1.0, 1.0]))
A_POL = JonesVector(normalize([1.0, -1.0]))
R_POL = JonesVector(normalize([1.0, -1.0j]))
L_POL = JonesVector(normalize([1.0, 1.0j]))


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """Pure polarization state of one Stokes/anti-Stokes photon pair.

    Amplitudes are ordered (VV, VH, HV, HH) and must be normalized.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        a = _frozen_array(self.amplitudes, (4,))
        if abs(np.linalg.norm(a) - 1.0) > NORM_TOL:
            raise ValueError("TwoPhotonState amplitudes must have unit norm")
        object.__setattr__(self, "amplitudes", a)

    def probabilities(self) -> np.ndarray:
        """Outcome probabilities in the (VV, VH, HV, HH) basis."""
        return np.abs(self.amplitudes) ** 2


def schmidt_state(c_vv: complex, c_hh: complex, relative_phase: float = 0.0) -> TwoPhotonState:
    """State ``c_vv |VV> + c_hh e^{i phase} |HH>``, normalized."""
    amps = np.zeros(4, dtype=complex)
    amps[0] = c_vv
    amps[3] = c_hh * np.exp(1j * relative_phase)
    return TwoPhotonState(normalize(amps))


PHI_PLUS = TwoPhotonState(normalize([1.0, 0.0, 0.0, 1.0]))
PHI_MINUS = TwoPhotonState(normalize([1.0, 0.0, 0.0, -1.0]))
PSI_PLUS = TwoPhotonState(normalize([0.0, 1.0, 1.0, 0.0]))
PSI_MINUS = TwoPhotonState(normalize([0.0, 1.0, -1.0, 0.0]))

BELL_STATES = {
    "phi_plus": PHI_PLUS,
    "phi_minus": PHI_MINUS,
    "psi_plus": PSI_PLUS,
    "psi_minus": PSI_MINUS,
}


def tensor_product(stokes: JonesVector, antistokes: JonesVector) -> TwoPhotonState:
    """Separable pair state with amplitudes ``a[(i, j)] = s[i] * a[j]``."""
    return TwoPhotonState(np.kron(stokes.components, antistokes.components))


@dataclass(frozen=True, eq=False)
class DensityMatrix4:
    """4x4 density matrix on the (VV, VH, HV, HH) basis.

    Construction enforces Hermiticity, unit trace and positivity up to
    small floating-point tolerances (eigenvalues above ``-1e-9``).
    """

    entries: np.ndarray

    def __post_init__(self):
        m = _frozen_array(self.entries, (4, 4))
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix must be Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace must be 1, got {tr}")
        lowest = np.linalg.eigvalsh((m + m.conj().T) / 2).min()
        if lowest < EIGENVALUE_FLOOR:
            raise ValueError(f"density matrix has negative eigenvalue {lowest}")
        object.__setattr__(self, "entries", m)


MAXIMALLY_MIXED = DensityMatrix4(np.eye(4) / 4)


def density_from_pure(state: TwoPhotonState) -> DensityMatrix4:
    """Rank-1 projector ``|psi><psi|`` of a pure pair state."""
    a = state.amplitudes
    return DensityMatrix4(np.outer(a, a.conj()))


def mix(components) -> DensityMatrix4:
    """Convex combination of density matrices.

    ``components`` is an iterable of ``(weight, DensityMatrix4)`` pairs.
    Raises :class:`InvalidMixture` for negative weights or weights that do
    not sum to one within 1e-9.
    """
    components = list(components)
    if not components:
        raise InvalidMixture("mixture needs at least one component")
    weights = np.array([w for w, _ in components], dtype=float)
    if np.any(weights < 0.0):
        raise InvalidMixture(f"negative mixture weight: {weights.min()}")
    total = weights.sum()
    if abs(total - 1.0) > 1e-9:
        raise InvalidMixture(f"mixture weights sum to {total}, expected 1")
    out = np.zeros((4, 4), dtype=complex)
    for w, rho in components:
        out += w * rho.entries
    return DensityMatrix4(out)


def werner(p: float) -> DensityMatrix4:
    """Mixture ``p |phi+><phi+| + (1 - p) I/4``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidMixture(f"Werner weight must lie in [0, 1], got {p}")
    return mix([(p, density_from_pure(PHI_PLUS)), (1.0 - p, MAXIMALLY_MIXED)])


def purity(rho: DensityMatrix4) -> float:
    """Tr[rho^2]; 1 for pure states, 1/4 for the maximally mixed state."""
    m = rho.entries
    return float(np.trace(m @ m).real)


def fidelity_to_pure(rho: DensityMatrix4, state: TwoPhotonState) -> float:
    """Overlap ``<psi| rho |psi>``."""
    a = state.amplitudes
    return float((a.conj() @ rho.entries @ a).real)


# Rows express the Bell states phi+, phi-, psi+, psi- in the product basis.
_BELL_MATRIX = np.array(
    [
        [1.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, -1.0],
        [0.0, 1.0, 1.0, 0.0],
        [0.0, 1.0, -1.0, 0.0],
    ]
) / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class BellDecomposition:
    """Coefficients of a pair state on (phi+, phi-, psi+, psi-)."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = _frozen_array(self.coefficients, (4,))
        if abs(np.linalg.norm(c) - 1.0) > NORM_TOL:
            raise ValueError("Bell coefficients must have unit norm")
        object.__setattr__(self, "coefficients", c)

    def weights(self) -> np.ndarray:
        """Squared magnitudes, ordered (phi+, phi-, psi+, psi-)."""
        return np.abs(self.coefficients) ** 2


def bell_decomposition(state: TwoPhotonState) -> BellDecomposition:
    """Expand a pair state in the Bell basis.

    The change of basis is unitary: the coefficient norm equals the input
    state norm.
    """
    return BellDecomposition(_BELL_MATRIX.conj() @ state.amplitudes)

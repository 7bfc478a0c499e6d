"""Two-qubit state reconstruction from coincidence counts.

The default measurement set pairs the three analyzer bases per arm
(V/H, diagonal, circular), nine waveplate settings in total. Every
setting contributes all four PBS port outcomes, giving 36 measured
probabilities. A sixteen-setting reduction in the style of single-port
tomography is available for speed; it uses only the selected-port count
of each setting and normalizes the flux on the leading complete basis.

Reconstruction is either plain least squares (fast, but the result may
have small negative eigenvalues) or maximum likelihood over physical
states. The likelihood ascent is the iterated R rho R fixed point with a
diluted fallback step, so the log-likelihood never decreases; sets whose
projectors do not sum to a multiple of the identity fall back to a
quasi-Newton search over a Cholesky factorization of rho.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .analyzer import (
    AnalyzerSetting,
    ArmSetting,
    WaveplateSetting,
    arm_projector,
    outcome_probabilities,
)
from .errors import IncompleteSettings, InsufficientData
from .polarization import DensityMatrix4, MAXIMALLY_MIXED

# Waveplate angles realizing the three single-arm measurement bases, with
# the reflected port projecting onto V, D and R respectively.
BASIS_PLATES = {
    "Z": WaveplateSetting(hwp_deg=0.0, qwp_deg=0.0),
    "X": WaveplateSetting(hwp_deg=22.5, qwp_deg=0.0),
    "Y": WaveplateSetting(hwp_deg=0.0, qwp_deg=45.0),
}
BASIS_ORDER = ("Z", "X", "Y")

# Waveplate angles that bring each analyzed state onto the reflected (V)
# port, so single-state settings never need the transmitted port and the
# counts CSV schema stays lossless.
_STATE_PLATES = {
    "V": WaveplateSetting(hwp_deg=0.0, qwp_deg=0.0),
    "H": WaveplateSetting(hwp_deg=45.0, qwp_deg=0.0),
    "D": WaveplateSetting(hwp_deg=22.5, qwp_deg=0.0),
    "A": WaveplateSetting(hwp_deg=67.5, qwp_deg=0.0),
    "R": WaveplateSetting(hwp_deg=0.0, qwp_deg=45.0),
    "L": WaveplateSetting(hwp_deg=0.0, qwp_deg=135.0),
}

# Classic sixteen projector pairs; the first four form a complete basis,
# which fixes the flux normalization.
JAMES_16_STATES = (
    ("H", "H"), ("H", "V"), ("V", "V"), ("V", "H"),
    ("R", "H"), ("R", "V"), ("D", "V"), ("D", "H"),
    ("D", "R"), ("D", "D"), ("R", "D"), ("H", "D"),
    ("V", "D"), ("V", "L"), ("H", "L"), ("R", "L"),
)


def _arm_for_state(label: str) -> ArmSetting:
    return ArmSetting(_STATE_PLATES[label])


def tomography_settings(mode: str = "36") -> list[tuple[str, AnalyzerSetting]]:
    """Labelled analyzer settings for the requested tomography mode."""
    if mode == "36":
        return [
            (
                s_basis + a_basis,
                AnalyzerSetting(
                    stokes=ArmSetting(BASIS_PLATES[s_basis]),
                    antistokes=ArmSetting(BASIS_PLATES[a_basis]),
                ),
            )
            for s_basis in BASIS_ORDER
            for a_basis in BASIS_ORDER
        ]
    if mode == "16":
        return [
            (
                s_state + a_state,
                AnalyzerSetting(
                    stokes=_arm_for_state(s_state),
                    antistokes=_arm_for_state(a_state),
                ),
            )
            for s_state, a_state in JAMES_16_STATES
        ]
    raise ValueError(f"unknown tomography mode {mode!r}")


def _setting_projectors(setting: AnalyzerSetting) -> list[np.ndarray]:
    """Projectors of the four port outcomes, ordered (pp, pm, mp, mm)."""
    from .analyzer import _OTHER_PORT  # same ordering as outcome_probabilities

    s_port = setting.stokes.port
    a_port = setting.antistokes.port
    out = []
    for sp in (s_port, _OTHER_PORT[s_port]):
        p_s = arm_projector(setting.stokes.plates, sp)
        for ap in (a_port, _OTHER_PORT[a_port]):
            p_a = arm_projector(setting.antistokes.plates, ap)
            out.append(np.kron(p_s, p_a))
    return out


@dataclass(frozen=True)
class TomographyRow:
    projector: np.ndarray
    count: float
    frequency: float


class TomographySet:
    """Measurement rows (projector, count, probability estimate)."""

    def __init__(self, rows: list[TomographyRow]):
        if not rows:
            raise InsufficientData("tomography set is empty")
        self.rows = rows
        self.total_count = float(sum(row.count for row in rows))

    @classmethod
    def from_counts(cls, pairs, use_all_ports: bool = True) -> "TomographySet":
        """Build from ``(AnalyzerSetting, CoincidenceCounts)`` pairs.

        With ``use_all_ports`` each setting contributes its four port
        outcomes, normalized per setting. Otherwise only the selected-port
        count enters and the flux is normalized on the shortest leading
        group of settings whose projectors sum to the identity.
        """
        pairs = list(pairs)
        rows: list[TomographyRow] = []
        if use_all_ports:
            for setting, counts in pairs:
                total = counts.total()
                if total == 0:
                    raise InsufficientData("a tomography setting has zero counts")
                projectors = _setting_projectors(setting)
                for projector, n in zip(projectors, counts.as_array()):
                    rows.append(TomographyRow(projector, float(n), float(n) / total))
            return cls(rows)

        from .analyzer import joint_projector

        # The flux normalization comes from the leading group of settings
        # whose selected-port projectors sum to the identity.
        group_sum = np.zeros((4, 4), dtype=complex)
        running = 0.0
        norm_count = None
        for setting, counts in pairs:
            group_sum = group_sum + joint_projector(setting)
            running += counts.n_pp
            if np.max(np.abs(group_sum - np.eye(4))) < 1e-9:
                norm_count = running
                break
        if norm_count is None or norm_count == 0.0:
            raise IncompleteSettings(
                "single-port mode needs a leading group of settings forming a "
                "complete basis with nonzero counts"
            )
        for setting, counts in pairs:
            rows.append(
                TomographyRow(
                    joint_projector(setting),
                    float(counts.n_pp),
                    counts.n_pp / norm_count,
                )
            )
        return cls(rows)

    @classmethod
    def from_probabilities(cls, settings, probabilities) -> "TomographySet":
        """Build from exact per-setting outcome probabilities.

        ``probabilities`` has one row of four port probabilities per
        setting. Useful for noise-free reconstruction checks.
        """
        rows: list[TomographyRow] = []
        for setting, probs in zip(settings, probabilities):
            projectors = _setting_projectors(setting)
            for projector, p in zip(projectors, np.asarray(probs, dtype=float)):
                rows.append(TomographyRow(projector, float(p), float(p)))
        return cls(rows)


def born_probabilities(rho: DensityMatrix4, settings) -> np.ndarray:
    """Exact outcome probabilities of each setting, one row per setting."""
    return np.array([outcome_probabilities(rho, s) for s in settings])


def _pauli_products() -> list[np.ndarray]:
    s0 = np.eye(2, dtype=complex)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    singles = (s0, sx, sy, sz)
    return [np.kron(a, b) / 2.0 for a in singles for b in singles]


_PAULI_BASIS = _pauli_products()


def measurement_matrix(tset: TomographySet) -> np.ndarray:
    """Real design matrix mapping Pauli components to probabilities."""
    return np.array(
        [[np.trace(row.projector @ b).real for b in _PAULI_BASIS] for row in tset.rows]
    )


def tomography_linear(tset: TomographySet) -> np.ndarray:
    """Least-squares inversion of the Born probabilities.

    Returns a Hermitian, unit-trace 4x4 array. Positivity is not
    guaranteed; pass the result through :func:`project_to_physical` or use
    :func:`tomography_mle` when a physical state is required. Raises
    :class:`IncompleteSettings` if the settings do not span the operator
    space.
    """
    a = measurement_matrix(tset)
    if np.linalg.matrix_rank(a) < 16:
        raise IncompleteSettings("measurement settings are rank deficient")
    freqs = np.array([row.frequency for row in tset.rows])
    x, *_ = np.linalg.lstsq(a, freqs, rcond=None)
    rho = sum(coeff * b for coeff, b in zip(x, _PAULI_BASIS))
    rho = (rho + rho.conj().T) / 2.0
    trace = np.trace(rho).real
    if abs(trace) < 1e-12:
        raise IncompleteSettings("reconstructed trace vanished")
    return rho / trace


def project_to_physical(rho_like: np.ndarray) -> DensityMatrix4:
    """Closest-by-clipping physical state: negative eigenvalues to zero."""
    m = np.asarray(rho_like, dtype=complex)
    m = (m + m.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, 0.0, None)
    if vals.sum() <= 0.0:
        return MAXIMALLY_MIXED
    vals = vals / vals.sum()
    return DensityMatrix4((vecs * vals) @ vecs.conj().T)


@dataclass(frozen=True)
class MleResult:
    """Outcome of a likelihood ascent.

    ``converged`` is False when the iteration cap was reached first; the
    best iterate is still returned.
    """

    rho: DensityMatrix4
    converged: bool
    iterations: int
    log_likelihood: float
    ll_trace: np.ndarray


def _log_likelihood(counts: np.ndarray, probs: np.ndarray) -> float:
    mask = counts > 0
    return float(np.sum(counts[mask] * np.log(probs[mask])))


def tomography_mle(
    tset: TomographySet, tol: float = 1e-9, max_iter: int = 5000
) -> MleResult:
    """Maximum-likelihood reconstruction over physical states.

    Maximizes the multinomial log-likelihood sum(n_k log Tr[rho P_k]).
    Iteration stops when the relative log-likelihood improvement drops
    below ``tol``; hitting ``max_iter`` first is reported through the
    ``converged`` flag. The returned state satisfies all density-matrix
    invariants strictly.
    """
    projectors = np.stack([row.projector for row in tset.rows])
    counts = np.array([row.count for row in tset.rows], dtype=float)
    if counts.sum() <= 0.0:
        raise InsufficientData("tomography set has no counts")

    gram = projectors.sum(axis=0)
    scale = np.trace(gram).real / 4.0
    uniform = np.max(np.abs(gram - scale * np.eye(4))) < 1e-9 * max(scale, 1.0)

    try:
        rho0 = project_to_physical(tomography_linear(tset)).entries
    except IncompleteSettings:
        raise
    rho = 0.99 * rho0 + 0.01 * np.eye(4) / 4.0

    if uniform:
        rho, ll_trace, iterations, converged = _mle_fixed_point(
            projectors, counts, rho, tol, max_iter
        )
    else:
        rho, ll_trace, iterations, converged = _mle_quasi_newton(
            projectors, counts, rho, tol, max_iter
        )

    return MleResult(
        rho=project_to_physical(rho),
        converged=converged,
        iterations=iterations,
        log_likelihood=float(ll_trace[-1]),
        ll_trace=np.asarray(ll_trace),
    )


def _probabilities(projectors: np.ndarray, rho: np.ndarray) -> np.ndarray:
    p = np.einsum("kij,ji->k", projectors, rho).real
    return np.clip(p, 1e-14, None)


def _mle_fixed_point(projectors, counts, rho, tol, max_iter):
    """Iterated R rho R updates with a diluted fallback step.

    The full step is attempted first; if it would lower the likelihood
    the update is shrunk toward the identity until it improves, so the
    log-likelihood trace is non-decreasing.
    """
    weights = counts / counts.sum()
    ll = _log_likelihood(counts, _probabilities(projectors, rho))
    ll_trace = [ll]
    converged = False
    iterations = 0
    eye = np.eye(4)
    for iterations in range(1, max_iter + 1):
        p = _probabilities(projectors, rho)
        r_op = np.einsum("k,kij->ij", weights / p, projectors)
        candidate = r_op @ rho @ r_op
        candidate = candidate / np.trace(candidate).real
        ll_new = _log_likelihood(counts, _probabilities(projectors, candidate))
        if ll_new < ll:
            epsilon = 0.5
            while epsilon > 1e-8:
                step = (eye + epsilon * r_op) / (1.0 + epsilon)
                candidate = step @ rho @ step.conj().T
                candidate = candidate / np.trace(candidate).real
                ll_new = _log_likelihood(counts, _probabilities(projectors, candidate))
                if ll_new >= ll:
                    break
                epsilon *= 0.5
            if ll_new < ll:
                converged = True  # stationary to numerical precision
                break
        rho = candidate
        improvement = ll_new - ll
        ll = ll_new
        ll_trace.append(ll)
        if improvement <= tol * max(1.0, abs(ll)):
            converged = True
            break
    return rho, ll_trace, iterations, converged


def _cholesky_params(rho: np.ndarray) -> np.ndarray:
    t_mat = np.linalg.cholesky(rho + 1e-10 * np.eye(4))
    params = np.zeros(16)
    params[:4] = np.diag(t_mat).real
    lower = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]
    for i, (r, c) in enumerate(lower):
        params[4 + 2 * i] = t_mat[r, c].real
        params[5 + 2 * i] = t_mat[r, c].imag
    return params


def _rho_from_params(params: np.ndarray) -> np.ndarray:
    t_mat = np.zeros((4, 4), dtype=complex)
    np.fill_diagonal(t_mat, params[:4])
    lower = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]
    for i, (r, c) in enumerate(lower):
        t_mat[r, c] = params[4 + 2 * i] + 1j * params[5 + 2 * i]
    rho = t_mat @ t_mat.conj().T
    trace = np.trace(rho).real
    if trace <= 0.0:
        return np.eye(4) / 4.0
    return rho / trace


def _mle_quasi_newton(projectors, counts, rho, tol, max_iter):
    """Profile-likelihood search for sets without a uniform projector sum.

    The overall flux is profiled out, leaving the scale-invariant
    objective sum(n_k log p_k) - N log(sum p_k).
    """
    total = counts.sum()

    def negative_ll(params: np.ndarray) -> float:
        p = _probabilities(projectors, _rho_from_params(params))
        return -(np.sum(counts * np.log(p)) - total * np.log(p.sum()))

    x0 = _cholesky_params(rho)
    result = optimize.minimize(
        negative_ll,
        x0,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "ftol": tol},
    )
    rho_hat = _rho_from_params(result.x)
    ll_trace = [-negative_ll(x0), -negative_ll(result.x)]
    return rho_hat, ll_trace, int(result.nit), bool(result.success)

"""Pulse-indexed Monte Carlo of coincidence detection.

Each laser pulse is an independent trial. A pulse may carry a photon
pair, uncorrelated Stokes / anti-Stokes singles, and (when a pair is
present) an extra uncorrelated Stokes photon that makes the pulse a
three-photon event. Detectors are binary per PBS port and pulse, so a
three-photon event is indistinguishable from a pair, which is exactly
what washes out the measured correlations when the singles background is
strong. A coincidence is a Stokes-arm click and an anti-Stokes-arm click
in the same pulse; the four counters follow the port pair that clicked.

Randomness: the pulse stream is split into fixed-size shards and shard
``i`` draws from ``PCG64(SeedSequence(seed, spawn_key=(i,)))``. Results
are therefore bit-identical for a given ``(inputs, seed)`` no matter how
many shards run or in which order they are merged, and shards can be
farmed out to concurrent workers if desired.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analyzer import AnalyzerSetting, analyzed_vector, outcome_probabilities
from .errors import InsufficientData, InvalidRates
from .polarization import DensityMatrix4, JonesVector

SHARD_PULSES = 1 << 20
RNG_NAME = "numpy-pcg64"
REP_PERIOD_NS = 13.158  # 76 MHz pulse train


@dataclass(frozen=True)
class ValueWithError(object):
    """A scalar estimate with its one-sigma standard error."""

    value: float
    stderr: float


@dataclass(frozen=True)
class SourceRates:
    """Per-pulse event probabilities and detector parameters.

    ``p_triple`` is the probability that a pulse carrying a pair also
    carries an extra uncorrelated Stokes photon. The per-pulse occupancy
    must stay well below one; ``p_pair + p_s_single + p_as_single < 0.5``
    is enforced so pile-up stays negligible and dead time can be ignored.
    """

    p_pair: float
    p_s_single: float = 0.0
    p_as_single: float = 0.0
    p_triple: float = 0.0
    eta_s: float = 1.0
    eta_as: float = 1.0
    dark_s: float = 0.0
    dark_as: float = 0.0
    rep_period_ns: float = REP_PERIOD_NS

    def __post_init__(self):
        fields = (
            ("p_pair", self.p_pair),
            ("p_s_single", self.p_s_single),
            ("p_as_single", self.p_as_single),
            ("p_triple", self.p_triple),
            ("eta_s", self.eta_s),
            ("eta_as", self.eta_as),
            ("dark_s", self.dark_s),
            ("dark_as", self.dark_as),
        )
        for name, value in fields:
            if not 0.0 <= value <= 1.0:
                raise InvalidRates(f"{name} must lie in [0, 1], got {value}")
        occupancy = self.p_pair + self.p_s_single + self.p_as_single
        if occupancy >= 0.5:
            raise InvalidRates(
                f"per-pulse occupancy {occupancy} too high; needs to stay < 0.5"
            )
        if self.rep_period_ns <= 0.0:
            raise InvalidRates("rep_period_ns must be positive")


@dataclass(frozen=True)
class CoincidenceCounts:
    """Joint port-outcome counters for one analyzer setting."""

    n_pp: int
    n_pm: int
    n_mp: int
    n_mm: int
    n_pulses: int

    def __post_init__(self):
        for name in ("n_pp", "n_pm", "n_mp", "n_mm", "n_pulses"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("n_pp", "n_pm", "n_mp", "n_mm"):
            if getattr(self, name) > self.n_pulses:
                raise ValueError(f"{name} exceeds the number of pulses")

    def total(self) -> int:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    def as_array(self) -> np.ndarray:
        return np.array([self.n_pp, self.n_pm, self.n_mp, self.n_mm], dtype=np.int64)

    def __add__(self, other: "CoincidenceCounts") -> "CoincidenceCounts":
        return CoincidenceCounts(
            self.n_pp + other.n_pp,
            self.n_pm + other.n_pm,
            self.n_mp + other.n_mp,
            self.n_mm + other.n_mm,
            self.n_pulses + other.n_pulses,
        )


@dataclass(frozen=True)
class DelayHistogram:
    """Coincidences between pulse ``n`` and pulse ``n + k``.

    ``counts[i]`` is the tally for delay ``delays()[i]``; the delay axis
    is the symmetric range ``-max_delay .. +max_delay`` in pulse units.
    """

    max_delay: int
    counts: np.ndarray
    n_pulses: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if self.max_delay < 1:
            raise ValueError("max_delay must be at least 1")
        if counts.shape != (2 * self.max_delay + 1,):
            raise ValueError("counts length must be 2*max_delay + 1")
        if np.any(counts < 0):
            raise ValueError("histogram counts must be non-negative")
        counts = counts.copy()
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def delays(self) -> np.ndarray:
        return np.arange(-self.max_delay, self.max_delay + 1)

    @property
    def zero_bin(self) -> int:
        return int(self.counts[self.max_delay])

    def off_center_counts(self) -> np.ndarray:
        return np.delete(self.counts, self.max_delay)


def derive_seed(master_seed: int, index: int) -> int:
    """Child seed for task ``index``; stable across runs and platforms."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(seq.generate_state(1, np.uint64)[0])


def _shard_ranges(n_pulses: int):
    starts = range(0, n_pulses, SHARD_PULSES)
    return [(start, min(SHARD_PULSES, n_pulses - start)) for start in starts]


def _shard_rng(seed: int, shard_index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(shard_index,)))
    )


def _port_probability(state: JonesVector | None, arm) -> float:
    """Probability that a lone photon exits through the arm's "+" port."""
    if state is None:  # unpolarized
        return 0.5
    e_plus = analyzed_vector(arm.plates, arm.port)
    return float(np.abs(e_plus.conj() @ state.components) ** 2)


def _prepare_outcome_cdf(rho_pair: DensityMatrix4, setting: AnalyzerSetting) -> np.ndarray:
    probs = np.clip(outcome_probabilities(rho_pair, setting), 0.0, None)
    total = probs.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise ValueError("pair outcome probabilities are degenerate")
    return np.cumsum(probs / total)


def _shard_clicks(
    rng: np.random.Generator,
    count: int,
    rates: SourceRates,
    outcome_cdf: np.ndarray,
    q_s_plus: float,
    q_as_plus: float,
):
    """Simulate one shard; returns the four per-pulse port-click masks.

    All random draws happen unconditionally and in a fixed order so the
    stream layout is stable.
    """
    pair = rng.random(count) < rates.p_pair
    outcome = np.searchsorted(outcome_cdf, rng.random(count), side="right")
    np.clip(outcome, 0, 3, out=outcome)
    pair_det_s = rng.random(count) < rates.eta_s
    pair_det_as = rng.random(count) < rates.eta_as

    s_single = rng.random(count) < rates.p_s_single
    s_single_plus = rng.random(count) < q_s_plus
    s_single_det = rng.random(count) < rates.eta_s

    as_single = rng.random(count) < rates.p_as_single
    as_single_plus = rng.random(count) < q_as_plus
    as_single_det = rng.random(count) < rates.eta_as

    extra = pair & (rng.random(count) < rates.p_triple)
    extra_plus = rng.random(count) < q_s_plus
    extra_det = rng.random(count) < rates.eta_s

    dark_s = rng.random(count) < rates.dark_s
    dark_s_plus = rng.random(count) < 0.5
    dark_as = rng.random(count) < rates.dark_as
    dark_as_plus = rng.random(count) < 0.5

    pair_s = pair & pair_det_s
    pair_as = pair & pair_det_as
    s_hit = s_single & s_single_det
    as_hit = as_single & as_single_det
    extra_hit = extra & extra_det

    s_plus = (
        (pair_s & (outcome <= 1))
        | (s_hit & s_single_plus)
        | (extra_hit & extra_plus)
        | (dark_s & dark_s_plus)
    )
    s_minus = (
        (pair_s & (outcome >= 2))
        | (s_hit & ~s_single_plus)
        | (extra_hit & ~extra_plus)
        | (dark_s & ~dark_s_plus)
    )
    as_plus = (
        (pair_as & (outcome % 2 == 0))
        | (as_hit & as_single_plus)
        | (dark_as & dark_as_plus)
    )
    as_minus = (
        (pair_as & (outcome % 2 == 1))
        | (as_hit & ~as_single_plus)
        | (dark_as & ~dark_as_plus)
    )
    return s_plus, s_minus, as_plus, as_minus


def simulate_counts(
    rho_pair: DensityMatrix4,
    rates: SourceRates,
    setting: AnalyzerSetting,
    n_pulses: int,
    seed: int,
    s_single_state: JonesVector | None = None,
    as_single_state: JonesVector | None = None,
) -> CoincidenceCounts:
    """Coincidence counters after ``n_pulses`` pulses on one setting.

    ``s_single_state`` / ``as_single_state`` set the polarization of the
    uncorrelated singles (and of the extra Stokes photon of three-photon
    events); ``None`` means unpolarized. Callers that model a crystal
    source normally pass the one-photon Raman output for the Stokes arm.
    Deterministic for a fixed seed.
    """
    if n_pulses < 0:
        raise ValueError("n_pulses must be non-negative")
    outcome_cdf = _prepare_outcome_cdf(rho_pair, setting)
    q_s = _port_probability(s_single_state, setting.stokes)
    q_as = _port_probability(as_single_state, setting.antistokes)

    tallies = np.zeros(4, dtype=np.int64)
    for shard_index, (_, count) in enumerate(_shard_ranges(n_pulses)):
        rng = _shard_rng(seed, shard_index)
        s_p, s_m, a_p, a_m = _shard_clicks(rng, count, rates, outcome_cdf, q_s, q_as)
        tallies[0] += np.count_nonzero(s_p & a_p)
        tallies[1] += np.count_nonzero(s_p & a_m)
        tallies[2] += np.count_nonzero(s_m & a_p)
        tallies[3] += np.count_nonzero(s_m & a_m)
    return CoincidenceCounts(*(int(t) for t in tallies), n_pulses=n_pulses)


def _arm_click_streams(
    rho_pair: DensityMatrix4,
    rates: SourceRates,
    n_pulses: int,
    seed: int,
    s_single_state: JonesVector | None,
    as_single_state: JonesVector | None,
):
    """Per-pulse arm-level click masks (either port) for the whole run."""
    setting = AnalyzerSetting.vh()
    outcome_cdf = _prepare_outcome_cdf(rho_pair, setting)
    q_s = _port_probability(s_single_state, setting.stokes)
    q_as = _port_probability(as_single_state, setting.antistokes)

    s_click = np.empty(n_pulses, dtype=bool)
    as_click = np.empty(n_pulses, dtype=bool)
    for shard_index, (start, count) in enumerate(_shard_ranges(n_pulses)):
        rng = _shard_rng(seed, shard_index)
        s_p, s_m, a_p, a_m = _shard_clicks(rng, count, rates, outcome_cdf, q_s, q_as)
        s_click[start : start + count] = s_p | s_m
        as_click[start : start + count] = a_p | a_m
    return s_click, as_click


def delay_histogram(
    rates: SourceRates,
    rho_pair: DensityMatrix4,
    n_pulses: int,
    max_delay: int,
    seed: int,
    s_single_state: JonesVector | None = None,
    as_single_state: JonesVector | None = None,
) -> DelayHistogram:
    """Histogram of S/aS coincidences versus pulse delay.

    Bin ``k`` counts pulses where the Stokes arm clicked at pulse ``n``
    and the anti-Stokes arm at pulse ``n + k``; the zero bin holds the
    same-pulse coincidences and the others the accidentals. Clicks are
    arm-level (either PBS port), so no polarization is selected.
    Deterministic for a fixed seed.
    """
    if max_delay < 1:
        raise ValueError("max_delay must be at least 1")
    if n_pulses <= max_delay:
        raise ValueError("n_pulses must exceed max_delay")
    s_click, as_click = _arm_click_streams(
        rho_pair, rates, n_pulses, seed, s_single_state, as_single_state
    )
    counts = np.zeros(2 * max_delay + 1, dtype=np.int64)
    for k in range(-max_delay, max_delay + 1):
        if k >= 0:
            n = np.count_nonzero(s_click[: n_pulses - k] & as_click[k:])
        else:
            n = np.count_nonzero(s_click[-k:] & as_click[: n_pulses + k])
        counts[k + max_delay] = n
    return DelayHistogram(max_delay=max_delay, counts=counts, n_pulses=n_pulses)


def g2_zero(histogram: DelayHistogram) -> ValueWithError:
    """Zero-delay correlation: zero bin over the mean off-center bin.

    The error bar propagates Poisson fluctuations of both the zero bin
    and the off-center baseline. Raises :class:`InsufficientData` when
    every off-center bin is empty.
    """
    off = histogram.off_center_counts()
    off_total = int(off.sum())
    if off.size == 0 or off_total == 0:
        raise InsufficientData("no off-center coincidences to normalize against")
    baseline = off_total / off.size
    zero = histogram.zero_bin
    value = zero / baseline
    rel_sq = 1.0 / max(zero, 1) + 1.0 / off_total
    return ValueWithError(value=value, stderr=max(value, 1.0 / baseline) * np.sqrt(rel_sq))


def simulate_settings(
    rho_pair: DensityMatrix4,
    rates: SourceRates,
    settings,
    n_pulses: int,
    seed: int,
    s_single_state: JonesVector | None = None,
    as_single_state: JonesVector | None = None,
) -> list[CoincidenceCounts]:
    """Run ``simulate_counts`` for each setting with derived sub-seeds.

    Setting ``i`` uses ``derive_seed(seed, i)``, so results stay
    reproducible and statistically independent across settings.
    """
    return [
        simulate_counts(
            rho_pair,
            rates,
            setting,
            n_pulses,
            derive_seed(seed, index),
            s_single_state=s_single_state,
            as_single_state=as_single_state,
        )
        for index, setting in enumerate(settings)
    ]

"""Code tracking at the discriminator level: vector residuals and a scalar DLL.

The discriminator output is modeled as the true code error plus Gaussian
thermal noise whose sigma follows the standard coherent early-late
approximation, valid inside a configurable pull-in region (one C/A chip
by default). No correlators or IF samples are simulated.

Vector channels never keep their own code phase: the predicted
pseudorange always comes from the navigation filter, which is exactly
what lets them ride out an outage (the filter keeps predicting) and
exactly what lets one faulted channel pollute the others — both
behaviors are under test elsewhere.

The scalar baseline is a minimal first-order DLL per channel with gain
``4 * B_L * dt``; it coasts unchanged when blocked and re-enters via a
snap-to-truth reacquisition after a fixed delay once the code error
leaves the pull-in region.

The array functions are the implementation; the per-channel functions
wrap them for direct use and keep the draw discipline (one tracking
normal per satellite per epoch, consumed whether or not the link is
usable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import BLOCKED, ChannelParams, ChannelRealization

SPEED_OF_LIGHT = 299792458.0
CA_CHIP_RATE_HZ = 1.023e6
CHIP_LENGTH_M = SPEED_OF_LIGHT / CA_CHIP_RATE_HZ  # ~293.05 m


@dataclass(frozen=True)
class TrackingConfig:
    mode: str = "vector"  # "vector" | "scalar"
    correlator_spacing_chips: float = 0.5
    coherent_integration_s: float = 0.02
    loop_bandwidth_hz: float = 1.0
    reacq_delay_s: float = 2.0
    pull_in_chips: float = 1.0

    def __post_init__(self):
        if self.mode not in ("vector", "scalar"):
            raise ValueError(f"unknown tracking mode {self.mode!r}")
        if not 0 < self.correlator_spacing_chips <= 1:
            raise ValueError("correlator_spacing_chips must be in (0, 1]")
        if self.coherent_integration_s <= 0:
            raise ValueError("coherent_integration_s must be positive")
        if self.loop_bandwidth_hz <= 0:
            raise ValueError("loop_bandwidth_hz must be positive")
        if self.reacq_delay_s < 0:
            raise ValueError("reacq_delay_s must be nonnegative")
        if self.pull_in_chips <= 0:
            raise ValueError("pull_in_chips must be positive")

    @property
    def pull_in_m(self) -> float:
        return self.pull_in_chips * CHIP_LENGTH_M

    def loop_gain(self, dt: float) -> float:
        return 4.0 * self.loop_bandwidth_hz * dt


@dataclass
class TrackerChannel:
    """Mutable per-satellite tracking state (scalar mode owns a code phase)."""

    sv_id: int
    mode: str = "vector"
    code_phase_estimate: float = math.nan
    locked: bool = False
    cn0_estimate: float = math.nan
    reacquisition_timer: float = 0.0


@dataclass(frozen=True)
class MeasurementEntry:
    sv_id: int
    residual: float
    variance: float
    valid: bool
    predicted_pseudorange: float


@dataclass(frozen=True)
class MeasurementSet:
    """Per-epoch measurement collection, sv_id-sorted, at most one entry per SV."""

    epoch_t: float
    entries: tuple = field(default_factory=tuple)

    def __post_init__(self):
        ids = [e.sv_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate sv_id in measurement set")
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=lambda e: e.sv_id)))

    def valid_entries(self) -> tuple:
        return tuple(e for e in self.entries if e.valid)


def true_pseudorange(truth, sv, chan: ChannelRealization | None = None, fault_bias: float = 0.0) -> float:
    """Geometric range + receiver clock bias + multipath bias + fault bias.

    ``sv`` may be a SatelliteState or a bare ECEF position array.
    """
    sv_pos = np.asarray(getattr(sv, "position", sv), dtype=float)
    rho = float(np.linalg.norm(sv_pos - truth.position)) + truth.clock_bias
    if chan is not None:
        rho += chan.multipath_bias
    return rho + fault_bias


def discriminator_noise_sigma(cn0_dbhz: float, cfg: TrackingConfig = TrackingConfig()) -> float:
    """Thermal-noise sigma (m) of the early-late discriminator at given C/N0."""
    if cn0_dbhz == float("-inf"):
        return float("inf")
    cn0_lin = 10.0 ** (cn0_dbhz / 10.0)
    return CHIP_LENGTH_M * math.sqrt(
        cfg.correlator_spacing_chips / (4.0 * cfg.coherent_integration_s * cn0_lin)
    )


def _noise_sigmas(cn0: np.ndarray, cfg: TrackingConfig) -> np.ndarray:
    with np.errstate(divide="ignore", over="ignore"):
        lin = 10.0 ** (cn0 / 10.0)
        return np.where(
            np.isfinite(cn0),
            CHIP_LENGTH_M
            * np.sqrt(
                cfg.correlator_spacing_chips
                / (4.0 * cfg.coherent_integration_s * np.where(lin > 0, lin, 1.0))
            ),
            np.inf,
        )


def vector_step_arrays(true_rho, predicted_rho, blocked, cn0, noise_unit, params: ChannelParams,
                       cfg: TrackingConfig):
    """Vector-loop measurement synthesis for one epoch over all satellites.

    Returns (residual, variance, valid) arrays. A channel is invalid when
    blocked, under the lock threshold, or when the filter's prediction
    has drifted outside the discriminator pull-in region; the true code
    error (not the noisy one) decides pull-in.
    """
    true_rho = np.asarray(true_rho, dtype=float)
    err = true_rho - np.asarray(predicted_rho, dtype=float)
    usable = ~np.asarray(blocked, dtype=bool) & (np.asarray(cn0) >= params.lock_threshold_dbhz)
    valid = usable & (np.abs(err) <= cfg.pull_in_m)
    sigma = _noise_sigmas(np.asarray(cn0, dtype=float), cfg)
    residual = np.where(valid, err + sigma * np.asarray(noise_unit, dtype=float), np.nan)
    variance = np.where(valid, sigma * sigma, np.nan)
    return residual, variance, valid


@dataclass
class ScalarLoopState:
    """First-order DLL state for every satellite (scalar baseline)."""

    estimates: np.ndarray  # code-phase estimates as pseudoranges (m)
    timers: np.ndarray  # remaining reacquisition time (s)
    acquired: np.ndarray  # bool: channel holds an estimate

    @classmethod
    def empty(cls, n: int) -> "ScalarLoopState":
        return cls(
            estimates=np.full(n, np.nan),
            timers=np.zeros(n),
            acquired=np.zeros(n, dtype=bool),
        )


def scalar_step_arrays(state: ScalarLoopState, true_rho, predicted_rho, blocked, cn0,
                       noise_unit, params: ChannelParams, cfg: TrackingConfig, dt: float):
    """One scalar-DLL epoch over all satellites; mutates ``state``.

    Order of business per channel: count down any reacquisition, coast
    through unusable signal, unlock when the code error leaves pull-in,
    otherwise close the loop and emit the updated estimate as the
    epoch's pseudorange measurement. Reacquisition (and initial
    acquisition) snaps the estimate to truth plus discriminator noise at
    the first usable epoch after the delay expires.
    """
    true_rho = np.asarray(true_rho, dtype=float)
    predicted_rho = np.asarray(predicted_rho, dtype=float)
    cn0 = np.asarray(cn0, dtype=float)
    noise_unit = np.asarray(noise_unit, dtype=float)
    usable = ~np.asarray(blocked, dtype=bool) & (cn0 >= params.lock_threshold_dbhz)
    sigma = _noise_sigmas(cn0, cfg)

    in_reacq = state.timers > 0.0
    state.timers = np.maximum(state.timers - dt, 0.0)

    needs_snap = usable & ~in_reacq & ~state.acquired
    err = true_rho - state.estimates
    out_of_pull_in = usable & ~in_reacq & state.acquired & (np.abs(err) > cfg.pull_in_m)
    tracking = usable & ~in_reacq & state.acquired & ~out_of_pull_in

    # unlock: drop the estimate and start the reacquisition clock
    state.timers[out_of_pull_in] = cfg.reacq_delay_s
    state.acquired[out_of_pull_in] = False

    # closed-loop update
    gain = cfg.loop_gain(dt)
    measured = err + sigma * noise_unit
    state.estimates[tracking] += gain * measured[tracking]

    # (re)acquisition snap
    state.estimates[needs_snap] = true_rho[needs_snap] + sigma[needs_snap] * noise_unit[needs_snap]
    state.acquired[needs_snap] = True

    valid = tracking | needs_snap
    residual = np.where(valid, state.estimates - predicted_rho, np.nan)
    variance = np.where(valid, sigma * sigma, np.nan)
    return residual, variance, valid


def vector_channel_step(chan: TrackerChannel, true_rho, predicted_rho,
                        chan_state: ChannelRealization, rng, params: ChannelParams,
                        cfg: TrackingConfig = TrackingConfig()) -> MeasurementEntry:
    """Single-satellite vector step; draws one tracking normal from ``rng``."""
    noise = rng.standard_normal()
    residual, variance, valid = vector_step_arrays(
        np.array([true_rho]), np.array([predicted_rho]),
        np.array([chan_state.condition == BLOCKED]), np.array([chan_state.cn0_instant]),
        np.array([noise]), params, cfg,
    )
    chan.locked = bool(valid[0])
    chan.cn0_estimate = chan_state.cn0_instant
    return MeasurementEntry(
        sv_id=chan.sv_id, residual=float(residual[0]), variance=float(variance[0]),
        valid=bool(valid[0]), predicted_pseudorange=float(predicted_rho),
    )


def scalar_channel_step(chan: TrackerChannel, true_rho, predicted_rho,
                        chan_state: ChannelRealization, rng, params: ChannelParams,
                        cfg: TrackingConfig, dt: float) -> MeasurementEntry:
    """Single-satellite scalar-DLL step; draws one tracking normal from ``rng``.

    ``predicted_rho`` only fills the entry's residual-vs-prediction slot
    for the navigation filter; the loop itself never reads it.
    """
    state = ScalarLoopState(
        estimates=np.array([chan.code_phase_estimate]),
        timers=np.array([chan.reacquisition_timer]),
        acquired=np.array([not math.isnan(chan.code_phase_estimate)]),
    )
    noise = rng.standard_normal()
    residual, variance, valid = scalar_step_arrays(
        state, np.array([true_rho]), np.array([predicted_rho]),
        np.array([chan_state.condition == BLOCKED]), np.array([chan_state.cn0_instant]),
        np.array([noise]), params, cfg, dt,
    )
    chan.code_phase_estimate = float(state.estimates[0]) if state.acquired[0] else math.nan
    chan.reacquisition_timer = float(state.timers[0])
    chan.locked = bool(valid[0])
    chan.cn0_estimate = chan_state.cn0_instant
    return MeasurementEntry(
        sv_id=chan.sv_id, residual=float(residual[0]), variance=float(variance[0]),
        valid=bool(valid[0]), predicted_pseudorange=float(predicted_rho),
    )


def assemble_measurements(epoch_t: float, entries) -> MeasurementSet:
    """Deterministic sv_id-sorted set; invalid entries are kept for logging."""
    return MeasurementSet(epoch_t=epoch_t, entries=tuple(entries))

"""Land-mobile satellite channel: correlated fading, multipath bias, C/N0.

Each satellite link carries three first-order autoregressive chains —
the in-phase and quadrature components of the scattered field and a
Gauss-Markov multipath range bias. The fading envelope is
``|los_mean + scattered|`` with ``los_mean = sqrt(K/(K+1))`` and total
scattered power ``1/(K+1)`` (K linear), so mean envelope power is 1 for
any K; Rayleigh is the K = 0 special case and ``model="none"`` pins the
envelope at 1.

Fading reaches the receiver through two switchable pathways: the
envelope scales instantaneous C/N0 (20 log10), which drives
discriminator noise and the lock threshold, and the Gauss-Markov bias
adds straight onto the pseudorange. An outage forces the link condition
to ``blocked`` while the chains keep evolving, so recovery is
continuous.

Per-link draws follow a fixed order — 3 warm-up normals (in-phase,
quadrature, multipath), then per epoch [fade_i, fade_q, multipath,
tracking] — and are consumed regardless of model or link condition, so
streams stay aligned across configurations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .streams import sv_stream

LOS = "los"
BLOCKED = "blocked"

UNUSABLE_CN0 = float("-inf")

_MODELS = ("none", "rayleigh", "rician")


@dataclass(frozen=True)
class ChannelParams:
    model: str = "none"
    k_db: float = 10.0
    fade_tau_s: float = 1.0
    multipath_sigma_m: float = 0.0
    multipath_tau_s: float = 2.0
    cn0_nominal_dbhz: float = 45.0
    lock_threshold_dbhz: float = 28.0

    def __post_init__(self):
        if self.model not in _MODELS:
            raise ValueError(f"unknown channel model {self.model!r}")
        if self.fade_tau_s <= 0 or self.multipath_tau_s <= 0:
            raise ValueError("correlation times must be positive")
        if self.multipath_sigma_m < 0:
            raise ValueError("multipath_sigma_m must be nonnegative")
        if self.lock_threshold_dbhz >= self.cn0_nominal_dbhz:
            raise ValueError("lock threshold must sit below nominal C/N0")

    @property
    def k_linear(self) -> float:
        return 0.0 if self.model == "rayleigh" else 10.0 ** (self.k_db / 10.0)

    @property
    def los_mean(self) -> float:
        if self.model != "rician":
            return 0.0
        k = self.k_linear
        return math.sqrt(k / (k + 1.0))

    @property
    def scatter_sigma(self) -> float:
        """Per-component std of the scattered field (power split over I/Q)."""
        if self.model == "none":
            return 0.0
        if self.model == "rayleigh":
            return math.sqrt(0.5)
        return math.sqrt(0.5 / (self.k_linear + 1.0))


@dataclass(frozen=True)
class ChannelRealization:
    """Instantaneous link state for one satellite."""

    sv_id: int
    condition: str = LOS
    inphase: float = 0.0
    quadrature: float = 0.0
    envelope: float = 1.0
    multipath_bias: float = 0.0
    cn0_instant: float = 45.0


def initial_realization(sv_id: int, params: ChannelParams, rng) -> ChannelRealization:
    """Stationary draw of the link state (consumes 3 normals)."""
    warm = rng.standard_normal(3)
    s_i = params.scatter_sigma * warm[0]
    s_q = params.scatter_sigma * warm[1]
    envelope = 1.0 if params.model == "none" else float(np.hypot(params.los_mean + s_i, s_q))
    return ChannelRealization(
        sv_id=sv_id,
        condition=LOS,
        inphase=s_i,
        quadrature=s_q,
        envelope=envelope,
        multipath_bias=params.multipath_sigma_m * warm[2],
        cn0_instant=cn0_instant(params.cn0_nominal_dbhz, envelope),
    )


def step_envelope(state: ChannelRealization, params: ChannelParams, dt, rng) -> ChannelRealization:
    """Advance the scattered field one step and refresh envelope and C/N0.

    Consumes two normals even for ``model="none"`` (stream alignment).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    noise = rng.standard_normal(2)
    rho = math.exp(-dt / params.fade_tau_s)
    gain = math.sqrt(1.0 - rho * rho) * params.scatter_sigma
    s_i = rho * state.inphase + gain * noise[0]
    s_q = rho * state.quadrature + gain * noise[1]
    envelope = 1.0 if params.model == "none" else float(np.hypot(params.los_mean + s_i, s_q))
    return replace(
        state,
        inphase=s_i,
        quadrature=s_q,
        envelope=envelope,
        cn0_instant=cn0_instant(params.cn0_nominal_dbhz, envelope),
    )


def step_multipath_bias(state: ChannelRealization, params: ChannelParams, dt, rng) -> float:
    """One Gauss-Markov step of the multipath range bias (consumes 1 normal)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = rng.standard_normal()
    rho = math.exp(-dt / params.multipath_tau_s)
    return rho * state.multipath_bias + math.sqrt(1.0 - rho * rho) * params.multipath_sigma_m * n


def apply_condition(state: ChannelRealization, outaged: bool) -> ChannelRealization:
    """Set the link condition from the outage schedule; state keeps evolving."""
    return replace(state, condition=BLOCKED if outaged else LOS)


def cn0_instant(cn0_nominal_dbhz: float, envelope: float):
    """Instantaneous C/N0 under the fading envelope; 0 envelope is unusable."""
    if envelope < 0:
        raise ValueError("envelope must be nonnegative")
    if envelope == 0.0:
        return UNUSABLE_CN0
    return cn0_nominal_dbhz + 20.0 * math.log10(envelope)


@dataclass(frozen=True)
class ChannelSeries:
    """Whole-run channel realizations for every satellite, epoch-major.

    All arrays are (n_epochs, n_sv); ``track_noise`` carries the unit
    normals reserved for the tracking discriminator in the per-link draw
    order.
    """

    sv_ids: tuple
    envelope: np.ndarray
    multipath: np.ndarray
    cn0: np.ndarray
    track_noise: np.ndarray


def _ar1_series(rho: float, gain: float, start: float, normals: np.ndarray) -> np.ndarray:
    """AR(1) chain s[k] = rho * s[k-1] + gain * n[k] with s[-1] = start."""
    if gain == 0.0:
        # degenerate chain: pure decay from the start value
        return start * rho ** np.arange(1, normals.shape[0] + 1)
    out, _ = lfilter([gain], [1.0, -rho], normals, axis=0, zi=np.array([rho * start]))
    return out


def simulate_channels(
    params: ChannelParams, sv_ids, seed: int, n_epochs: int, dt: float
) -> ChannelSeries:
    """Precompute the fading/multipath chains for a whole run.

    Chain-for-chain identical to stepping :func:`step_envelope` and
    :func:`step_multipath_bias` from :func:`initial_realization` with the
    per-SV stream (pinned by tests).
    """
    m = len(sv_ids)
    envelope = np.empty((n_epochs, m))
    multipath = np.empty((n_epochs, m))
    track = np.empty((n_epochs, m))
    rho_f = math.exp(-dt / params.fade_tau_s)
    rho_m = math.exp(-dt / params.multipath_tau_s)
    gain_f = math.sqrt(1.0 - rho_f * rho_f) * params.scatter_sigma
    gain_m = math.sqrt(1.0 - rho_m * rho_m) * params.multipath_sigma_m
    for j, sv in enumerate(sv_ids):
        rng = sv_stream(seed, sv)
        warm = rng.standard_normal(3)
        draws = rng.standard_normal((n_epochs, 4))
        s_i = _ar1_series(rho_f, gain_f, params.scatter_sigma * warm[0], draws[:, 0])
        s_q = _ar1_series(rho_f, gain_f, params.scatter_sigma * warm[1], draws[:, 1])
        multipath[:, j] = _ar1_series(
            rho_m, gain_m, params.multipath_sigma_m * warm[2], draws[:, 2]
        )
        if params.model == "none":
            envelope[:, j] = 1.0
        else:
            envelope[:, j] = np.hypot(params.los_mean + s_i, s_q)
        track[:, j] = draws[:, 3]
    with np.errstate(divide="ignore"):
        cn0 = np.where(
            envelope > 0.0,
            params.cn0_nominal_dbhz + 20.0 * np.log10(np.where(envelope > 0.0, envelope, 1.0)),
            UNUSABLE_CN0,
        )
    return ChannelSeries(
        sv_ids=tuple(sv_ids), envelope=envelope, multipath=multipath, cn0=cn0,
        track_noise=track,
    )

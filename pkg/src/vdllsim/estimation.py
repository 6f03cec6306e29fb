"""Navigation state estimation: linear KF core, EKF, and sigma-point UKF.

The state vector is 8-dimensional throughout:
``[x, y, z (m, ECEF), vx, vy, vz (m/s), clock bias (m), clock drift (m/s)]``.
Clock terms are carried in metre units so the pseudorange measurement
matrix stays unitless and the covariance stays uniformly conditioned.

The generic operations here work on plain arrays and arbitrary
measurement functions; the pseudorange-specialized fast paths used by
the run loop live in :mod:`vdllsim.kernels` and are pinned to these
implementations by tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels

STATE_DIM = 8

# state-vector slot indices
POS = slice(0, 3)
VEL = slice(3, 6)
CLOCK_BIAS = 6
CLOCK_DRIFT = 7


class DegenerateGeometryError(RuntimeError):
    """Measurement update is numerically singular; epoch must stay predict-only."""


class CovarianceRepairError(RuntimeError):
    """Covariance stayed non-positive-definite after the one-shot jitter repair."""


@dataclass(frozen=True)
class NavState:
    """Receiver truth or estimate: position/velocity plus clock bias and drift."""

    vector: np.ndarray  # shape (8,)

    @classmethod
    def from_parts(cls, position, velocity, clock_bias=0.0, clock_drift=0.0):
        v = np.empty(STATE_DIM)
        v[POS] = position
        v[VEL] = velocity
        v[CLOCK_BIAS] = clock_bias
        v[CLOCK_DRIFT] = clock_drift
        return cls(v)

    @property
    def position(self) -> np.ndarray:
        return self.vector[POS]

    @property
    def velocity(self) -> np.ndarray:
        return self.vector[VEL]

    @property
    def clock_bias(self) -> float:
        return float(self.vector[CLOCK_BIAS])

    @property
    def clock_drift(self) -> float:
        return float(self.vector[CLOCK_DRIFT])


@dataclass(frozen=True)
class ProcessModel:
    """Discrete transition matrix and process noise for one step of ``dt``."""

    dt: float
    phi: np.ndarray  # (8, 8)
    q: np.ndarray  # (8, 8)


@dataclass(frozen=True)
class MeasurementModel:
    """Linearized pseudorange model at a state: h(x), Jacobian, noise diagonal."""

    predicted: np.ndarray  # (m,) predicted pseudoranges
    jacobian: np.ndarray  # (m, 8); rows [-u, 0, 0, 0, 1, 0]
    noise_diag: np.ndarray  # (m,) measurement variances


@dataclass(frozen=True)
class UkfParams:
    """Sigma-point spread tuning; defaults are the Gaussian-optimal choices."""

    alpha: float = 1e-3
    beta: float = 2.0
    kappa: float = 0.0

    def lam(self, n: int) -> float:
        return self.alpha * self.alpha * (n + self.kappa) - n


@dataclass(frozen=True)
class SigmaPointSet:
    points: np.ndarray  # (2n+1, n); row 0 is the center
    mean_weights: np.ndarray
    cov_weights: np.ndarray

    @property
    def center(self) -> np.ndarray:
        return self.points[0]


@dataclass(frozen=True)
class ProcessNoiseConfig:
    accel_psd: float = 1.0  # m^2/s^3 per axis
    clock_bias_psd: float = 0.01  # m^2/s
    clock_drift_psd: float = 0.04  # m^2/s^3


@dataclass(frozen=True)
class InitUncertainty:
    pos_sigma_m: float = 10.0
    vel_sigma_mps: float = 1.0
    clk_sigma_m: float = 100.0
    drift_sigma_mps: float = 1.0


@dataclass(frozen=True)
class FilterConfig:
    type: str = "ekf"  # "ekf" | "ukf"
    ukf: UkfParams = field(default_factory=UkfParams)
    process: ProcessNoiseConfig = field(default_factory=ProcessNoiseConfig)
    init: InitUncertainty = field(default_factory=InitUncertainty)


def make_process_model(dt, accel_psd, clock_bias_psd, clock_drift_psd) -> ProcessModel:
    """Constant-velocity transition with white-noise-acceleration Q.

    Position integrates velocity and clock bias integrates drift over
    ``dt``; each position/velocity axis pair gets the standard
    ``S * [[dt^3/3, dt^2/2], [dt^2/2, dt]]`` discretized noise block, and
    the clock pair the same block from the drift PSD plus the direct
    bias PSD contribution ``S_b * dt``.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    phi = np.eye(STATE_DIM)
    phi[0, 3] = phi[1, 4] = phi[2, 5] = dt
    phi[CLOCK_BIAS, CLOCK_DRIFT] = dt

    q = np.zeros((STATE_DIM, STATE_DIM))
    d3, d2 = dt**3 / 3.0, dt**2 / 2.0
    for axis in range(3):
        q[axis, axis] = accel_psd * d3
        q[axis, axis + 3] = q[axis + 3, axis] = accel_psd * d2
        q[axis + 3, axis + 3] = accel_psd * dt
    q[CLOCK_BIAS, CLOCK_BIAS] = clock_bias_psd * dt + clock_drift_psd * d3
    q[CLOCK_BIAS, CLOCK_DRIFT] = q[CLOCK_DRIFT, CLOCK_BIAS] = clock_drift_psd * d2
    q[CLOCK_DRIFT, CLOCK_DRIFT] = clock_drift_psd * dt
    return ProcessModel(dt=dt, phi=phi, q=q)


def kf_predict(x, p, model: ProcessModel):
    """Propagate mean and covariance one step; covariance is re-symmetrized."""
    return kernels.kf_predict(
        np.asarray(x, dtype=float), np.asarray(p, dtype=float), model.phi, model.q
    )


def measurement_model(x, sat_positions, variances) -> MeasurementModel:
    """Pseudorange model linearized at ``x`` for the given satellite positions."""
    sat_positions = np.ascontiguousarray(sat_positions, dtype=float)
    if sat_positions.ndim != 2 or sat_positions.shape[0] < 1:
        raise ValueError("need at least one satellite position")
    x = np.asarray(x, dtype=float)
    diff = sat_positions - x[POS]
    if np.any(np.linalg.norm(diff, axis=1) == 0.0):
        raise ValueError("satellite coincident with receiver")
    predicted, jacobian = kernels.pseudorange_model(x, sat_positions)
    return MeasurementModel(
        predicted=predicted,
        jacobian=jacobian,
        noise_diag=np.asarray(variances, dtype=float),
    )


def ekf_update(x, p, mm: MeasurementModel, innovations):
    """Joseph-form EKF update consuming innovations y = z - h(x).

    Returns ``(x_new, p_new, nis)`` where nis is the normalized
    innovation squared ``y' S^-1 y``. Raises DegenerateGeometryError when
    the innovation covariance cannot be factorized.
    """
    y = np.asarray(innovations, dtype=float)
    if y.size == 0:
        return np.array(x, dtype=float), np.array(p, dtype=float), 0.0
    try:
        return kernels.ekf_update(
            np.asarray(x, dtype=float),
            np.asarray(p, dtype=float),
            mm.jacobian,
            mm.noise_diag,
            y,
        )
    except np.linalg.LinAlgError as exc:
        raise DegenerateGeometryError(str(exc)) from exc


def repair_covariance(p: np.ndarray) -> np.ndarray:
    """One-shot PSD repair: add jitter 1e-9 * trace / n to the diagonal.

    Returns a repaired copy whose Cholesky factorization succeeds; raises
    CovarianceRepairError if it still fails (real divergence, not noise).
    """
    n = p.shape[0]
    repaired = 0.5 * (p + p.T) + np.eye(n) * (1e-9 * np.trace(p) / n)
    try:
        np.linalg.cholesky(repaired)
    except np.linalg.LinAlgError as exc:
        raise CovarianceRepairError("covariance not repairable") from exc
    return repaired


def sigma_points(x, p, params: UkfParams) -> SigmaPointSet:
    """Symmetric 2n+1 sigma-point set via the lower Cholesky factor of (n+lam)P.

    Raises numpy.linalg.LinAlgError when P is not positive definite; the
    caller decides whether to apply :func:`repair_covariance`.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    n = x.shape[0]
    lam = params.lam(n)
    if n + lam <= 0.0:
        raise ValueError("n + lambda must be positive")
    ell = np.linalg.cholesky((n + lam) * p)
    points = np.empty((2 * n + 1, n))
    points[0] = x
    points[1 : n + 1] = x + ell.T
    points[n + 1 :] = x - ell.T
    wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = wm[0] + 1.0 - params.alpha**2 + params.beta
    return SigmaPointSet(points=points, mean_weights=wm, cov_weights=wc)


def unscented_transform(points: SigmaPointSet, func, noise_cov=None):
    """Propagate sigma points through ``func``; return (mean, cov, cross_cov).

    ``func`` maps an (2n+1, n) point array to (2n+1, k) outputs.
    ``noise_cov`` (k, k) is added to the output covariance when given.
    """
    fx = np.asarray(func(points.points), dtype=float)
    mean = points.mean_weights @ fx
    dev = fx - mean
    weighted = dev * points.cov_weights[:, None]
    cov = dev.T @ weighted
    if noise_cov is not None:
        cov = cov + noise_cov
    cross = (points.points - points.center).T @ weighted
    return mean, cov, cross


def ukf_update(x, p, z, noise_diag, params: UkfParams, measure_func):
    """Generic sigma-point measurement update.

    ``measure_func`` maps an (2n+1, n) point array to (2n+1, m) predicted
    measurements. Returns ``(x_new, p_new, nis)``. On a non-PSD prior the
    one-shot jitter repair is applied before giving up.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        return x.copy(), p.copy(), 0.0
    try:
        pts = sigma_points(x, p, params)
    except np.linalg.LinAlgError:
        p = repair_covariance(p)
        pts = sigma_points(x, p, params)
    zhat, s, cross = unscented_transform(pts, measure_func, np.diag(noise_diag))
    try:
        gain = np.linalg.solve(s.T, cross.T).T
        innov = z - zhat
        nis = float(innov @ np.linalg.solve(s, innov))
    except np.linalg.LinAlgError as exc:
        raise DegenerateGeometryError(str(exc)) from exc
    x_new = x + gain @ innov
    p_new = p - gain @ s @ gain.T
    return x_new, 0.5 * (p_new + p_new.T), nis


def ukf_pseudorange_update(x, p, sat_positions, z, noise_diag, params: UkfParams):
    """Fused fast path of :func:`ukf_update` for the pseudorange model."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    n = x.shape[0]
    lam = params.lam(n)
    scaled = (n + lam) * p
    try:
        ell = np.linalg.cholesky(scaled)
    except np.linalg.LinAlgError:
        p = repair_covariance(p)
        ell = np.linalg.cholesky((n + lam) * p)
    wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = wm[0] + 1.0 - params.alpha**2 + params.beta
    try:
        return kernels.ukf_pseudorange_update(
            x, p, ell, wm, wc,
            np.ascontiguousarray(sat_positions, dtype=float),
            np.asarray(z, dtype=float),
            np.asarray(noise_diag, dtype=float),
        )
    except np.linalg.LinAlgError as exc:
        raise DegenerateGeometryError(str(exc)) from exc


def initialize_filter(init: InitUncertainty, truth: NavState, rng):
    """Initial estimate: truth perturbed per the configured sigmas, P0 diagonal."""
    sigmas = np.array(
        [init.pos_sigma_m] * 3
        + [init.vel_sigma_mps] * 3
        + [init.clk_sigma_m, init.drift_sigma_mps]
    )
    x0 = truth.vector + sigmas * rng.standard_normal(STATE_DIM)
    return x0, np.diag(sigmas**2)

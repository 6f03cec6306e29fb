"""Snapshot RAIM/FDE: chi-square residual testing and single-fault exclusion.

Consistency checking runs on the weighted least-squares residual of the
per-epoch measurement vector against the position/clock geometry
columns. This is the residual-space equivalent of comparing position
solutions across satellite subsets: any measurement component explainable
by a position/clock shift lies in the geometry column space and leaves
the statistic untouched, so the test responds to inconsistency only.
Under the no-fault hypothesis the statistic is chi-square with
``m - 4`` degrees of freedom.

Detection needs 5 valid satellites (one redundant measurement);
exclusion needs 6, re-tests every leave-one-out subset at ``m - 5``
degrees of freedom, and keeps the subset that looks cleanest. A
detection that cannot be resolved to a single satellite invalidates the
whole epoch — the filter coasts rather than ingest a poisoned set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import kernels
from .tracking import MeasurementSet

UNAVAILABLE = "unavailable"
DETECT_ONLY = "detect_only"
DETECT_AND_EXCLUDE = "detect_and_exclude"

_MIN_DETECT_SVS = 5
_MIN_EXCLUDE_SVS = 6
_GEOMETRY_COLS = (0, 1, 2, 6)  # position + clock bias columns of the 8-state Jacobian


class InsufficientRedundancy(RuntimeError):
    """Too few valid measurements for the requested integrity operation."""


class SingularGeometry(RuntimeError):
    """Geometry matrix is rank deficient; statistic undefined."""


@dataclass(frozen=True)
class IntegrityConfig:
    raim_enabled: bool = True
    fde_enabled: bool = True
    false_alarm_prob: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.false_alarm_prob < 1.0:
            raise ValueError("false_alarm_prob must be in (0, 1)")
        if self.fde_enabled and not self.raim_enabled:
            raise ValueError("fde requires raim")


@dataclass(frozen=True)
class RaimVerdict:
    statistic: float
    threshold: float
    degrees_of_freedom: int
    detected: bool
    excluded: frozenset
    capability: str

    @property
    def unresolved(self) -> bool:
        """Detection without a successful exclusion; epoch must coast."""
        return self.detected and not self.excluded


_NO_RAIM = RaimVerdict(
    statistic=math.nan, threshold=math.nan, degrees_of_freedom=0,
    detected=False, excluded=frozenset(), capability=UNAVAILABLE,
)


def _gammp(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x), series + continued fraction."""
    if a <= 0.0 or x < 0.0:
        raise ValueError("need a > 0 and x >= 0")
    if x == 0.0:
        return 0.0
    log_prefactor = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        # power series around 0
        term = 1.0 / a
        total = term
        denom = a
        for _ in range(1000):
            denom += 1.0
            term *= x / denom
            total += term
            if abs(term) < abs(total) * 1e-17:
                break
        return min(1.0, total * math.exp(log_prefactor))
    # modified Lentz continued fraction for the upper tail Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return max(0.0, 1.0 - math.exp(log_prefactor) * h)


@lru_cache(maxsize=4096)
def chi_square_quantile(dof: int, p: float) -> float:
    """x with P(chi2(dof) <= x) = p, solved to ~1e-12 by bisection."""
    if not 1 <= dof <= 64:
        raise ValueError("dof must be in [1, 64]")
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    a = dof / 2.0
    hi = max(4.0 * dof, 20.0)
    while _gammp(a, hi / 2.0) < p:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _gammp(a, mid / 2.0) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _geometry_and_weights(z: MeasurementSet, mm):
    entries = z.valid_entries()
    sv_ids = np.array([e.sv_id for e in entries], dtype=int)
    y = np.array([e.residual for e in entries])
    w = 1.0 / np.array([e.variance for e in entries])
    # mm covers the valid entries in the same sv_id order
    g = np.ascontiguousarray(mm.jacobian[:, _GEOMETRY_COLS])
    if g.shape[0] != len(entries):
        raise ValueError("measurement model rows do not match valid entries")
    return sv_ids, g, w, y


def ls_residual_statistic(z: MeasurementSet, mm) -> tuple[float, int]:
    """Weighted least-squares residual statistic and its degrees of freedom.

    Raises InsufficientRedundancy below 5 valid satellites and
    SingularGeometry for a rank-deficient geometry matrix.
    """
    _, g, w, y = _geometry_and_weights(z, mm)
    m = g.shape[0]
    if m < _MIN_DETECT_SVS:
        raise InsufficientRedundancy(f"need >= {_MIN_DETECT_SVS} valid SVs, have {m}")
    try:
        stat = float(kernels.wls_statistic(g, w, y))
    except np.linalg.LinAlgError as exc:
        raise SingularGeometry(str(exc)) from exc
    return stat, m - 4


def raim_detect(z: MeasurementSet, mm, cfg: IntegrityConfig) -> RaimVerdict:
    """Chi-square consistency test on the epoch's valid measurements."""
    m = len(z.valid_entries())
    try:
        stat, dof = ls_residual_statistic(z, mm)
    except (InsufficientRedundancy, SingularGeometry):
        return _NO_RAIM
    threshold = chi_square_quantile(dof, 1.0 - cfg.false_alarm_prob)
    capability = (
        DETECT_AND_EXCLUDE if cfg.fde_enabled and m >= _MIN_EXCLUDE_SVS else DETECT_ONLY
    )
    return RaimVerdict(
        statistic=stat, threshold=threshold, degrees_of_freedom=dof,
        detected=stat > threshold, excluded=frozenset(), capability=capability,
    )


def fde_exclude(z: MeasurementSet, mm, cfg: IntegrityConfig) -> RaimVerdict:
    """Leave-one-out exclusion after a detection.

    Every satellite is dropped in turn and the subset re-tested at
    ``m - 5`` degrees of freedom; among subsets that pass, the one with
    the smallest statistic wins (ties to the lowest sv_id). No passing
    subset leaves the verdict unresolved. The chosen subset is re-tested
    once more to confirm.
    """
    verdict = raim_detect(z, mm, cfg)
    if not verdict.detected or not cfg.fde_enabled:
        return verdict
    sv_ids, g, w, y = _geometry_and_weights(z, mm)
    m = g.shape[0]
    if m < _MIN_EXCLUDE_SVS:
        return verdict  # detect-only: too few satellites to isolate the fault
    sub_threshold = chi_square_quantile(m - 5, 1.0 - cfg.false_alarm_prob)
    best_j = -1
    best_stat = math.inf
    for j in range(m):
        keep = np.arange(m) != j
        try:
            stat_j = float(
                kernels.wls_statistic(np.ascontiguousarray(g[keep]), w[keep], y[keep])
            )
        except np.linalg.LinAlgError:
            continue
        if stat_j <= sub_threshold and stat_j < best_stat:
            best_stat = stat_j
            best_j = j
    if best_j < 0:
        return verdict  # unresolved: conservative caller coasts this epoch
    # confirmation pass on the surviving subset
    keep = np.arange(m) != best_j
    confirm = float(kernels.wls_statistic(np.ascontiguousarray(g[keep]), w[keep], y[keep]))
    if confirm > sub_threshold:  # unreachable by construction; kept as a guard
        return verdict
    return replace(verdict, excluded=frozenset({int(sv_ids[best_j])}))


def gate_measurements(z: MeasurementSet, verdict: RaimVerdict) -> MeasurementSet:
    """Apply the verdict: drop excluded SVs, or the whole epoch if unresolved."""
    if verdict.unresolved:
        entries = tuple(replace(e, valid=False) for e in z.entries)
    elif verdict.excluded:
        entries = tuple(
            replace(e, valid=False) if e.sv_id in verdict.excluded else e
            for e in z.entries
        )
    else:
        return z
    return MeasurementSet(epoch_t=z.epoch_t, entries=entries)

"""Hot numeric cores of the per-epoch simulation loop.

These functions carry the arithmetic that dominates a run: Kalman
predict/update, the fused sigma-point pseudorange update, the weighted
least-squares consistency statistic, and the pseudorange measurement
model. Each is plain numpy source compiled (or not) through
:func:`vdllsim.backend.jit`; see that module for lane selection.

Two rules keep the numba and numpy lanes aligned bit-for-bit in
practice: reductions go through ``@``/``np.dot`` (BLAS on both lanes)
instead of ``np.sum``, and nothing here branches on anything but shapes
and values passed in. Singular systems raise ``numpy.linalg.LinAlgError``
on both lanes; callers translate that into predict-only epochs.
"""

import numpy as np

from .backend import jit


def _kf_predict(x, p, phi, q):
    x2 = phi @ x
    p2 = phi @ p @ phi.T + q
    p2 = 0.5 * (p2 + p2.T)
    return x2, p2


def _ekf_update(x, p, h, r, y):
    # Joseph-form covariance update; r is the diagonal of R.
    m = r.shape[0]
    pht = p @ h.T
    s = h @ pht
    for i in range(m):
        s[i, i] += r[i]
    k = np.linalg.solve(s.T, pht.T).T
    x2 = x + k @ y
    ikh = np.eye(x.shape[0]) - k @ h
    p2 = ikh @ p @ ikh.T + (k * r) @ k.T
    p2 = 0.5 * (p2 + p2.T)
    nis = y @ np.linalg.solve(s, y)
    return x2, p2, nis


def _pseudorange_model(x, sat_pos):
    # predicted pseudoranges and the m x 8 Jacobian for the
    # [pos(3), vel(3), clock bias, clock drift] state
    diff = sat_pos - x[:3]
    rng = np.sqrt((diff * diff) @ np.ones(3))
    pred = rng + x[6]
    h = np.zeros((sat_pos.shape[0], 8))
    h[:, :3] = -diff / rng.reshape(-1, 1)
    h[:, 6] = 1.0
    return pred, h


def _ukf_pseudorange_update(x, p, ell, wm, wc, sat_pos, z, r):
    # ell is the lower Cholesky factor of (n + lambda) * P
    n = x.shape[0]
    m = sat_pos.shape[0]
    npts = 2 * n + 1
    pts = np.empty((npts, n))
    pts[0] = x
    for i in range(n):
        pts[1 + i] = x + ell[:, i]
        pts[1 + n + i] = x - ell[:, i]
    zsig = np.empty((npts, m))
    for k in range(npts):
        diff = sat_pos - pts[k, :3]
        zsig[k] = np.sqrt((diff * diff) @ np.ones(3)) + pts[k, 6]
    zhat = wm @ zsig
    zc = zsig - zhat
    zcw = zc * wc.reshape(-1, 1)
    s = zc.T @ zcw
    for j in range(m):
        s[j, j] += r[j]
    cross = (pts - x).T @ zcw
    k_gain = np.linalg.solve(s.T, cross.T).T
    innov = z - zhat
    x2 = x + k_gain @ innov
    p2 = p - k_gain @ s @ k_gain.T
    p2 = 0.5 * (p2 + p2.T)
    nis = innov @ np.linalg.solve(s, innov)
    return x2, p2, nis


def _wls_statistic(g, w, y):
    # weighted least squares on the geometry columns; the statistic is
    # the weighted sum of squared residuals
    gw = g * w.reshape(-1, 1)
    a = g.T @ gw
    b = y @ gw
    delta = np.linalg.solve(a, b)
    resid = y - g @ delta
    return np.dot(resid * w, resid)


kf_predict = jit(_kf_predict)
ekf_update = jit(_ekf_update)
pseudorange_model = jit(_pseudorange_model)
ukf_pseudorange_update = jit(_ukf_pseudorange_update)
wls_statistic = jit(_wls_statistic)


def warmup():
    """Force JIT compilation of every kernel (no-op on the numpy lane)."""
    x = np.zeros(8)
    p = np.eye(8)
    phi = np.eye(8)
    sat = np.array(
        [
            [2.6e7, 0.0, 0.0],
            [0.0, 2.6e7, 0.0],
            [0.0, 0.0, 2.6e7],
            [1.5e7, 1.5e7, 1.0e7],
            [-1.2e7, 2.0e7, 9.0e6],
        ]
    )
    r = np.ones(5)
    z = np.zeros(5)
    kf_predict(x, p, phi, p)
    _, h = pseudorange_model(x, sat)
    ekf_update(x, p, h, r, z)
    ukf_pseudorange_update(
        x, p, np.linalg.cholesky(p), np.full(17, 1.0 / 17.0), np.full(17, 1.0 / 17.0),
        sat, z, r,
    )
    wls_statistic(np.ascontiguousarray(h[:, [0, 1, 2, 6]]), r, z)

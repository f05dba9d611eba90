"""Hot loops: batched orthogonal matching pursuit.

Two implementations of the same algorithm live here.  The numba one is used
when numba imports and ``FAKEPOLISHER_DISABLE_NUMBA`` is unset (or ``0``); the
pure-numpy one is the fallback and the reference for the numba kernel.
``FAKEPOLISHER_THREADS`` caps numba's worker count.
"""

from __future__ import annotations

import os

import numpy as np

# Residual norm below which pursuit stops.
RESIDUAL_TOL = 1e-10
# Stop once the best remaining atom is this close to orthogonal to the residual
# (the kept-row dictionary has run out of rank).
COSINE_TOL = 1e-10


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


try:
    if _env_flag("FAKEPOLISHER_DISABLE_NUMBA"):
        raise ImportError("numba disabled by FAKEPOLISHER_DISABLE_NUMBA")
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def _omp_column_numpy(D, y, keep, tau, support_out, values_out):
    rows = np.flatnonzero(keep)
    Dk = D[rows] if len(rows) != D.shape[0] else D
    yk = y[rows] if len(rows) != D.shape[0] else y
    k = Dk.shape[0]
    norms = np.sqrt(np.einsum("ij,ij->j", Dk, Dk))
    usable = norms > 0.0
    safe_norms = np.where(usable, norms, 1.0)
    Q = np.zeros((k, tau))
    R = np.zeros((tau, tau))
    qty = np.zeros(tau)
    r = yk.copy()
    rnorm = float(np.sqrt(r @ r))
    s = 0
    while s < tau and rnorm > RESIDUAL_TOL:
        score = np.abs(Dk.T @ r) / safe_norms
        score[~usable] = -1.0
        score[support_out[:s]] = -1.0
        best = int(np.argmax(score))
        if score[best] <= COSINE_TOL * rnorm:
            break
        a = Dk[:, best].copy()
        for _ in range(2):  # Gram-Schmidt, repeated once for stability
            c = Q[:, :s].T @ a
            R[:s, s] += c
            a -= Q[:, :s] @ c
        nrm = float(np.sqrt(a @ a))
        if nrm <= 1e-12 * norms[best]:
            break
        Q[:, s] = a / nrm
        R[s, s] = nrm
        qty[s] = Q[:, s] @ r
        r = r - qty[s] * Q[:, s]
        support_out[s] = best
        s += 1
        rnorm = float(np.sqrt(r @ r))
    values_out[:s] = _back_substitute(R, qty, s)
    return s, rnorm


def _back_substitute(R, b, s):
    x = np.zeros(s)
    for i in range(s - 1, -1, -1):
        acc = b[i]
        for j in range(i + 1, s):
            acc -= R[i, j] * x[j]
        x[i] = acc / R[i, i]
    return x


def omp_batch_numpy(D, Yt, keept, tau):
    n = Yt.shape[0]
    supports = np.full((n, tau), -1, dtype=np.int64)
    values = np.zeros((n, tau))
    counts = np.zeros(n, dtype=np.int64)
    resid = np.zeros(n)
    for i in range(n):
        counts[i], resid[i] = _omp_column_numpy(D, Yt[i], keept[i], tau, supports[i], values[i])
    return supports, values, counts, resid


if HAVE_NUMBA:

    _back_substitute_nb = numba.njit(cache=True)(_back_substitute)

    @numba.njit(cache=True)
    def _omp_column_nb(D, y, keep, tau, support_out, values_out):
        d, m = D.shape
        k = 0
        for i in range(d):
            if keep[i]:
                k += 1
        Dk = np.empty((k, m))
        yk = np.empty(k)
        row = 0
        for i in range(d):
            if keep[i]:
                Dk[row, :] = D[i, :]
                yk[row] = y[i]
                row += 1
        norms = np.zeros(m)
        for j in range(m):
            acc = 0.0
            for i in range(k):
                acc += Dk[i, j] * Dk[i, j]
            norms[j] = np.sqrt(acc)
        selected = np.zeros(m, dtype=np.bool_)
        Q = np.zeros((k, tau))
        R = np.zeros((tau, tau))
        qty = np.zeros(tau)
        a = np.empty(k)
        r = yk.copy()
        rnorm = np.sqrt(np.dot(r, r))
        s = 0
        while s < tau and rnorm > RESIDUAL_TOL:
            corr = Dk.T @ r
            best = -1
            bestval = -1.0
            for j in range(m):
                if selected[j] or norms[j] <= 0.0:
                    continue
                v = abs(corr[j]) / norms[j]
                if v > bestval:
                    best = j
                    bestval = v
            if best < 0 or bestval <= COSINE_TOL * rnorm:
                break
            a[:] = Dk[:, best]
            for _ in range(2):
                for t in range(s):
                    c = 0.0
                    for i in range(k):
                        c += Q[i, t] * a[i]
                    R[t, s] += c
                    for i in range(k):
                        a[i] -= c * Q[i, t]
            nrm = np.sqrt(np.dot(a, a))
            if nrm <= 1e-12 * norms[best]:
                break
            proj = 0.0
            for i in range(k):
                Q[i, s] = a[i] / nrm
                proj += Q[i, s] * r[i]
            R[s, s] = nrm
            qty[s] = proj
            for i in range(k):
                r[i] -= proj * Q[i, s]
            selected[best] = True
            support_out[s] = best
            s += 1
            rnorm = np.sqrt(np.dot(r, r))
        x = _back_substitute_nb(R, qty, s)
        for t in range(s):
            values_out[t] = x[t]
        return s, rnorm

    @numba.njit(cache=True, parallel=True)
    def omp_batch_numba(D, Yt, keept, tau):
        n = Yt.shape[0]
        supports = np.full((n, tau), -1, dtype=np.int64)
        values = np.zeros((n, tau))
        counts = np.zeros(n, dtype=np.int64)
        resid = np.zeros(n)
        for i in numba.prange(n):
            c, rn = _omp_column_nb(D, Yt[i], keept[i], tau, supports[i], values[i])
            counts[i] = c
            resid[i] = rn
        return supports, values, counts, resid

    _threads = os.environ.get("FAKEPOLISHER_THREADS")
    if _threads:
        numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))

    omp_batch = omp_batch_numba
else:
    omp_batch = omp_batch_numpy


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


def run_omp_batch(D, Y, keep, tau, backend: str | None = None):
    """Dispatch to the active (or explicitly requested) OMP kernel.

    Returns ``(supports, values, counts, residual_norms)`` where row ``i`` of
    ``supports``/``values`` holds column ``i``'s atoms in selection order,
    padded with ``-1``/``0`` past ``counts[i]``.
    """
    D = np.ascontiguousarray(D, dtype=np.float64)
    Yt = np.ascontiguousarray(np.asarray(Y, dtype=np.float64).T)
    keept = np.ascontiguousarray(np.asarray(keep, dtype=np.bool_).T)
    tau = int(tau)
    if backend is None:
        fn = omp_batch
    elif backend == "numpy":
        fn = omp_batch_numpy
    elif backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable or disabled")
        fn = omp_batch_numba
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return fn(D, Yt, keept, tau)

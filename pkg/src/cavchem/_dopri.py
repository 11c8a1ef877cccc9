"""Dormand-Prince 5(4) stepper for linear systems y' = L y with L in CSR form."""

import numba as nb
import numpy as np

OK = 0
UNDERFLOW = 1
BUDGET = 2

# Dormand & Prince (1980) tableau
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


@nb.njit(cache=True)
def _matvec(indptr, indices, data, x, out):
    n = indptr.shape[0] - 1
    for i in range(n):
        acc = 0j
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        out[i] = acc


@nb.njit(cache=True)
def advance(indptr, indices, data, y, t, t_end, h, rtol, atol, max_step, h_min, max_steps):
    """Integrate from t to t_end in place.

    Returns (t, h_next, steps_taken, status). On failure ``y`` holds the last
    accepted state and ``t`` its time.
    """
    n = y.shape[0]
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    k5 = np.empty(n, np.complex128)
    k6 = np.empty(n, np.complex128)
    k7 = np.empty(n, np.complex128)
    tmp = np.empty(n, np.complex128)
    ynew = np.empty(n, np.complex128)
    _matvec(indptr, indices, data, y, k1)
    steps = 0
    while t < t_end:
        if steps >= max_steps:
            return t, h, steps, BUDGET
        if h > max_step:
            h = max_step
        hs = h
        last = False
        if t + hs >= t_end:
            hs = t_end - t
            last = True
        for i in range(n):
            tmp[i] = y[i] + hs * A21 * k1[i]
        _matvec(indptr, indices, data, tmp, k2)
        for i in range(n):
            tmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i])
        _matvec(indptr, indices, data, tmp, k3)
        for i in range(n):
            tmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        _matvec(indptr, indices, data, tmp, k4)
        for i in range(n):
            tmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        _matvec(indptr, indices, data, tmp, k5)
        for i in range(n):
            tmp[i] = y[i] + hs * (
                A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
            )
        _matvec(indptr, indices, data, tmp, k6)
        for i in range(n):
            ynew[i] = y[i] + hs * (
                B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]
            )
        _matvec(indptr, indices, data, ynew, k7)
        err = 0.0
        for i in range(n):
            e = hs * (
                E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]
            )
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            r = abs(e) / sc
            err += r * r
        err = np.sqrt(err / n)
        if err <= 1.0:
            t = t_end if last else t + hs
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
            steps += 1
            if err == 0.0:
                fac = 5.0
            else:
                fac = min(5.0, max(0.2, 0.9 * err ** -0.2))
            if not last:
                h = hs * fac
            elif fac < 1.0:
                h = min(h, hs * fac)
        else:
            h = hs * max(0.2, 0.9 * err ** -0.2)
            if h < h_min:
                return t, h, steps, UNDERFLOW
    return t, h, steps, OK

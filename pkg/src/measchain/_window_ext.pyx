# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop for windowed phasor estimation.

Computes, for each window center c, the weighted sums
sum_k y[c+k] * w[k+half] for k in [-half, half] on the demodulated
signal (real and imaginary parts passed separately).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def window_sums(
    const double[::1] y_re,
    const double[::1] y_im,
    const double[::1] window,
    const long long[::1] centers,
    Py_ssize_t half,
):
    cdef Py_ssize_t n_taps = window.shape[0]
    cdef Py_ssize_t n_out = centers.shape[0]
    cdef Py_ssize_t n_samples = y_re.shape[0]
    if n_taps != 2 * half + 1:
        raise ValueError("window length must equal 2*half+1")

    out = np.empty(n_out, dtype=np.complex128)
    cdef double complex[::1] out_v = out
    cdef Py_ssize_t j, k, base
    cdef double acc_re, acc_im

    for j in range(n_out):
        base = <Py_ssize_t> centers[j] - half
        if base < 0 or base + n_taps > n_samples:
            raise IndexError(f"window around center {centers[j]} exceeds sample range")
        acc_re = 0.0
        acc_im = 0.0
        for k in range(n_taps):
            acc_re += y_re[base + k] * window[k]
            acc_im += y_im[base + k] * window[k]
        out_v[j] = acc_re + 1j * acc_im
    return out

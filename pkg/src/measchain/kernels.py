"""Backend selection for the hot windowed-sum kernel.

The compiled extension (``measchain._window_ext``) is used when it built
successfully; otherwise a vectorized NumPy implementation with identical
semantics takes over.  Set ``MEASCHAIN_FORCE_FALLBACK=1`` to force the
NumPy path (used by the benchmark and the backend-agreement tests).
"""

from __future__ import annotations

import os

import numpy as np

try:
    from . import _window_ext

    _HAVE_EXT = True
except ImportError:
    _window_ext = None
    _HAVE_EXT = False


def active_backend() -> str:
    """Name of the backend that ``window_sums`` will dispatch to."""
    if _HAVE_EXT and not os.environ.get("MEASCHAIN_FORCE_FALLBACK"):
        return "cython"
    return "numpy"


# fancy indexing into the strided view copies rows, so bound the per-chunk
# footprint (65536 centers x 71 taps x 8 B x 2 parts is ~74 MB)
_CHUNK = 65536


def window_sums_numpy(y_re, y_im, window, centers, half):
    """NumPy reference path: strided window views + matrix-vector products."""
    y_re = np.ascontiguousarray(y_re, dtype=np.float64)
    y_im = np.ascontiguousarray(y_im, dtype=np.float64)
    window = np.ascontiguousarray(window, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.int64)
    n_taps = 2 * half + 1
    if window.shape[0] != n_taps:
        raise ValueError("window length must equal 2*half+1")
    base = centers - half
    if centers.size and (base.min() < 0 or base.max() + n_taps > y_re.shape[0]):
        bad = centers[(base < 0) | (base + n_taps > y_re.shape[0])][0]
        raise IndexError(f"window around center {bad} exceeds sample range")
    sw_re = np.lib.stride_tricks.sliding_window_view(y_re, n_taps)
    sw_im = np.lib.stride_tricks.sliding_window_view(y_im, n_taps)
    out = np.empty(centers.size, dtype=np.complex128)
    for start in range(0, centers.size, _CHUNK):
        idx = base[start : start + _CHUNK]
        out[start : start + _CHUNK] = sw_re[idx] @ window + 1j * (sw_im[idx] @ window)
    return out


def window_sums_cython(y_re, y_im, window, centers, half):
    """Compiled path; raises RuntimeError when the extension is absent."""
    if not _HAVE_EXT:
        raise RuntimeError("compiled kernel not available")
    return _window_ext.window_sums(
        np.ascontiguousarray(y_re, dtype=np.float64),
        np.ascontiguousarray(y_im, dtype=np.float64),
        np.ascontiguousarray(window, dtype=np.float64),
        np.ascontiguousarray(centers, dtype=np.int64),
        int(half),
    )


def window_sums(y_re, y_im, window, centers, half):
    """Windowed weighted sums around each center index (complex result)."""
    if active_backend() == "cython":
        return window_sums_cython(y_re, y_im, window, centers, half)
    return window_sums_numpy(y_re, y_im, window, centers, half)

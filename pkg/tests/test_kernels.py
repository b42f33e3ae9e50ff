"""Agreement between the compiled kernel and the NumPy fallback."""

import numpy as np
import pytest

from measchain import kernels


def random_problem(seed, n=5000, half=35):
    rng = np.random.default_rng(seed)
    y_re = rng.normal(size=n)
    y_im = rng.normal(size=n)
    window = rng.normal(size=2 * half + 1)
    centers = np.arange(half, n - half, 16, dtype=np.int64)
    return y_re, y_im, window, centers, half


def test_numpy_path_matches_direct_sums():
    y_re, y_im, window, centers, half = random_problem(0, n=500)
    out = kernels.window_sums_numpy(y_re, y_im, window, centers, half)
    for j, c in enumerate(centers):
        sl = slice(c - half, c + half + 1)
        want = np.dot(y_re[sl], window) + 1j * np.dot(y_im[sl], window)
        assert abs(out[j] - want) <= 1e-12 * max(abs(want), 1.0)


@pytest.mark.skipif(kernels.active_backend() != "cython", reason="extension not built")
def test_backends_agree():
    for seed in range(5):
        y_re, y_im, window, centers, half = random_problem(seed)
        a = kernels.window_sums_cython(y_re, y_im, window, centers, half)
        b = kernels.window_sums_numpy(y_re, y_im, window, centers, half)
        scale = np.max(np.abs(b))
        assert np.max(np.abs(a - b)) <= 1e-12 * scale


@pytest.mark.skipif(kernels.active_backend() != "cython", reason="extension not built")
def test_cython_bounds_check():
    y_re, y_im, window, _, half = random_problem(1, n=100)
    with pytest.raises(IndexError):
        kernels.window_sums_cython(y_re, y_im, window, np.array([5], dtype=np.int64), half)


def test_numpy_bounds_check():
    y_re, y_im, window, _, half = random_problem(2, n=100)
    with pytest.raises(IndexError):
        kernels.window_sums_numpy(y_re, y_im, window, np.array([98], dtype=np.int64), half)


def test_force_fallback_env(monkeypatch):
    monkeypatch.setenv("MEASCHAIN_FORCE_FALLBACK", "1")
    assert kernels.active_backend() == "numpy"
    monkeypatch.delenv("MEASCHAIN_FORCE_FALLBACK")


def test_window_length_validated():
    y_re, y_im, window, centers, half = random_problem(3)
    with pytest.raises(ValueError):
        kernels.window_sums(y_re, y_im, window[:-1], centers, half)

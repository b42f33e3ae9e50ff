"""Shared fixtures: on-disk truth/history series and run configurations."""

import numpy as np
import pytest
import yaml


def write_truth_csv(path, t, v_mag, v_angle_deg, i_mag, i_angle_deg):
    with open(path, "w") as fh:
        fh.write("t,v_mag,v_angle,i_mag,i_angle\n")
        for row in zip(t, v_mag, v_angle_deg, i_mag, i_angle_deg):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    return path


def write_history_csv(path, t, v, p, q):
    with open(path, "w") as fh:
        fh.write("t,v,p,q\n")
        for row in zip(t, v, p, q):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    return path


@pytest.fixture
def truth_csv(tmp_path):
    """Slowly varying truth trajectory, 0..120 s at 0.5 s resolution."""
    t = np.arange(0.0, 120.5, 0.5)
    v = 1.0 + 0.02 * np.sin(2 * np.pi * t / 60.0)
    dv = 12.0 + 0.5 * np.sin(2 * np.pi * t / 45.0)
    i = 0.8 + 0.05 * np.cos(2 * np.pi * t / 30.0)
    di = -20.0 + 0.4 * np.cos(2 * np.pi * t / 50.0)
    return write_truth_csv(tmp_path / "truth.csv", t, v, dv, i, di)


@pytest.fixture
def constant_truth_csv(tmp_path):
    t = np.arange(0.0, 60.5, 0.5)
    n = t.size
    return write_truth_csv(
        tmp_path / "truth_const.csv",
        t, np.full(n, 1.0), np.full(n, 15.0), np.full(n, 0.6), np.full(n, -5.0),
    )


@pytest.fixture
def history_csv(tmp_path):
    t = np.arange(0.0, 400.0, 0.5)
    return write_history_csv(tmp_path / "history.csv", t, 2.0 * t, 0.5 * t + 1.0, -0.25 * t)


def make_config_file(tmp_path, truth_path, overrides=None, name="run.yaml"):
    data = {
        "seed": 1234,
        "chain": "scada",
        "truth": str(truth_path),
        "output_dir": str(tmp_path / "out"),
        "formats": ["csv"],
        "scada": {"scan_period_s": 2.0, "n_scans": 50},
    }
    if overrides:
        deep_update(data, overrides)
    path = tmp_path / name
    with open(path, "w") as fh:
        yaml.safe_dump(data, fh, sort_keys=False)
    return path


def deep_update(base, extra):
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            deep_update(base[key], value)
        else:
            base[key] = value
    return base

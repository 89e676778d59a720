"""The compiled and pure-Python kernels must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest

from scmkit.clustering import _backend
from scmkit.clustering import _kernels_py

compiled = pytest.mark.skipif(
    _backend._compiled is None, reason="compiled kernels not built"
)


def random_distance_matrix(rng, n, values=None):
    if values is None:
        raw = rng.uniform(0.01, 2.0, size=(n, n))
    else:
        raw = rng.choice(values, size=(n, n))
    d = np.triu(raw, 1)
    d = d + d.T
    np.fill_diagonal(d, 0.0)
    return np.ascontiguousarray(d)


@compiled
def test_average_linkage_merge_sequences_identical():
    rng = np.random.default_rng(900)
    for _ in range(80):
        n = int(rng.integers(2, 30))
        d = random_distance_matrix(rng, n)
        a = _backend._compiled.average_linkage_merges(d)
        b = _kernels_py.average_linkage_merges(d)
        assert np.array_equal(np.asarray(a), np.asarray(b))


@compiled
def test_average_linkage_identical_on_degenerate_ties():
    rng = np.random.default_rng(901)
    for values in ([1.0], [0.25, 0.5], [0.1, 0.1, 0.3]):
        for _ in range(20):
            n = int(rng.integers(2, 15))
            d = random_distance_matrix(rng, n, values=np.array(values))
            a = _backend._compiled.average_linkage_merges(d)
            b = _kernels_py.average_linkage_merges(d)
            assert np.array_equal(np.asarray(a), np.asarray(b))


@compiled
def test_constrained_merge_sequences_identical():
    rng = np.random.default_rng(902)
    for _ in range(80):
        n = int(rng.integers(3, 20))
        d = random_distance_matrix(rng, n)
        n_slots = int(rng.integers(2, n + 1))
        init = np.concatenate([
            np.arange(n_slots), rng.integers(0, n_slots, size=n - n_slots)
        ]).astype(np.intp)
        rng.shuffle(init)
        new_only = rng.integers(0, 2, size=n_slots).astype(np.uint8)
        if not new_only.any():
            new_only[0] = 1
        n_merges = int(rng.integers(0, min(int(new_only.sum()), n_slots - 1) + 1))
        a = _backend._compiled.constrained_single_linkage_merges(
            d, init, new_only, n_merges
        )
        b = _kernels_py.constrained_single_linkage_merges(d, init, new_only, n_merges)
        assert np.array_equal(np.asarray(a), np.asarray(b))


def _backend_in_subprocess(value):
    env = dict(os.environ)
    if value is None:
        env.pop("SCMKIT_BACKEND", None)
    else:
        env["SCMKIT_BACKEND"] = value
    proc = subprocess.run(
        [sys.executable, "-c", "import scmkit; print(scmkit.BACKEND)"],
        capture_output=True, text=True, env=env,
    )
    return proc


def test_env_var_forces_python_backend():
    proc = _backend_in_subprocess("python")
    assert proc.returncode == 0
    assert proc.stdout.strip() == "python"


@compiled
def test_env_var_forces_compiled_backend():
    proc = _backend_in_subprocess("compiled")
    assert proc.returncode == 0
    assert proc.stdout.strip() == "compiled"


def test_env_var_rejects_unknown_value():
    proc = _backend_in_subprocess("gpu")
    assert proc.returncode != 0
    assert "SCMKIT_BACKEND" in proc.stderr


def test_auto_selects_some_backend():
    proc = _backend_in_subprocess(None)
    assert proc.returncode == 0
    assert proc.stdout.strip() in {"python", "compiled"}

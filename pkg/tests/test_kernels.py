import os
import subprocess
import sys

import numpy as np
import pytest

from swarmtopo import kernels
from swarmtopo.prufer import enumerate_trees

BACKENDS = kernels.available_backends()


def test_compiled_backend_is_selected_when_built():
    if "cython" not in BACKENDS:
        pytest.skip("extension not built")
    if os.environ.get("SWARMTOPO_PURE_PYTHON") == "1":
        pytest.skip("fallback forced by environment")
    assert kernels.BACKEND == "cython"


def test_env_forces_pure_python():
    code = "from swarmtopo import kernels; print(kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"SWARMTOPO_PURE_PYTHON": "1", "PATH": ""}, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("n", range(2, 8))
def test_prufer_backends_agree_exhaustively(n):
    py = BACKENDS["python"]
    for t in enumerate_trees(n):
        edges = sorted(t.edges)
        results = {name: mod.prufer_encode(n, edges) for name, mod in BACKENDS.items()}
        ref = results["python"]
        for r in results.values():
            assert list(r[0]) == list(ref[0]) and list(r[1]) == list(ref[1])
        for mod in BACKENDS.values():
            got = {tuple(sorted(e)) for e in mod.prufer_decode(n, list(ref[1]))}
            assert got == set(t.edges)
    assert py is not None


def _random_edges(rng, n):
    return np.array([(i, int(rng.integers(i))) for i in range(1, n)], dtype=np.int64)


def test_physics_backends_agree(rng):
    if len(BACKENDS) < 2:
        pytest.skip("extension not built")
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    for _ in range(20):
        n = int(rng.integers(2, 40))
        pos = rng.uniform(0, 3, size=(n, 2))
        e = _random_edges(rng, n)
        # keep every edge inside range so the barrier is finite
        for a, b in e:
            pos[a] = pos[b] + rng.uniform(-0.6, 0.6, 2)
        t = rng.uniform(0.3, 0.9, len(e))
        args = (pos, e, t, 1.0, 1.0, 0.01)
        np.testing.assert_allclose(cy.edge_velocities(*args, 1.0, 0.1),
                                   py.edge_velocities(*args, 1.0, 0.1), atol=1e-12)
        assert cy.potential_energy(*args) == pytest.approx(py.potential_energy(*args), rel=1e-12)
        h = 0.02
        x0, y0 = pos.min(0) - 1.1
        nx, ny = (np.ceil((pos.max(0) + 1.1 - pos.min(0) + 1.1) / h)).astype(int)
        assert cy.disk_union_cells(pos, 1.0, x0, y0, h, nx, ny) == \
            py.disk_union_cells(pos, 1.0, x0, y0, h, nx, ny)


@pytest.mark.parametrize("mod", list(BACKENDS.values()), ids=list(BACKENDS))
def test_velocity_zero_at_target_and_clamped(mod):
    pos = np.array([[0.0, 0.0], [0.8, 0.0]])
    e = np.array([[0, 1]], dtype=np.int64)
    v = mod.edge_velocities(pos, e, np.array([0.8]), 1.0, 1.0, 0.0, 1.0, 0.1)
    np.testing.assert_allclose(v, 0.0, atol=1e-15)
    pos[1, 0] = 0.99
    v = mod.edge_velocities(pos, e, np.array([0.2]), 1.0, 1.0, 0.01, 1.0, 0.1)
    assert np.all(np.hypot(v[:, 0], v[:, 1]) <= 0.1 + 1e-15)
    assert v[0, 0] > 0 > v[1, 0]

import numpy as np
import pytest

from spotrees import _kernels
from spotrees.oracles import GridShortestPathOracle, grid_edge_maps


def test_reference_matches_single_solves():
    g = GridShortestPathOracle(4, 4)
    east, north, d = grid_edge_maps(4, 4)
    rng = np.random.default_rng(0)
    C = rng.uniform(0.1, 3.0, size=(40, d))
    values, paths = _kernels.solve_grid_batch_reference(C, 4, 4, east, north)
    for i in range(C.shape[0]):
        dec = g.solve_min(C[i])
        assert dec.objective_value == values[i]
        assert np.array_equal(dec.w, paths[i])


@pytest.mark.skipif(_kernels.BACKEND != "compiled", reason="extension not built")
@pytest.mark.parametrize("width,height", [(2, 2), (4, 4), (3, 5)])
def test_compiled_backend_is_bit_identical(width, height):
    east, north, d = grid_edge_maps(width, height)
    rng = np.random.default_rng(width * 10 + height)
    C = rng.uniform(0.0, 5.0, size=(500, d))
    v_ref, p_ref = _kernels.solve_grid_batch_reference(C, width, height, east, north)
    v_cy, p_cy = _kernels.solve_grid_batch(C, width, height, east, north)
    assert np.array_equal(v_ref, v_cy)
    assert np.array_equal(p_ref, p_cy)


def test_env_var_forces_fallback(tmp_path):
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "from spotrees import _kernels; print(_kernels.BACKEND)"],
        env={"SPOTREES_PURE_PYTHON": "1", "PATH": "/usr/bin:/bin"},
        capture_output=True,
        text=True,
    )
    assert out.stdout.strip() == "numpy"

import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.io

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def airfoil_archives(tmp_path, rng):
    """Three MAT v5 containers holding 12 samples on the 221x51 mesh: two
    coordinate fields and one target field, stored float64 sample-first."""
    shapes = (12, 221, 51)
    arrays = {
        "x": rng.standard_normal(shapes),
        "y": rng.standard_normal(shapes),
        "q": rng.standard_normal(shapes),
    }
    paths = {}
    for var, arr in arrays.items():
        path = tmp_path / f"airfoil_{var}.mat"
        scipy.io.savemat(path, {var: arr})
        paths[var] = path
    return paths, arrays


@pytest.fixture
def darcy_archive(tmp_path, rng):
    """One npz container with 6 samples on the full 421x421 mesh."""
    coeff = rng.standard_normal((6, 421, 421))
    sol = rng.standard_normal((6, 421, 421))
    path = tmp_path / "darcy421.npz"
    np.savez(path, coeff=coeff, sol=sol)
    return path, coeff, sol


@pytest.fixture
def ns_archive(tmp_path, rng):
    """One npy file of 5 trajectories stored (sample, H, W, frame)."""
    traj = rng.standard_normal((5, 64, 64, 20))
    path = tmp_path / "ns_traj.npy"
    np.save(path, traj)
    return path, traj

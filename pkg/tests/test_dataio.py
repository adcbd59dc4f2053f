"""Binary tensor format, manifests, normalization, subsampling, windowing."""
import struct

import numpy as np
import pytest

from dseno import (
    DataError,
    DatasetManifest,
    Normalizer,
    append_coord_channels,
    darcy_subsample,
    load_dataset,
    make_synthetic_darcy,
    make_synthetic_ns,
    ns_windows,
    read_tensor,
    write_tensor,
)
from dseno.dataio import synthetic_darcy_fields, synthetic_ns_trajectories


# -- binary tensor files -----------------------------------------------------

@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_tensor_file_round_trip_is_bitwise(tmp_path, rng, dtype):
    for shape in [(3,), (2, 5), (2, 3, 4, 5), ()]:
        arr = rng.standard_normal(shape).astype(dtype)
        path = tmp_path / "t.dsnt"
        write_tensor(path, arr)
        back = read_tensor(path).data
        assert back.dtype == dtype
        assert back.shape == arr.shape
        assert np.array_equal(back, arr)


def test_tensor_file_header_layout(tmp_path):
    arr = np.arange(6, dtype=np.float32).reshape(2, 3)
    path = tmp_path / "t.dsnt"
    write_tensor(path, arr)
    raw = path.read_bytes()
    assert raw[:4] == b"DSNT"
    version, code, rank = struct.unpack_from("<HBB", raw, 4)
    assert (version, code, rank) == (1, 0, 2)
    assert struct.unpack_from("<2Q", raw, 8) == (2, 3)
    assert raw[24:] == arr.tobytes()
    assert len(raw) == 24 + 6 * 4


def test_tensor_file_rejects_corruption(tmp_path, rng):
    arr = rng.standard_normal((2, 3)).astype(np.float32)
    path = tmp_path / "t.dsnt"
    write_tensor(path, arr)
    raw = bytearray(path.read_bytes())

    bad = tmp_path / "bad.dsnt"
    bad.write_bytes(b"NOPE" + bytes(raw[4:]))
    with pytest.raises(DataError, match="magic"):
        read_tensor(bad)

    wrong_version = bytearray(raw)
    wrong_version[4:6] = struct.pack("<H", 9)
    bad.write_bytes(bytes(wrong_version))
    with pytest.raises(DataError, match="version"):
        read_tensor(bad)

    wrong_dtype = bytearray(raw)
    wrong_dtype[6] = 7
    bad.write_bytes(bytes(wrong_dtype))
    with pytest.raises(DataError, match="dtype"):
        read_tensor(bad)

    bad.write_bytes(bytes(raw[:-4]))  # truncated payload
    with pytest.raises(DataError, match="payload"):
        read_tensor(bad)

    bad.write_bytes(bytes(raw[:6]))  # truncated header
    with pytest.raises(DataError):
        read_tensor(bad)

    with pytest.raises(DataError, match="rank"):
        write_tensor(tmp_path / "r.dsnt", np.zeros((1,) * 9, dtype=np.float32))
    with pytest.raises(DataError, match="dtype"):
        write_tensor(tmp_path / "i.dsnt", np.zeros(3, dtype=np.int32))


# -- manifests ----------------------------------------------------------------

def test_manifest_round_trip(tmp_path):
    m = DatasetManifest(name="demo", n_train=10, n_test=4, inputs="a.dsnt",
                        targets="u.dsnt", mesh=(85, 85), channels=(2, 1),
                        normalize="channel", append_coords=True)
    path = tmp_path / "manifest.txt"
    m.write(path)
    back = DatasetManifest.read(path)
    assert back == m


def test_manifest_ignores_comments_and_blank_lines(tmp_path):
    path = tmp_path / "manifest.txt"
    path.write_text(
        "# demo dataset\n"
        "name = demo\n\n"
        "n_train = 2\n"
        "n_test = 1\n"
        "inputs = a.dsnt\n"
        "targets = u.dsnt\n"
        "mesh = 16x24\n"
    )
    m = DatasetManifest.read(path)
    assert m.mesh == (16, 24)
    assert m.channels == (1, 1)
    assert m.normalize == "channel"
    assert m.append_coords is False


@pytest.mark.parametrize("mutation,match", [
    ("unknown_key = 1", "unknown manifest key"),
    ("name = twice", "duplicate manifest key"),
    ("mesh-is-not-kv", "key=value"),
])
def test_manifest_rejects_malformed_lines(tmp_path, mutation, match):
    base = (
        "name = demo\nn_train = 2\nn_test = 1\n"
        "inputs = a.dsnt\ntargets = u.dsnt\nmesh = 8x8\n"
    )
    path = tmp_path / "manifest.txt"
    path.write_text(base + mutation + "\n")
    with pytest.raises(DataError, match=match):
        DatasetManifest.read(path)


def test_manifest_rejects_missing_keys_and_bad_values(tmp_path):
    path = tmp_path / "manifest.txt"
    path.write_text("name = demo\nn_train = 2\n")
    with pytest.raises(DataError, match="missing manifest keys"):
        DatasetManifest.read(path)

    path.write_text(
        "name = demo\nn_train = 2\nn_test = 1\n"
        "inputs = a.dsnt\ntargets = u.dsnt\nmesh = eightxeight\n"
    )
    with pytest.raises(DataError, match="mesh"):
        DatasetManifest.read(path)

    with pytest.raises(DataError):
        DatasetManifest(name="x", n_train=0, n_test=1, inputs="a", targets="b",
                        mesh=(4, 4))
    with pytest.raises(DataError):
        DatasetManifest(name="x", n_train=1, n_test=1, inputs="a", targets="b",
                        mesh=(4, 4), normalize="minmax")
    with pytest.raises(DataError):
        DatasetManifest(name="x", n_train=1, n_test=1, inputs="a", targets="b",
                        mesh=(4, 4), ns_history=4, ns_horizon=0)


# -- normalization -------------------------------------------------------------

def test_channel_normalizer_statistics(rng):
    data = rng.standard_normal((20, 3, 5, 5)) * [[[[2.0]], [[0.5]], [[4.0]]]] + 1.0
    norm = Normalizer.fit(data, "channel")
    enc = norm.encode(data)
    np.testing.assert_allclose(enc.mean(axis=(0, 2, 3)), 0.0, atol=1e-12)
    np.testing.assert_allclose(enc.std(axis=(0, 2, 3)), 1.0, atol=1e-12)
    np.testing.assert_allclose(norm.decode(enc), data, atol=1e-12)


def test_global_normalizer_pools_all_channels(rng):
    data = rng.standard_normal((10, 4, 6, 6)) * 3.0 - 2.0
    norm = Normalizer.fit(data, "global")
    assert norm.mean.shape == (1, 1, 1)
    enc = norm.encode(data)
    assert enc.mean() == pytest.approx(0.0, abs=1e-12)
    assert enc.std() == pytest.approx(1.0, abs=1e-12)


def test_none_normalizer_is_identity(rng):
    data = rng.standard_normal((4, 2, 3, 3))
    norm = Normalizer.fit(data, "none")
    assert np.array_equal(norm.encode(data), data)


def test_normalizer_floors_tiny_spread():
    data = np.full((5, 1, 4, 4), 7.0)
    norm = Normalizer.fit(data, "channel")
    assert norm.std[0, 0, 0] == 1e-8
    enc = norm.encode(data)
    assert np.all(np.isfinite(enc)) and np.all(enc == 0.0)


def test_normalizer_keeps_input_dtype(rng):
    data = rng.standard_normal((4, 1, 3, 3)).astype(np.float32)
    norm = Normalizer.fit(data, "channel")
    assert norm.encode(data).dtype == np.float32


# -- mesh helpers ----------------------------------------------------------------

def test_coordinate_channels_are_normalized_grids(rng):
    x = rng.standard_normal((2, 1, 4, 5))
    out = append_coord_channels(x)
    assert out.shape == (2, 3, 4, 5)
    np.testing.assert_array_equal(out[:, 0], x[:, 0])
    np.testing.assert_allclose(out[0, 1, :, 0], np.linspace(0, 1, 4), atol=1e-15)
    np.testing.assert_allclose(out[0, 2, 0, :], np.linspace(0, 1, 5), atol=1e-15)


def test_darcy_subsample_keeps_boundary_points():
    field = np.arange(9 * 13, dtype=np.float64).reshape(9, 13)
    sub = darcy_subsample(field, 4)
    assert sub.shape == (3, 4)
    assert sub[0, 0] == field[0, 0]
    assert sub[-1, -1] == field[-1, -1]
    with pytest.raises(DataError):
        darcy_subsample(field, 5)
    with pytest.raises(DataError):
        darcy_subsample(field, 0)
    assert darcy_subsample(np.zeros((241, 241)), 16).shape == (16, 16)
    assert darcy_subsample(np.zeros((421, 421)), 5).shape == (85, 85)


def test_sliding_windows_enumerate_every_position(rng):
    traj = rng.standard_normal((2, 7, 3, 3))
    x, y = ns_windows(traj, history=3, horizon=2)
    assert x.shape == (6, 3, 3, 3)  # 3 window positions x 2 trajectories
    assert y.shape == (6, 2, 3, 3)
    np.testing.assert_array_equal(x[0], traj[0, 0:3])
    np.testing.assert_array_equal(y[0], traj[0, 3:5])
    np.testing.assert_array_equal(x[2], traj[0, 1:4])  # second position, first traj
    np.testing.assert_array_equal(y[-1], traj[1, 5:7])
    with pytest.raises(DataError):
        ns_windows(traj, history=5, horizon=3)
    with pytest.raises(DataError):
        ns_windows(traj, history=0, horizon=2)


# -- dataset loading ----------------------------------------------------------------

def test_load_dataset_splits_and_normalizes(tmp_path):
    manifest = make_synthetic_darcy(tmp_path, n_train=6, n_test=3, size=16, seed=1)
    bundle = load_dataset(manifest)
    assert bundle.train_x_enc.shape == (6, 1, 16, 16)
    assert bundle.test_x_enc.shape == (3, 1, 16, 16)
    assert bundle.train_x_enc.dtype == np.float32
    # statistics come from the training split only
    np.testing.assert_allclose(bundle.train_x_enc.mean(), 0.0, atol=1e-6)
    np.testing.assert_allclose(bundle.train_x_enc.std(), 1.0, atol=1e-5)
    # targets stay physical
    a, u = synthetic_darcy_fields(9, size=16, seed=1)
    np.testing.assert_array_equal(bundle.train_y_phys, u[:6])
    np.testing.assert_array_equal(bundle.test_y_phys, u[6:])
    np.testing.assert_array_equal(bundle.train_x_phys, a[:6])
    assert len(bundle.train_samples()) == 6
    assert bundle.test_samples()[0].index == 0


def test_load_dataset_validates_counts_and_mesh(tmp_path):
    manifest = make_synthetic_darcy(tmp_path, n_train=4, n_test=2, size=8)
    text = manifest.read_text().replace("n_train = 4", "n_train = 40")
    manifest.write_text(text)
    with pytest.raises(DataError, match="exceeds"):
        load_dataset(manifest)
    text = text.replace("n_train = 40", "n_train = 4").replace("8x8", "9x9")
    manifest.write_text(text)
    with pytest.raises(DataError, match="mesh"):
        load_dataset(manifest)


def test_load_ns_dataset_builds_windows_and_rollout_split(tmp_path):
    manifest = make_synthetic_ns(tmp_path, n_train=3, n_test=2, size=12,
                                 frames=14, history=4, horizon=5, seed=2)
    bundle = load_dataset(manifest)
    # 14 frames -> one-step window positions 4..13 -> 10 pairs per trajectory
    assert bundle.train_x_enc.shape == (30, 4, 12, 12)
    assert bundle.train_y_phys.shape == (30, 1, 12, 12)
    assert bundle.test_x_phys.shape == (2, 4, 12, 12)
    assert bundle.test_y_phys.shape == (2, 5, 12, 12)
    traj = synthetic_ns_trajectories(5, size=12, frames=14, seed=2)
    np.testing.assert_array_equal(bundle.test_x_phys, traj[3:, :4])
    np.testing.assert_array_equal(bundle.test_y_phys, traj[3:, 4:9])
    assert bundle.normalizer_in.policy == "global"


def test_synthetic_generators_are_seeded(tmp_path):
    a1, u1 = synthetic_darcy_fields(4, size=12, seed=9)
    a2, u2 = synthetic_darcy_fields(4, size=12, seed=9)
    assert np.array_equal(a1, a2) and np.array_equal(u1, u2)
    a3, _ = synthetic_darcy_fields(4, size=12, seed=10)
    assert not np.array_equal(a1, a3)
    t1 = synthetic_ns_trajectories(2, size=8, frames=5, seed=3)
    t2 = synthetic_ns_trajectories(2, size=8, frames=5, seed=3)
    assert np.array_equal(t1, t2)
    assert t1.shape == (2, 5, 8, 8)

import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rip.designed import (
    PROVENANCE_RIP_TRAINED,
    PredictorMatrix,
    PredictorSet,
    build_uniform_angular_set,
)
from rip.geometry import BlockGeometry, PatchDataset
from rip.regression import (
    MODEL_MAGIC,
    ModelFormatError,
    SingularSystemError,
    TrainingConfig,
    assign_clusters,
    load_model,
    prediction_error,
    ridge_update,
    save_model,
    train,
)


def ridge_oracle(X, Y, lam):
    """Normal equations solved the slow, obvious way."""
    m = X.shape[0]
    return Y @ X.T @ np.linalg.inv(X @ X.T + lam * np.eye(m))


def make_set(g, matrices, labels=None):
    modes = tuple(
        PredictorMatrix(j, labels[j] if labels else f"m{j}", M)
        for j, M in enumerate(matrices)
    )
    return PredictorSet(geometry=g, modes=modes, provenance=PROVENANCE_RIP_TRAINED)


def planted_dataset(g, k, per_cluster, noise, seed):
    """Samples generated by k planted linear maps, optionally noisy."""
    rng = np.random.default_rng(seed)
    gens = [rng.standard_normal((g.block_len, g.ref_len)) for _ in range(k)]
    xs, ys = [], []
    for A in gens:
        X = rng.uniform(-1.0, 1.0, size=(g.ref_len, per_cluster))
        Y = A @ X + noise * rng.standard_normal((g.block_len, per_cluster))
        xs.append(X)
        ys.append(Y)
    ds = PatchDataset(
        geometry=g, X=np.concatenate(xs, axis=1), Y=np.concatenate(ys, axis=1)
    )
    return ds, gens


@pytest.mark.parametrize("lam", [0.0, 0.5, 10.0])
def test_ridge_update_matches_normal_equations(rng, lam):
    for _ in range(20):
        m = int(rng.integers(3, 26))
        n = int(rng.integers(2, 65))
        s = int(rng.integers(m + 5, 201))
        X = rng.standard_normal((m, s))
        Y = rng.standard_normal((n, s))
        got = ridge_update(X, Y, lam)
        want = ridge_oracle(X, Y, lam)
        assert np.linalg.norm(got - want) <= 1e-8 * max(np.linalg.norm(want), 1.0)


def test_ridge_update_exact_on_noiseless_data(rng):
    A = rng.standard_normal((16, 13))
    X = rng.standard_normal((13, 80))
    got = ridge_update(X, A @ X, 0.0)
    np.testing.assert_allclose(got, A, rtol=0, atol=1e-10)


def test_ridge_update_singular_without_regularization(rng):
    X = rng.standard_normal((13, 5))  # rank 5 < 13
    Y = rng.standard_normal((16, 5))
    with pytest.raises(SingularSystemError):
        ridge_update(X, Y, 0.0)
    # the same data is fine once regularized
    M = ridge_update(X, Y, 1e-6)
    assert np.isfinite(M).all()


def test_ridge_update_shrinks_with_heavy_regularization(rng):
    X = rng.standard_normal((13, 100))
    Y = rng.standard_normal((16, 100))
    mild = np.linalg.norm(ridge_update(X, Y, 0.1))
    heavy = np.linalg.norm(ridge_update(X, Y, 1e9))
    assert heavy < 1e-5 * mild


def test_prediction_error_is_euclidean_norm(rng):
    g = BlockGeometry(4)
    M = rng.standard_normal((16, 13))
    mode = PredictorMatrix(0, "m", M)
    x = rng.standard_normal(13)
    y = rng.standard_normal(16)
    want = float(np.sqrt(((y - M @ x) ** 2).sum()))
    assert prediction_error(mode, x, y) == pytest.approx(want, rel=1e-12)
    assert prediction_error(mode, x, M @ x) == 0.0


def test_assign_clusters_matches_exhaustive_argmin(rng):
    g = BlockGeometry(4)
    for _ in range(25):
        k = int(rng.integers(1, 11))
        s = int(rng.integers(1, 101))
        mats = [rng.standard_normal((16, 13)) for _ in range(k)]
        ds = PatchDataset(
            geometry=g,
            X=rng.standard_normal((13, s)),
            Y=rng.standard_normal((16, s)),
        )
        got = assign_clusters(ds, make_set(g, mats))
        for i in range(s):
            errs = [
                np.sqrt(((ds.Y[:, i] - M @ ds.X[:, i]) ** 2).sum()) for M in mats
            ]
            best = int(np.argmin(errs))
            assert got.labels[i] == best
            assert got.per_sample_error[i] == pytest.approx(errs[best], rel=1e-9)


def test_assign_clusters_breaks_ties_toward_lower_index(rng):
    g = BlockGeometry(4)
    M = rng.standard_normal((16, 13))
    pset = make_set(g, [M, M.copy(), M.copy()])  # identical -> always tied
    ds = PatchDataset(
        geometry=g, X=rng.standard_normal((13, 30)), Y=rng.standard_normal((16, 30))
    )
    got = assign_clusters(ds, pset)
    np.testing.assert_array_equal(got.labels, 0)


def test_training_config_validation():
    TrainingConfig(lam=0.0, iterations=1)
    with pytest.raises(ValueError):
        TrainingConfig(lam=-1.0)
    with pytest.raises(ValueError):
        TrainingConfig(iterations=0)


def test_train_recovers_planted_generators():
    g = BlockGeometry(4)
    ds, gens = planted_dataset(g, k=2, per_cluster=200, noise=0.0, seed=5)
    rng = np.random.default_rng(6)
    init = make_set(
        g, [A + 0.05 * rng.standard_normal(A.shape) for A in gens], ["a", "b"]
    )
    out, trace = train(ds, init, TrainingConfig(lam=0.0, iterations=50))
    assert out.provenance == PROVENANCE_RIP_TRAINED
    assert [m.label for m in out.modes] == ["a", "b"]
    for mode, A in zip(out.modes, gens):
        np.testing.assert_allclose(mode.M, A, rtol=0, atol=1e-8)
    # noiseless planted data is an exact fixed point: early exit, 0 moves
    assert out.iterations_trained < 50
    assert trace.reassignments[-1] == 0
    assert trace.total_squared_error[-1] == pytest.approx(0.0, abs=1e-12)


def test_train_error_is_monotone_without_regularization():
    g = BlockGeometry(4)
    ds, gens = planted_dataset(g, k=2, per_cluster=150, noise=0.6, seed=9)
    init = make_set(g, gens)
    _, trace = train(ds, init, TrainingConfig(lam=0.0, iterations=25))
    errs = trace.total_squared_error
    assert len(errs) >= 2
    for a, b in zip(errs, errs[1:]):
        assert b <= a * (1 + 1e-12)


def test_train_keeps_empty_cluster_matrix_untouched():
    g = BlockGeometry(4)
    ds, gens = planted_dataset(g, k=1, per_cluster=120, noise=0.0, seed=3)
    decoy = np.full((16, 13), 1e6)  # never wins a sample
    init = make_set(g, [gens[0], decoy], ["real", "decoy"])
    out, trace = train(ds, init, TrainingConfig(lam=0.0, iterations=10))
    np.testing.assert_array_equal(out.modes[1].M, decoy)
    assert out.modes[1].label == "decoy"
    assert all(sizes[1] == 0 for sizes in trace.cluster_sizes)


def test_train_is_sample_order_invariant(rng):
    g = BlockGeometry(4)
    ds, gens = planted_dataset(g, k=2, per_cluster=100, noise=0.4, seed=12)
    init = make_set(g, gens)
    perm = rng.permutation(ds.count)
    shuffled = PatchDataset(geometry=g, X=ds.X[:, perm], Y=ds.Y[:, perm])
    cfg = TrainingConfig(lam=0.5, iterations=15)
    out_a, _ = train(ds, init, cfg)
    out_b, _ = train(shuffled, init, cfg)
    for ma, mb in zip(out_a.modes, out_b.modes):
        np.testing.assert_allclose(ma.M, mb.M, rtol=0, atol=1e-9)


def test_train_trace_bookkeeping():
    g = BlockGeometry(4)
    ds, gens = planted_dataset(g, k=2, per_cluster=80, noise=0.3, seed=21)
    init = make_set(g, gens)
    out, trace = train(ds, init, TrainingConfig(lam=1.0, iterations=7))
    assert trace.iterations == out.iterations_trained
    assert len(trace.cluster_sizes) == trace.iterations
    assert len(trace.reassignments) == trace.iterations
    assert trace.reassignments[0] == ds.count  # first pass assigns everyone
    for sizes in trace.cluster_sizes:
        assert sizes.sum() == ds.count
    assert out.lam == 1.0

    _, silent = train(ds, init, TrainingConfig(lam=1.0, iterations=3, record_trace=False))
    assert silent.iterations == 0
    assert silent.total_squared_error == []


def test_train_rejects_mismatched_geometry():
    ds, gens = planted_dataset(BlockGeometry(4), k=1, per_cluster=20, noise=0.0, seed=1)
    init = build_uniform_angular_set(BlockGeometry(8), 5)
    with pytest.raises(ValueError):
        train(ds, init, TrainingConfig())


# --- model files -----------------------------------------------------------


def trained_fixture_set(seed=77):
    g = BlockGeometry(4)
    rng = np.random.default_rng(seed)
    mats = [rng.standard_normal((16, 13)) for _ in range(3)]
    modes = tuple(
        PredictorMatrix(j, lbl, M)
        for j, (lbl, M) in enumerate(zip(["angular 45°", "dc (hevc)", "m2"], mats))
    )
    return PredictorSet(
        geometry=g,
        modes=modes,
        provenance=PROVENANCE_RIP_TRAINED,
        lam=2.5,
        iterations_trained=19,
    )


def test_model_round_trip_is_bitwise(tmp_path):
    pset = trained_fixture_set()
    path = tmp_path / "m.rip"
    save_model(pset, path)
    back = load_model(path)
    assert back.geometry == pset.geometry
    assert back.provenance == pset.provenance
    assert back.lam == pset.lam
    assert back.iterations_trained == pset.iterations_trained
    assert [m.label for m in back.modes] == [m.label for m in pset.modes]
    for a, b in zip(back.modes, pset.modes):
        assert np.array_equal(a.M, b.M)


def test_model_file_layout_is_stable(tmp_path):
    pset = build_uniform_angular_set(BlockGeometry(4), 5)
    path = tmp_path / "m.rip"
    save_model(pset, path)
    raw = path.read_bytes()
    assert raw[:4] == MODEL_MAGIC
    header = struct.unpack_from("<4s5IBdI", raw, 0)
    assert header[1:6] == (1, 4, 13, 16, 5)
    assert header[6] == 0  # designed-uniform
    # saving the identical set again is byte-identical
    path2 = tmp_path / "m2.rip"
    save_model(pset, path2)
    assert path2.read_bytes() == raw


def test_load_model_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.rip"
    path.write_bytes(b"JUNK" + b"\x00" * 64)
    with pytest.raises(ModelFormatError, match="magic"):
        load_model(path)


def test_load_model_rejects_short_header(tmp_path):
    path = tmp_path / "short.rip"
    path.write_bytes(b"RIPM\x01")
    with pytest.raises(ModelFormatError, match="truncated"):
        load_model(path)


def test_load_model_rejects_future_version(tmp_path):
    pset = trained_fixture_set()
    path = tmp_path / "m.rip"
    save_model(pset, path)
    raw = bytearray(path.read_bytes())
    struct.pack_into("<I", raw, 4, 2)
    path.write_bytes(bytes(raw))
    with pytest.raises(ModelFormatError, match="version"):
        load_model(path)


def test_load_model_rejects_inconsistent_geometry(tmp_path):
    pset = trained_fixture_set()
    path = tmp_path / "m.rip"
    save_model(pset, path)
    raw = bytearray(path.read_bytes())
    struct.pack_into("<I", raw, 12, 14)  # ref_len that disagrees with block_size
    path.write_bytes(bytes(raw))
    with pytest.raises(ModelFormatError, match="geometry"):
        load_model(path)


def test_load_model_reports_missing_records(tmp_path):
    pset = trained_fixture_set()
    path = tmp_path / "m.rip"
    save_model(pset, path)
    raw = bytearray(path.read_bytes())
    struct.pack_into("<I", raw, 20, 4)  # header now promises one extra mode
    path.write_bytes(bytes(raw))
    with pytest.raises(ModelFormatError, match="declares 4 matrices, file contains 3"):
        load_model(path)


def test_load_model_reports_truncated_record(tmp_path):
    pset = trained_fixture_set()
    path = tmp_path / "m.rip"
    save_model(pset, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-40])  # chop into the final matrix
    with pytest.raises(ModelFormatError, match="record 2"):
        load_model(path)


def test_load_model_rejects_trailing_bytes(tmp_path):
    pset = trained_fixture_set()
    path = tmp_path / "m.rip"
    save_model(pset, path)
    path.write_bytes(path.read_bytes() + b"\x00\x00")
    with pytest.raises(ModelFormatError, match="trailing"):
        load_model(path)


@given(
    k=st.integers(min_value=1, max_value=4),
    seed=st.integers(min_value=0, max_value=2**31),
    lam=st.floats(min_value=0.0, max_value=1e6, allow_nan=False),
    iters=st.integers(min_value=0, max_value=1000),
)
def test_model_round_trip_property(tmp_path_factory, k, seed, lam, iters):
    g = BlockGeometry(2)
    rng = np.random.default_rng(seed)
    modes = tuple(
        PredictorMatrix(j, f"mode {j} é", rng.standard_normal((4, 7)))
        for j in range(k)
    )
    pset = PredictorSet(
        geometry=g,
        modes=modes,
        provenance=PROVENANCE_RIP_TRAINED,
        lam=lam,
        iterations_trained=iters,
    )
    path = tmp_path_factory.mktemp("models") / "m.rip"
    save_model(pset, path)
    back = load_model(path)
    assert back.lam == lam
    assert back.iterations_trained == iters
    for a, b in zip(back.modes, pset.modes):
        assert a.label == b.label
        assert np.array_equal(a.M, b.M)

import math

import numpy as np
import pytest

from sparse_tucker.fista import RecoveryConfig
from sparse_tucker.synthetic import (
    ExperimentSpec,
    instance_rng,
    load_instance,
    make_instance,
    random_orthonormal_matrix,
    random_sparse_core,
    run_experiment,
    save_instance,
)


@pytest.mark.parametrize("J,I", [(1, 1), (5, 3), (40, 28), (12, 12)])
def test_orthonormal_columns(J, I, rng):
    A = random_orthonormal_matrix(J, I, rng)
    assert A.shape == (J, I)
    assert np.abs(A.T @ A - np.eye(I)).max() <= 1e-12


def test_scalar_factor_is_sign():
    for seed in range(10):
        A = random_orthonormal_matrix(1, 1, np.random.default_rng(seed))
        assert abs(A[0, 0]) == pytest.approx(1.0)


def test_orthonormal_rejects_wide(rng):
    with pytest.raises(ValueError, match="I exceeds J"):
        random_orthonormal_matrix(3, 4, rng)


def test_core_extremes(rng):
    X, S = random_sparse_core((3, 4), 0, rng)
    assert not X.any() and len(S) == 0
    X, S = random_sparse_core((3, 4), 12, rng)
    assert len(S) == 12 and np.all(X != 0)
    with pytest.raises(ValueError):
        random_sparse_core((3, 4), 13, rng)


def test_core_value_distribution():
    X, S = random_sparse_core((100, 100), 10_000, np.random.default_rng(1))
    vals = X[S.mask]
    assert 0.99 <= vals.mean() <= 1.01
    assert vals.std() == pytest.approx(0.1, rel=0.05)


def test_noiseless_observation_is_exact():
    inst = make_instance(ExperimentSpec(J=6, I=4, support_size=3, noise_param=0.0), 0)
    np.testing.assert_array_equal(inst.Y, inst.factors.forward(inst.X))


@pytest.mark.parametrize("convention,std", [("stddev", 0.005), ("variance", math.sqrt(0.005))])
def test_noise_variance(convention, std):
    # prod(I) = 27000 samples per instance
    spec = ExperimentSpec(J=(32, 32, 32), I=(30, 30, 30), support_size=5, convention=convention)
    inst = make_instance(spec, 0)
    noise = inst.Y - inst.factors.forward(inst.X)
    assert noise.std() == pytest.approx(std, rel=0.1)


def test_noise_floor_over_seeds():
    spec = ExperimentSpec(J=6, I=4, support_size=3)
    bound = 3 * spec.noise_std * math.sqrt(4 ** 3)
    for seed in range(100):
        inst = make_instance(ExperimentSpec(J=6, I=4, support_size=3, seed=seed), 0)
        assert np.linalg.norm(inst.Y - inst.factors.forward(inst.X)) <= bound


def test_noise_mean_monte_carlo():
    draws = [make_instance(ExperimentSpec(J=5, I=3, support_size=2, seed=s), 0) for s in range(100)]
    noise = np.concatenate([(d.Y - d.factors.forward(d.X)).ravel() for d in draws])
    assert abs(noise.mean()) <= 4 * 0.005 / math.sqrt(noise.size)


def test_spec_validation():
    with pytest.raises(ValueError, match="I exceeds J"):
        ExperimentSpec(J=4, I=6)
    with pytest.raises(ValueError):
        ExperimentSpec(J=(4, 4), I=(2, 2, 2))
    with pytest.raises(ValueError):
        ExperimentSpec(convention="precision")
    assert ExperimentSpec(J=5, I=3).J == (5, 5, 5)


def test_replicate_streams_isolated():
    a = instance_rng(7, 0).standard_normal(4)
    b = instance_rng(7, 1).standard_normal(4)
    c = instance_rng(8, 0).standard_normal(4)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)
    np.testing.assert_array_equal(a, instance_rng(7, 0).standard_normal(4))


def test_instance_deterministic():
    spec = ExperimentSpec(J=6, I=4, support_size=3, seed=9)
    a, b = make_instance(spec, 2), make_instance(spec, 2)
    assert a.Y.tobytes() == b.Y.tobytes() and a.X.tobytes() == b.X.tobytes()
    assert not np.array_equal(a.Y, make_instance(spec, 3).Y)


def test_save_load_round_trip(tmp_path):
    inst = make_instance(ExperimentSpec(J=(5, 4, 3), I=(3, 3, 2), support_size=4, seed=2), 1)
    files = save_instance(inst, tmp_path)
    assert sorted(p.name for p in files) == ["A1.dtf", "A2.dtf", "A3.dtf", "X.dtf", "Y.dtf",
                                             "instance.json"]
    back = load_instance(tmp_path)
    np.testing.assert_array_equal(back.X, inst.X)
    np.testing.assert_array_equal(back.Y, inst.Y)
    assert back.support == inst.support
    for A, B in zip(back.factors, inst.factors):
        np.testing.assert_array_equal(A, B)


def test_run_experiment_rows():
    spec = ExperimentSpec(J=8, I=6, support_size=3, replicates=2, seed=1)
    rows = run_experiment(spec, methods=("fista", "four_stage"), cfg=RecoveryConfig())
    assert [(r.replicate, r.method) for r in rows] == [
        (0, "fista"), (0, "four_stage"), (1, "fista"), (1, "four_stage")]
    for r in rows:
        assert 0.0 <= r.support_f1 <= 1.0 and r.frob_error >= 0.0 and r.wall_time_s > 0


def test_workers_match_serial():
    spec = ExperimentSpec(J=6, I=4, support_size=2, replicates=2, seed=4)
    serial = run_experiment(spec, methods=("fista",))
    pooled = run_experiment(spec, methods=("fista",), workers=2)
    assert [r.frob_error for r in serial] == [r.frob_error for r in pooled]

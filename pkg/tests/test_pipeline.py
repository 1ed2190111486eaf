from pathlib import Path

import numpy as np
import pytest

from sparse_tucker.exceptions import SizeGuardError
from sparse_tucker.fista import RecoveryConfig, effective_support, fista_recover
from sparse_tucker.metrics import support_scores
from sparse_tucker.pipeline import METHODS, four_stage_recover, recover
from sparse_tucker.postprocess import iterative_postprocess
from sparse_tucker.synthetic import ExperimentSpec, load_instance, make_instance
from sparse_tucker.tensor_core import FactorSet, frobenius_norm

FIXTURE = Path(__file__).parent / "data" / "rescue_fixture"


@pytest.fixture
def instance():
    return make_instance(ExperimentSpec(J=8, I=6, support_size=4, seed=11), 0)


def test_zero_observation(small_factors):
    res = four_stage_recover(np.zeros(small_factors.I), small_factors)
    assert not res.estimate.any()
    assert len(res.support) == 0


def test_rescue_fixture():
    inst = load_instance(FIXTURE)
    four = recover(inst.Y, inst.factors, method="four_stage")
    plain = recover(inst.Y, inst.factors, method="fista")
    assert support_scores(inst.support, four.support)[2] == 1.0
    assert support_scores(inst.support, plain.support)[2] < 1.0


def test_fista_dispatch(instance):
    a = recover(instance.Y, instance.factors, method="fista")
    b = fista_recover(instance.Y, instance.factors)
    np.testing.assert_array_equal(a.estimate, b.estimate)


def test_fista_pp_is_composition(instance):
    cfg = RecoveryConfig()
    stage1 = fista_recover(instance.Y, instance.factors, cfg)
    expected = iterative_postprocess(instance.Y, instance.factors, stage1.estimate,
                                     effective_support(stage1.estimate, cfg.tol), cfg)
    got = recover(instance.Y, instance.factors, cfg, method="fista_pp")
    np.testing.assert_array_equal(got.estimate, expected)
    assert set(got.wall_times) == {"fista", "postprocess"}


def test_mvpp_matches_pp(instance):
    pp = recover(instance.Y, instance.factors, method="fista_pp")
    mv = recover(instance.Y, instance.factors, method="fista_mvpp")
    assert frobenius_norm(pp.estimate - mv.estimate) <= 1e-6


def test_mvpp_guard():
    F = FactorSet([np.eye(40)[:, :28]] * 3)
    with pytest.raises(SizeGuardError):
        recover(np.zeros(F.I), F, method="fista_mvpp")


def test_unknown_method(instance):
    with pytest.raises(ValueError, match="unknown method"):
        recover(instance.Y, instance.factors, method="tista")


def test_stage_bookkeeping(instance):
    res = recover(instance.Y, instance.factors, method="four_stage")
    assert set(res.iterations) == {"fista", "augment", "fista_projected", "postprocess"}
    assert res.total_time == pytest.approx(sum(res.wall_times.values()))
    assert res.support <= res.working_support
    assert res.support == effective_support(res.estimate, 0.05)


def test_timings_cover_wall_clock(instance):
    import time

    start = time.perf_counter()
    res = recover(instance.Y, instance.factors, method="four_stage")
    total = time.perf_counter() - start
    assert res.total_time <= total
    assert res.total_time >= 0.5 * total


@pytest.mark.parametrize("method", METHODS)
def test_deterministic(instance, method):
    a = recover(instance.Y, instance.factors, method=method)
    b = recover(instance.Y, instance.factors, method=method)
    assert a.estimate.tobytes() == b.estimate.tobytes()

import math

import numpy as np
import pytest

import drccmdp


@pytest.fixture(scope="module")
def problem():
    return drccmdp.machine_replacement_problem()


def test_problem_shape(problem):
    assert problem.mdp.num_states == 5
    assert problem.mdp.num_pairs == 10
    assert len(problem.constraints) == 2
    assert drccmdp.validate_mdp(problem.mdp) == []


def test_occupation_round_trip(problem):
    policy = [np.array([0.3, 0.7])] * 5
    tau = drccmdp.occupation_from_policy(policy, problem.mdp)
    assert tau.sum() == pytest.approx(1.0)
    assert np.abs(drccmdp.occupation_residual(tau, problem.mdp)).max() < 1e-12
    back = drccmdp.policy_from_occupation(tau, problem.mdp)
    for p in back:
        assert np.allclose(p, [0.3, 0.7])


def test_bad_mdp_rejected():
    bad = drccmdp.machine_replacement_problem()
    t = bad.mdp.transition.copy()
    t[0, 0] = 0.5
    bad.mdp.transition = t
    assert any("(0,0)" in v for v in drccmdp.validate_mdp(bad.mdp))
    with pytest.raises(ValueError):
        drccmdp.solve_dnn(bad, t_end=1.0, samples=1)


def test_normal_cdf():
    assert drccmdp.standard_normal_cdf(0.0) == 0.5
    assert drccmdp.standard_normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)


def test_solvers_agree(problem):
    dnn = drccmdp.solve_dnn(problem, initial_state=drccmdp.machine_replacement_initial_state())
    sca = drccmdp.solve_sca(problem, h0=np.array([0.83, 0.85]))
    assert dnn["accuracy"] < 1e-6
    assert sca["converged"]
    assert dnn["objective"] == pytest.approx(sca["objective"], rel=1e-6)
    for s in range(5):
        keep = 1 if s < 2 else 0
        assert dnn["policy"][s][keep] > 0.999
        assert sca["policy"][s][keep] > 0.999
    assert len(dnn["t"]) == 2001
    assert math.isfinite(dnn["kkt"]["max"])

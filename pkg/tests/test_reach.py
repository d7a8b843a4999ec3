import numpy as np
import pytest

from conftest import random_stable, random_zonotope
from krylov_reach.errors import CertificateError
from krylov_reach.oracle import dense_reach, random_signal, sample_zonotope, simulate_many
from krylov_reach.policy import XiPolicy
from krylov_reach.reach import ReachConfig, check_safety, reach
from krylov_reach.sets import Zonotope, contains_points, interval_hull, support_many
from krylov_reach.sparse_linalg import SparseMatrix


def small_system(n=8, seed=0):
    rng = np.random.default_rng(seed)
    A = random_stable(n, 0.3, seed, scale=2.0)
    X0 = Zonotope(rng.standard_normal(n), 0.1 * rng.standard_normal((n, 2)))
    U = Zonotope(np.zeros(n), 0.2 * rng.standard_normal((n, 2)))
    return A, X0, U


def test_config_validation():
    with pytest.raises(ValueError):
        ReachConfig(delta=0.0, t_f=1.0)
    with pytest.raises(ValueError):
        ReachConfig(delta=0.1, t_f=0.05)
    with pytest.raises(ValueError):
        ReachConfig(delta=0.1, t_f=1.0, input_mode="other")
    with pytest.raises(ValueError):
        ReachConfig(delta=0.1, t_f=1.0, error_channel="other")
    assert ReachConfig(delta=0.1, t_f=1.0).steps == 10
    assert ReachConfig(delta=0.3, t_f=1.0).steps == 4


def test_horizon_remainder_reported():
    A, X0, U = small_system()
    res = reach(A, None, X0, U, ReachConfig(delta=0.3, t_f=1.0))
    assert res.steps == 4 and len(res.time_point_sets) == 4
    assert res.diagnostics["run"]["horizon_remainder"] == pytest.approx(0.2)


def test_static_system(rng):
    n = 4
    X0 = random_zonotope(n, 2, rng)
    res = reach(SparseMatrix.zeros(n), None, X0, Zonotope.point(np.zeros(n)), ReachConfig(delta=0.5, t_f=2.0))
    D = rng.standard_normal((20, n))
    for P, R in zip(res.time_point_sets, res.time_interval_sets):
        assert np.allclose(support_many(P, D), support_many(X0, D), atol=1e-12)
        assert np.all(support_many(R, D) >= support_many(X0, D) - 1e-12)


def test_pure_integration():
    n, r, delta = 3, np.array([1.0, 0.5, 2.0]), 0.25
    res = reach(SparseMatrix.zeros(n), None, Zonotope.point(np.zeros(n)), Zonotope.box(np.zeros(n), r),
                ReachConfig(delta=delta, t_f=2.0))
    for k, P in enumerate(res.time_point_sets, start=1):
        iv = interval_hull(P)
        assert np.allclose(iv.sup, k * delta * r, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("mode", ["varying", "constant"])
def test_dense_equivalence_small(mode):
    A, X0, U = small_system(12, 3)
    cfg = ReachConfig(delta=0.05, t_f=0.5, input_mode=mode, xi_policy=XiPolicy(fixed=12))
    kr = reach(A, None, X0, U, cfg)
    dn = dense_reach(A, X0, U, cfg)
    D = np.random.default_rng(0).standard_normal((50, 12))
    for k in range(cfg.steps):
        st = kr.diagnostics["steps"][k]
        for S1, S2, radius in ((kr.time_point_sets[k], dn.time_point_sets[k], st["point_err_max"]),
                               (kr.time_interval_sets[k], dn.time_interval_sets[k], st["interval_err_max"])):
            tol = 1e-9 + np.abs(D).sum(axis=1) * (radius + 1e-12)
            assert np.all(np.abs(support_many(S1, D) - support_many(S2, D)) <= tol)


@pytest.mark.parametrize("channel", ["interval", "generators"])
def test_containment_of_trajectories(channel):
    A, X0, U = small_system(6, 1)
    delta = 0.1
    cfg = ReachConfig(delta=delta, t_f=1.0, error_channel=channel)
    res = reach(A, None, X0, U, cfg)
    rng = np.random.default_rng(7)
    x0s = sample_zonotope(X0, rng, 30)
    sigs = [random_signal(U, 1.0, delta / 16, rng) for _ in range(30)]
    fine = np.linspace(0, 1.0, 10 * cfg.steps + 1)
    trajs = simulate_many(A, None, x0s, sigs, 1.0, tol=1e-11, t_eval=fine)
    for tr in trajs:
        for k in range(cfg.steps):
            t_k = (k + 1) * delta
            i = np.argmin(np.abs(tr.times - t_k))
            assert contains_points(res.time_point_sets[k], tr.states[i][:, None]).all()
            inside = (tr.times >= k * delta - 1e-12) & (tr.times <= t_k + 1e-12)
            assert contains_points(res.time_interval_sets[k], tr.states[inside].T).all()


def test_generator_counts_constant():
    A, X0, U = small_system(10, 2)
    res = reach(A, None, X0, U, ReachConfig(delta=0.05, t_f=1.0))
    steps = res.diagnostics["steps"]
    for key in ("carrier_generators", "box_carrier_generators", "accumulator_generators",
                "interval_set_generators"):
        assert len({s[key] for s in steps}) == 1
    assert {P.num_generators for P in res.time_point_sets} == {res.time_point_sets[0].num_generators}


def test_generators_channel_grows():
    A, X0, U = small_system(5, 2)
    res = reach(A, None, X0, U, ReachConfig(delta=0.05, t_f=0.3, error_channel="generators",
                                             xi_policy=XiPolicy(fixed=2)))
    counts = [s["carrier_generators"] for s in res.diagnostics["steps"]]
    assert counts[-1] > counts[0]


def test_constant_inside_varying():
    A, X0, U = small_system(8, 4)
    base = dict(delta=0.1, t_f=1.0)
    rc = reach(A, None, X0, U, ReachConfig(input_mode="constant", **base))
    rv = reach(A, None, X0, U, ReachConfig(input_mode="varying", **base))
    D = np.random.default_rng(1).standard_normal((40, 8))
    for Pc, Pv in zip(rc.time_point_sets, rv.time_point_sets):
        assert np.all(support_many(Pc, D) <= support_many(Pv, D) + 1e-9)


def test_determinism():
    A, X0, U = small_system(9, 5)
    cfg = ReachConfig(delta=0.1, t_f=0.8)
    r1, r2 = reach(A, None, X0, U, cfg), reach(A, None, X0, U, cfg)
    assert r1.diagnostics == r2.diagnostics
    for S1, S2 in zip(r1.time_interval_sets + r1.time_point_sets, r2.time_interval_sets + r2.time_point_sets):
        assert np.array_equal(S1.center, S2.center) and np.array_equal(S1.generators, S2.generators)


def test_input_matrix_applied():
    A, X0, _ = small_system(6, 0)
    B = np.zeros((6, 1))
    B[0, 0] = 1.0
    U = Zonotope.box([0.0], [1.0])
    res = reach(A, B, X0, U, ReachConfig(delta=0.1, t_f=0.2))
    ref = reach(A, None, X0, Zonotope(np.zeros(6), B), ReachConfig(delta=0.1, t_f=0.2))
    assert np.allclose(res.time_point_sets[-1].generators, ref.time_point_sets[-1].generators)


def test_dimension_errors():
    A, X0, U = small_system(6, 0)
    with pytest.raises(ValueError):
        reach(A, None, Zonotope.point(np.zeros(5)), U, ReachConfig(delta=0.1, t_f=0.2))
    with pytest.raises(ValueError):
        reach(A, None, X0, Zonotope.point(np.zeros(5)), ReachConfig(delta=0.1, t_f=0.2))


def test_strict_mode_rejects_constant_inputs():
    A, X0, U = small_system(6, 0)
    with pytest.raises(CertificateError):
        reach(A, None, X0, U, ReachConfig(delta=0.1, t_f=0.2, input_mode="constant", strict_soundness=True))


def test_strict_mode_rejects_unmet_certificate():
    A = random_stable(200, 0.05, 0, scale=20)
    X0 = Zonotope.point(np.ones(200))
    U = Zonotope.point(np.zeros(200))
    cfg = ReachConfig(delta=1.0, t_f=1.0, xi_policy=XiPolicy(target=1e-14, cap=3), strict_soundness=True)
    with pytest.raises(CertificateError):
        reach(A, None, X0, U, cfg)


def test_check_safety_examples(rng):
    n = 3
    X0 = Zonotope.box(np.zeros(n), np.ones(n))
    res = reach(SparseMatrix.zeros(n), None, X0, Zonotope.point(np.zeros(n)), ReachConfig(delta=0.5, t_f=2.0))
    far = check_safety(res, {0: (10.0, 20.0)})
    assert far.safe and far.first_violation is None and all(far.per_step)
    hit = check_safety(res, {1: (-0.5, 0.5)})
    assert not hit.safe and hit.first_violation == 1
    with pytest.raises(ValueError):
        check_safety(res, {5: (0.0, 1.0)})


def test_check_safety_matches_vertex_check():
    A, X0, U = small_system(4, 6)
    res = reach(A, None, X0, U, ReachConfig(delta=0.1, t_f=1.0))
    for lo in np.linspace(-2, 2, 9):
        unsafe = {0: (lo, lo + 0.3)}
        v = check_safety(res, unsafe)
        for k, R in enumerate(res.time_interval_sets):
            # the interval hull in coordinate 0 is spanned by the extreme points of the zonotope
            e = np.zeros(4)
            e[0] = 1.0
            hi_k, lo_k = support_many(R, e[None])[0], -support_many(R, -e[None])[0]
            assert v.per_step[k] == (hi_k < lo or lo_k > lo + 0.3)

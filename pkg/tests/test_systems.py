import numpy as np
import pytest

from swobs import BimodalSystem, Mode, ObserverSpec
from swobs.systems import observer_field


def test_eval_field_reference_values(ex1, ex2, ex3):
    # inputs vanish at t=0 in all three bundles
    assert np.allclose(ex1.system.eval_field(Mode.PLUS, [1.0, 0.0], 0.0), [-30.0, 0.0])
    assert np.allclose(ex2.system.eval_field(Mode.MINUS, [0.0, 0.0], 0.0), [2.0, 4.0])
    assert np.allclose(ex3.system.eval_field(Mode.PLUS, [0.0, 1.0], 0.0), [1.0, -0.2])


def test_eval_field_shape_check(ex1):
    with pytest.raises(ValueError):
        ex1.system.eval_field(Mode.PLUS, [1.0, 2.0, 3.0], 0.0)


def test_input_enters_both_modes(ex1):
    up = ex1.system.eval_field(Mode.PLUS, [1.0, 0.0], 0.25)
    um = ex1.system.eval_field(Mode.MINUS, [1.0, 0.0], 0.25)
    base_p = ex1.system.eval_field(Mode.PLUS, [1.0, 0.0], 0.0)
    base_m = ex1.system.eval_field(Mode.MINUS, [1.0, 0.0], 0.0)
    assert np.allclose(up - base_p, um - base_m)  # identical u(t) shift


def test_observer_field_reference_values(ex1, ex2):
    obs1 = ex1.observer()
    got = observer_field(obs1, Mode.PLUS, [1.0, 1.0], [4.0], 0.0)
    assert np.allclose(got, [-36.0, -4.0])
    # with y = g(xhat) the correction vanishes
    xhat = np.array([1.5, -0.5])
    y = ex1.system.output(xhat)
    same = observer_field(obs1, Mode.MINUS, xhat, y, 0.0)
    assert np.allclose(same, ex1.system.eval_field(Mode.MINUS, xhat, 0.0))
    obs2 = ex2.observer()
    got2 = observer_field(obs2, Mode.PLUS, [0.0, 0.0], [0.6], 0.0)
    assert np.allclose(got2, [-0.4, -2.4])


def test_observer_gain_shape_validation(ex1):
    with pytest.raises(ValueError):
        ObserverSpec(ex1.system, [[1.0]], [[1.0]])
    sys_no_output = BimodalSystem.from_sources(1, ["-x1"], ["-x1"], "x1")
    with pytest.raises(ValueError, match="output"):
        ObserverSpec(sys_no_output, [[1.0]], [[1.0]])


def test_jacobian_reference_values(ex1, ex2):
    J = ex1.system.jacobian(Mode.PLUS, [1.0, 0.0])
    assert np.allclose(J, [[-15.0, 0.0], [0.0, -4.0]])
    assert np.allclose(ex1.system.output_jacobian([0.0, 0.0]), [[0.0, 0.0]])
    assert np.allclose(ex2.system.jacobian(Mode.PLUS, [7.0, -3.0]), [[-1.0, 0.0], [2.0, -2.0]])
    assert np.allclose(ex2.system.jacobian(Mode.MINUS, [0.0, 0.0]), [[-1.0, 0.0], [2.0, -3.0]])


def test_jacobians_match_finite_differences(ex1, ex2, ex3, rng):
    step = 6e-6
    for bundle in (ex1, ex2, ex3):
        sys = bundle.system
        for _ in range(100):
            x = rng.uniform(-2.0, 2.0, size=sys.n)
            t = float(rng.uniform(0.0, 1.0))
            for mode in (Mode.PLUS, Mode.MINUS):
                J = sys.jacobian(mode, x, t)
                for j in range(sys.n):
                    h = step * (1.0 + abs(x[j]))
                    xp, xm = x.copy(), x.copy()
                    xp[j] += h
                    xm[j] -= h
                    fd = (sys.field(mode, xp, t) - sys.field(mode, xm, t)) / (2 * h)
                    assert np.allclose(J[:, j], fd, atol=1e-6 * (1 + np.abs(J[:, j]).max()))


def test_pwa_field_is_affine(ex2, rng):
    sys = ex2.system
    A1 = sys.pwa["A1"]
    for _ in range(25):
        x = rng.uniform(-4.0, 4.0, size=2)
        t = float(rng.uniform(0.0, 1.0))
        lhs = sys.field(Mode.PLUS, x, t) - sys.field(Mode.PLUS, np.zeros(2), t)
        assert np.allclose(lhs, A1 @ x, atol=1e-12)


def test_region_classification(ex3):
    sys = ex3.system
    assert sys.region([0.0, 1.0]) == Mode.PLUS
    assert sys.region([0.0, -1.0]) == Mode.MINUS
    assert sys.region([0.3, 0.0]) == Mode.SLIDING
    assert sys.region([0.3, 0.5e-9]) == Mode.SLIDING  # within tol_h


def test_field_time_dependence_rejected():
    with pytest.raises(ValueError, match="autonomous"):
        BimodalSystem.from_sources(1, ["-x1 + t"], ["-x1"], "x1")
    with pytest.raises(ValueError, match="t only"):
        BimodalSystem.from_sources(1, ["-x1"], ["-x1"], "x1", u=["x1"])
    with pytest.raises(ValueError, match="state only"):
        BimodalSystem.from_sources(1, ["-x1"], ["-x1"], "t")


def test_with_params_rebuilds(ex3):
    sys = ex3.system
    bumped = sys.with_params(F_f=0.2)
    f_old = sys.eval_field(Mode.PLUS, [0.0, 1.0], 0.0)
    f_new = bumped.eval_field(Mode.PLUS, [0.0, 1.0], 0.0)
    assert f_new[1] == pytest.approx(f_old[1] - 0.1)
    with pytest.raises(ValueError, match="unknown parameter"):
        sys.with_params(nope=1.0)


def test_with_params_rejected_for_pwa(ex2):
    with pytest.raises(ValueError):
        ex2.system.with_params(anything=1.0)


def test_fd_jacobian_fallback():
    # abs() blocks symbolic differentiation; the entry falls back to central
    # differences and must still match on smooth ground
    sys = BimodalSystem.from_sources(
        2, ["-x1 + abs(x2)", "-x2"], ["-x1", "-x2"], "x1"
    )
    J = sys.jacobian(Mode.PLUS, [1.0, 2.0])
    assert np.allclose(J, [[-1.0, 1.0], [0.0, -1.0]], atol=1e-7)

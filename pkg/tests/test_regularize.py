import numpy as np
import pytest

from swobs import (
    BimodalSystem,
    IntegratorConfig,
    Mode,
    TransitionFunction,
    integrate,
    order_study,
    phi,
    regularized_field,
)
from swobs.measures import MeasureKind
from swobs.regularize import simulate_regularized


def test_phi_cubic_reference_values():
    tf = TransitionFunction("cubic", 1e-2)
    assert phi(tf, 0.0) == 0.0
    assert phi(tf, 1e-2) == 1.0
    assert phi(tf, -1e-2) == -1.0
    assert phi(tf, 5e-3) == pytest.approx(0.6875, abs=1e-15)
    assert phi(tf, 0.5) == 1.0  # saturates beyond the layer


def test_phi_cubic_is_c1_at_boundary():
    # the inner one-sided slope decays linearly to the outer slope (zero)
    tf = TransitionFunction("cubic", 1e-3)
    slopes = []
    for d in (1e-6, 1e-7, 1e-8):
        slopes.append((phi(tf, 1e-3 - d) - phi(tf, 1e-3 - 3 * d)) / (2 * d))
    assert slopes[0] > slopes[1] > slopes[2] > 0.0
    assert slopes[2] < 1e-1
    assert (phi(tf, 1e-3 + 3e-8) - phi(tf, 1e-3 + 1e-8)) == 0.0
    # the saturation variant keeps a finite inner slope: not C1
    sat = TransitionFunction("saturation", 1e-3)
    inner = (phi(sat, 1e-3 - 1e-8) - phi(sat, 1e-3 - 3e-8)) / (2e-8)
    assert inner == pytest.approx(1e3, rel=1e-6)


def test_phi_monotone_and_bounded():
    for variant in ("cubic", "saturation"):
        tf = TransitionFunction(variant, 0.3)
        vals = [phi(tf, s) for s in np.linspace(-1.0, 1.0, 501)]
        assert all(-1.0 <= v <= 1.0 for v in vals)
        assert all(b - a >= -1e-15 for a, b in zip(vals, vals[1:]))


def test_transition_validation():
    with pytest.raises(ValueError):
        TransitionFunction("quintic", 1e-2)
    with pytest.raises(ValueError):
        TransitionFunction("cubic", 0.0)
    assert not TransitionFunction("saturation", 1e-2).is_c1
    assert TransitionFunction("cubic", 1e-2).is_c1


def test_regularized_field_reference_values(ex3):
    sys = ex3.system
    tf = TransitionFunction("cubic", 1e-2)
    # outside the layer the mode fields are reproduced exactly
    x_plus = np.array([0.3, 0.5])
    assert np.array_equal(regularized_field(sys, tf, x_plus, 0.7),
                          sys.field(Mode.PLUS, x_plus, 0.7))
    x_minus = np.array([0.3, -0.5])
    assert np.array_equal(regularized_field(sys, tf, x_minus, 0.7),
                          sys.field(Mode.MINUS, x_minus, 0.7))
    # on the surface: arithmetic mean
    x_on = np.array([0.3, 0.0])
    mean = 0.5 * (sys.field(Mode.PLUS, x_on, 0.2) + sys.field(Mode.MINUS, x_on, 0.2))
    assert np.allclose(regularized_field(sys, tf, x_on, 0.2), mean, atol=1e-15)
    # half-layer: weights (1 +- 0.6875)/2
    x_half = np.array([0.3, 5e-3])
    want = 0.84375 * sys.field(Mode.PLUS, x_half, 0.2) + 0.15625 * sys.field(
        Mode.MINUS, x_half, 0.2
    )
    assert np.allclose(regularized_field(sys, tf, x_half, 0.2), want, atol=1e-15)


def test_regularized_field_directional_derivative_continuous(ex1):
    # finite-difference slopes straddling the layer boundary: for the cubic
    # variant inside matches outside as the straddle shrinks; the saturation
    # variant keeps an O(jump/eps) mismatch no matter how close
    sys = ex1.system
    t, eps, d = 0.3, 1e-3, 1e-9

    def fd_slope(tf, center):
        lo = regularized_field(sys, tf, np.array([center - d, 0.7]), t)
        hi = regularized_field(sys, tf, np.array([center + d, 0.7]), t)
        return (hi - lo) / (2 * d)

    cubic = TransitionFunction("cubic", eps)
    inside = fd_slope(cubic, eps - 3 * d)
    outside = fd_slope(cubic, eps + 3 * d)
    assert np.abs(inside - outside).max() < 1.0

    sat = TransitionFunction("saturation", eps)
    mismatch = np.abs(fd_slope(sat, eps - 3 * d) - fd_slope(sat, eps + 3 * d)).max()
    assert mismatch > 1e3


def test_no_discontinuity_means_no_deviation():
    sys = BimodalSystem.from_sources(2, ["-x1", "-x2"], ["-x1", "-x2"], "x1")
    study = order_study(sys, TransitionFunction("cubic", 1e-2), [1.0, -1.0],
                        (0.0, 2.0), [1e-2, 5e-3, 2.5e-3], MeasureKind.L2)
    assert all(d <= 1e-8 for d in study.deviations)


def test_order_study_validation(ex1):
    tf = TransitionFunction("cubic", 1e-2)
    with pytest.raises(ValueError, match="at least 3"):
        order_study(ex1.system, tf, [3.0, 3.0], (0.0, 1.0), [1e-2, 5e-3])
    with pytest.raises(ValueError, match="below 10x"):
        order_study(ex1.system, tf, [3.0, 3.0], (0.0, 1.0), [1e-2, 5e-3, 1e-10])


def test_smoothed_run_tracks_sliding_solution(ex1):
    # short horizon keeps this cheap; the smoothed trajectory must stay close
    # to the switched one at layer scale
    sys = ex1.system
    eps = 5e-3
    cfg = IntegratorConfig(t_span=(0.0, 0.5), rel_tol=1e-9, abs_tol=1e-11)
    ref = integrate(sys, [3.0, 3.0], cfg)
    run = simulate_regularized(sys, TransitionFunction("cubic", eps), [3.0, 3.0], cfg)
    grid = np.linspace(0.0, 0.5, 300)
    dev = np.abs(ref.interp(grid) - run.interp(grid)).max()
    assert dev < 5 * eps
    assert len(run.events) == 0

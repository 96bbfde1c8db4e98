import numpy as np
import pytest
from scipy.optimize import brentq

from swobs import (
    BimodalSystem,
    DegenerateSlidingError,
    IntegrationError,
    IntegratorConfig,
    Mode,
    integrate,
    integrate_smooth,
    sliding_exit_check,
    sliding_field,
)


@pytest.fixture(scope="module")
def ex3_traj(ex3):
    cfg = ex3.integrator_config(ex3.simulate)
    return integrate(ex3.system, ex3.simulate["x0"], cfg)


@pytest.fixture(scope="module")
def ex1_traj(ex1):
    cfg = ex1.integrator_config(ex1.simulate)
    return integrate(ex1.system, ex1.simulate["x0"], cfg)


def test_exact_linear_crossing():
    sys = BimodalSystem.from_sources(1, ["1"], ["1"], "x1")
    tr = integrate(sys, [-1.0], IntegratorConfig(t_span=(0.0, 2.0)))
    assert [e.kind for e in tr.events] == ["crossing"]
    assert tr.events[0].t == pytest.approx(1.0, abs=1e-10)
    assert abs(sys.h(tr.events[0].x)) <= 1e-10
    assert tr.x_final[0] == pytest.approx(1.0, abs=1e-8)
    assert tr.modes[-1] == Mode.PLUS


def test_identical_modes_decay():
    sys = BimodalSystem.from_sources(1, ["-x1"], ["-x1"], "x1")
    cfg = IntegratorConfig(t_span=(0.0, 1.0))
    tr = integrate(sys, [1.0], cfg)
    assert tr.x_final[0] == pytest.approx(np.exp(-1.0), abs=10 * cfg.rel_tol)


def test_undriven_stick_stays_forever(ex3):
    sys = ex3.system.with_params(F_d=0.0)
    x0 = np.array([0.05, 0.0])
    fs = sliding_field(sys, x0, 0.0)
    assert np.allclose(fs, 0.0, atol=1e-15)
    assert sliding_exit_check(sys, x0, 0.0) == "stay"
    tr = integrate(sys, x0, IntegratorConfig(t_span=(0.0, 5.0)))
    assert [e.kind for e in tr.events] == ["sliding-entry"]
    assert np.allclose(tr.x_final, x0, atol=1e-12)
    assert np.all(tr.modes == Mode.SLIDING)


def test_sliding_field_preconditions(ex3):
    sys = ex3.system.with_params(F_d=0.0)
    # grad_h . F+ > 0 at x1 = -1: not attracting
    with pytest.raises(ValueError, match="attracting"):
        sliding_field(sys, np.array([-1.0, 0.0]), 0.0)
    flat = BimodalSystem.from_sources(2, ["1", "0"], ["1", "0"], "x2")
    with pytest.raises(DegenerateSlidingError):
        sliding_field(flat, np.array([0.0, 0.0]), 0.0)


def test_sliding_field_annihilates_normal_component(ex3, rng):
    sys = ex3.system
    for _ in range(20):
        x1 = float(rng.uniform(-0.08, 0.08))
        t = float(rng.uniform(0.0, 2.0))
        x = np.array([x1, 0.0])
        if sliding_exit_check(sys, x, t) != "stay":
            continue
        fs = sliding_field(sys, x, t)
        assert abs(sys.grad_h(x) @ fs) <= 1e-10


def test_exit_classification_boundaries(ex3):
    sys = ex3.system.with_params(F_d=0.0)
    # alpha = 1 boundary: grad_h.F+ = 0 at x1 = -F_f (exit through S+)
    assert sliding_exit_check(sys, np.array([-0.1, 0.0]), 0.0) == "exit_plus"
    assert sliding_exit_check(sys, np.array([0.1, 0.0]), 0.0) == "exit_minus"
    assert sliding_exit_check(sys, np.array([0.0, 0.0]), 0.0) == "stay"


def test_driven_stick_slip_events(ex3, ex3_traj):
    kinds = [e.kind for e in ex3_traj.events]
    assert kinds.count("sliding-entry") >= 1
    assert kinds.count("sliding-exit") >= 1
    assert kinds.count("crossing") > 10
    for e in ex3_traj.events:
        assert abs(ex3.system.h(e.x)) <= 1e-10


def test_stick_release_matches_scalar_root(ex3, ex3_traj):
    # during the stick the position is frozen; the release happens when the
    # spring+drive force leaves the friction band
    entry = next(e for e in ex3_traj.events if e.kind == "sliding-entry")
    exit_ev = next(e for e in ex3_traj.events if e.kind == "sliding-exit")
    x1 = entry.x[0]
    t_root = brentq(lambda t: -x1 - 0.1 + np.sin(np.pi * t), 1e-9, 0.5, xtol=1e-14)
    assert exit_ev.t == pytest.approx(t_root, abs=1e-9)


def test_sliding_consistency(ex3, ex3_traj):
    sys = ex3.system
    sliding = ex3_traj.modes == Mode.SLIDING
    assert sliding.sum() >= 1
    hs = np.array([sys.h(x) for x in ex3_traj.X[sliding]])
    assert np.max(np.abs(hs)) <= 10 * 1e-10
    for t, x in zip(ex3_traj.ts[sliding], ex3_traj.X[sliding]):
        if sliding_exit_check(sys, x, t) == "stay":
            assert abs(sys.grad_h(x) @ sliding_field(sys, x, t)) <= 1e-10


def test_event_ordering_no_unmarked_straddle(ex1, ex1_traj, ex3, ex3_traj):
    for bundle, traj in ((ex1, ex1_traj), (ex3, ex3_traj)):
        sys = bundle.system
        event_ts = {round(e.t, 12) for e in traj.events}
        hs = np.array([sys.h(x) for x in traj.X])
        for i in range(len(traj.ts) - 1):
            a, b = hs[i], hs[i + 1]
            if abs(a) <= 1e-9 or abs(b) <= 1e-9:
                continue
            if np.sign(a) != np.sign(b):
                assert any(traj.ts[i] <= te <= traj.ts[i + 1] for te in event_ts), (
                    f"unmarked sign change in ({traj.ts[i]}, {traj.ts[i + 1]})"
                )


def test_determinism_bit_identical(ex3):
    cfg = ex3.integrator_config(ex3.simulate)
    a = integrate(ex3.system, ex3.simulate["x0"], cfg)
    b = integrate(ex3.system, ex3.simulate["x0"], cfg)
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.ts, b.ts)
    assert [e.t for e in a.events] == [e.t for e in b.events]


def test_convergence_under_tolerance_halving(ex1, ex2, ex3):
    for bundle in (ex1, ex2, ex3):
        block = bundle.simulate
        cfg = bundle.integrator_config(block)
        tight = IntegratorConfig(
            t_span=cfg.t_span, rel_tol=cfg.rel_tol / 2, abs_tol=cfg.abs_tol / 2
        )
        a = integrate(bundle.system, block["x0"], cfg)
        b = integrate(bundle.system, block["x0"], tight)
        drift = np.max(np.abs(a.x_final - b.x_final))
        assert drift < 10 * max(cfg.rel_tol, cfg.abs_tol)


def test_interp_matches_samples(ex1_traj):
    for i in range(0, len(ex1_traj.ts), 100):
        assert np.allclose(ex1_traj.interp(ex1_traj.ts[i]), ex1_traj.X[i], atol=1e-12)


def test_blowup_reports_partial_trajectory():
    sys = BimodalSystem.from_sources(1, ["1 + x1^2"], ["1 + x1^2"], "x1 - 100")
    with pytest.raises(IntegrationError) as ei:
        integrate(sys, [0.0], IntegratorConfig(t_span=(0.0, 3.0)))
    partial = ei.value.partial
    assert partial is not None and len(partial.ts) > 1
    assert partial.ts[-1] < 1.6  # tan blows up at pi/2


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(t_span=(1.0, 0.0))
    with pytest.raises(ValueError):
        IntegratorConfig(t_span=(0.0, 1.0), rel_tol=-1e-8)
    with pytest.raises(ValueError):
        IntegratorConfig(t_span=(0.0, 1.0), max_step=0.0)


def test_integrate_smooth_plain_ode():
    cfg = IntegratorConfig(t_span=(0.0, 2.0))
    tr = integrate_smooth(lambda x, t: -x, np.array([1.0, 2.0]), cfg)
    assert np.allclose(tr.x_final, [np.exp(-2.0), 2 * np.exp(-2.0)], atol=1e-8)
    assert len(tr.events) == 0


def test_initial_point_on_surface_crossing(ex3):
    # x0 on the surface with both fields pushing up: starts in the plus mode
    tr = integrate(ex3.system, [-1.0, 0.0], IntegratorConfig(t_span=(0.0, 1.0)))
    assert tr.modes[0] == Mode.PLUS
    assert not [e for e in tr.events if e.kind == "sliding-entry"]

"""Event-driven integration of bimodal switched systems.

Inside each smooth mode an embedded Dormand-Prince 5(4) pair with PI step
control advances the state; the pair's quartic dense-output interpolant
supports sampling, output feeds, and event localization.  A sign change of
the switching function across an accepted step is located by bisection on the
interpolant, then classified: if both mode fields point toward the surface
the trajectory enters sliding, where the Filippov convex combination of the
two fields is integrated and the state is projected back onto the surface
after every accepted step.  Exits from sliding are monitored through the
normal components of both fields.

Guards are "armed" only once the trajectory is clearly off the surface, which
prevents an event from immediately retriggering on the numerical noise left
at its own location point.  Grazing contacts (tangent fields) are resolved in
the direction the flow actually moves and recorded with kind ``grazing``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield
from typing import Callable, List, Optional, Tuple

import numpy as np

from .systems import BimodalSystem, Mode

# Dormand-Prince 5(4) tableau; the 5th order solution is propagated (FSAL).
_DP_C = (0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    np.array([0.2]),
    np.array([3.0 / 40.0, 9.0 / 40.0]),
    np.array([44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0]),
    np.array([19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0]),
    np.array([9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
              -5103.0 / 18656.0]),
)
_DP_B = np.array([35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
                  -2187.0 / 6784.0, 11.0 / 84.0])
_DP_E = np.array([71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
                  -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0])
# quartic dense-output coefficients of the pair (error matches the 5th order
# propagated solution, unlike a plain cubic Hermite on the endpoints)
_DP_P = np.array([
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0,
     69997945.0 / 29380423.0],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0

_ARM_FACTOR = 4.0  # guards arm once |h| exceeds this multiple of tol_event
_DEGENERATE_DEN = 1e-14


class IntegrationError(RuntimeError):
    """Integration failure; `partial` holds the trajectory computed so far."""

    def __init__(self, message: str, partial: Optional["Trajectory"] = None):
        super().__init__(message)
        self.partial = partial


class DegenerateSlidingError(IntegrationError):
    """Filippov combination undefined: both fields tangent to the surface."""


@dataclass
class IntegratorConfig:
    t_span: Tuple[float, float]
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: Optional[float] = None
    tol_event: float = 1e-10
    sample_interval: Optional[float] = None
    max_events: int = 1_000_000

    def __post_init__(self):
        t0, tf = self.t_span
        if not (t0 < tf):
            raise ValueError(f"t_span must satisfy t0 < tf, got {self.t_span}")
        for name in ("rel_tol", "abs_tol", "tol_event"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.max_step is not None and self.max_step <= 0.0:
            raise ValueError("max_step must be positive")
        if self.sample_interval is not None and self.sample_interval <= 0.0:
            raise ValueError("sample_interval must be positive")

    def resolved_max_step(self) -> float:
        span = self.t_span[1] - self.t_span[0]
        return self.max_step if self.max_step is not None else span / 100.0

    def sample_times(self) -> np.ndarray:
        t0, tf = self.t_span
        dt = self.sample_interval if self.sample_interval is not None else (tf - t0) / 2000.0
        n = max(1, int(round((tf - t0) / dt)))
        return np.linspace(t0, tf, n + 1)


@dataclass
class Event:
    t: float
    kind: str  # crossing | sliding-entry | sliding-exit | grazing
    x: np.ndarray


class _Segment:
    """One accepted step's dense output: x(t) = x0 + h * Q @ [s, s^2, s^3, s^4]
    with s = (t - t0)/h; valid on [t0, t_end] (t_end < t0+h when cut by an event)."""

    __slots__ = ("t0", "h", "t_end", "x0", "Q")

    def __init__(self, t0, h, t_end, x0, Q):
        self.t0 = t0
        self.h = h
        self.t_end = t_end
        self.x0 = x0
        self.Q = Q

    def eval(self, t: float) -> np.ndarray:
        if self.h <= 0.0:
            return self.x0.copy()
        s = (t - self.t0) / self.h
        p = np.array([s, s * s, s**3, s**4])
        return self.x0 + self.h * (self.Q @ p)


@dataclass
class Trajectory:
    """Sampled solution with per-sample mode labels, event records, and the
    dense segments needed to interpolate anywhere in the integration span."""

    t0: float
    tf: float
    ts: np.ndarray
    X: np.ndarray
    modes: np.ndarray  # Mode values: +1, -1, 0
    events: List[Event]
    segments: List[_Segment] = dfield(repr=False, default_factory=list)
    _seg_ends: np.ndarray = dfield(repr=False, default=None)

    @property
    def x_final(self) -> np.ndarray:
        return self.X[-1]

    def interp(self, t) -> np.ndarray:
        """Dense-output interpolation anywhere in [t0, tf]."""
        if self._seg_ends is None:
            self._seg_ends = np.array([s.t_end for s in self.segments])
        scalar = np.isscalar(t) or np.asarray(t).ndim == 0
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        t_arr = np.clip(t_arr, self.segments[0].t0, self._seg_ends[-1])
        idx = np.searchsorted(self._seg_ends, t_arr, side="left")
        idx = np.clip(idx, 0, len(self.segments) - 1)
        out = np.empty((t_arr.size, self.X.shape[1]))
        for k, (ti, i) in enumerate(zip(t_arr, idx)):
            out[k] = self.segments[i].eval(ti)
        return out[0] if scalar else out


def _initial_step(f, t0, x0, f0, rel_tol, abs_tol, max_step):
    scale = abs_tol + rel_tol * np.abs(x0)
    d0 = math.sqrt(float(np.mean((x0 / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    x1 = x0 + h0 * f0
    f1 = f(x1, t0 + h0)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, max_step)


class _Stepper:
    """One adaptive DP5(4) step at a time; holds the PI controller state."""

    def __init__(self, f: Callable, t: float, x: np.ndarray, cfg: IntegratorConfig):
        self.f = f
        self.t = t
        self.x = x
        self.fcur = f(x, t)
        if not np.all(np.isfinite(self.fcur)):
            raise IntegrationError(f"non-finite field at t={t}")
        self.rel_tol = cfg.rel_tol
        self.abs_tol = cfg.abs_tol
        self.max_step = cfg.resolved_max_step()
        self.h = _initial_step(f, t, x, self.fcur, cfg.rel_tol, cfg.abs_tol, self.max_step)
        self.err_prev = 1.0
        self.K = np.empty((7, x.size))

    def step(self, t_limit: float):
        """Advance by one accepted step, clipped to t_limit.

        Returns (t_old, x_old, t_new, x_new, Q) with Q the dense coefficients.
        """
        f, K = self.f, self.K
        t, x = self.t, self.x
        while True:
            h = min(self.h, self.max_step, t_limit - t)
            if h <= 0.0:
                raise IntegrationError(f"zero step requested at t={t}")
            hmin = 16.0 * abs(np.spacing(t))
            failed = False
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    # overflow in a trial step is handled by rejection below
                    K[0] = self.fcur
                    for i, (c, a) in enumerate(zip(_DP_C[:5], _DP_A)):
                        K[i + 1] = f(x + h * (a @ K[: i + 1]), t + c * h)
                    x_new = x + h * (_DP_B @ K[:6])
                    t_new = t + h
                    K[6] = f(x_new, t_new)
                failed = not np.all(np.isfinite(x_new)) or not np.all(np.isfinite(K[6]))
            except (ArithmeticError, ValueError):
                failed = True
            if failed:
                err = 10.0  # treat as a failed step and retry smaller
            else:
                scale = self.abs_tol + self.rel_tol * np.maximum(np.abs(x), np.abs(x_new))
                err_vec = h * (_DP_E @ K)
                err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
            if err <= 1.0:
                err = max(err, 1e-10)
                factor = _SAFETY * err ** (-_PI_ALPHA) * self.err_prev**_PI_BETA
                self.h = h * min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
                self.err_prev = err
                Q = K.T @ _DP_P
                t_old, x_old = t, x
                self.t, self.x, self.fcur = t_new, x_new, K[6].copy()
                return t_old, x_old, t_new, x_new, Q
            if h <= hmin:
                raise IntegrationError(f"step size underflow at t={t} (h={h:.3e})")
            self.h = h * max(_MIN_FACTOR, _SAFETY * err**-0.2)

    def restart(self, t: float, x: np.ndarray):
        self.t = t
        self.x = x
        self.fcur = self.f(x, t)
        if not np.all(np.isfinite(self.fcur)):
            raise IntegrationError(f"non-finite field at t={t}")


# -- Filippov sliding ---------------------------------------------------------

def _normal_components(sys, x, t) -> Tuple[float, float]:
    g = sys.grad_h(x)
    return float(g @ sys.field(Mode.PLUS, x, t)), float(g @ sys.field(Mode.MINUS, x, t))


def sliding_field(sys, x, t: float) -> np.ndarray:
    """Filippov convex combination on the surface: (1-a) F- + a F+ with
    a = (grad_h . F-) / (grad_h . (F- - F+)), clamped to [0, 1]."""
    d_plus, d_minus = _normal_components(sys, x, t)
    den = d_minus - d_plus
    if abs(den) < _DEGENERATE_DEN:
        raise DegenerateSlidingError(
            f"degenerate sliding at t={t}: normal components {d_plus:.3e}, {d_minus:.3e}"
        )
    if d_plus > 0.0 or d_minus < 0.0:
        raise ValueError(
            "sliding requires attracting fields (grad_h.F+ <= 0 <= grad_h.F-); "
            f"got {d_plus:.3e}, {d_minus:.3e}"
        )
    return _sliding_combination(sys, x, t, d_plus, d_minus)


def _sliding_combination(sys, x, t, d_plus, d_minus) -> np.ndarray:
    den = d_minus - d_plus
    alpha = min(1.0, max(0.0, d_minus / den))
    return (1.0 - alpha) * sys.field(Mode.MINUS, x, t) + alpha * sys.field(Mode.PLUS, x, t)


def sliding_exit_check(sys, x, t: float) -> str:
    """While sliding: 'exit_minus' when grad_h.F- <= 0, 'exit_plus' when
    grad_h.F+ >= 0, else 'stay'."""
    d_plus, d_minus = _normal_components(sys, x, t)
    if d_minus <= 0.0:
        return "exit_minus"
    if d_plus >= 0.0:
        return "exit_plus"
    return "stay"


def _classify_at_surface(sys, x, t, incoming: Optional[Mode]):
    """Decide what happens at a located surface point.

    Returns (new_mode, event_kind).  Attracting fields mean sliding; agreeing
    fields mean crossing; the repulsive/tangent leftovers are resolved toward
    the stronger field and tagged as grazing.
    """
    d_plus, d_minus = _normal_components(sys, x, t)
    if d_plus < 0.0 and d_minus > 0.0:
        return Mode.SLIDING, "sliding-entry"
    if d_plus >= 0.0 and d_minus >= 0.0:
        kind = "crossing" if incoming != Mode.PLUS else "grazing"
        return Mode.PLUS, kind
    if d_plus <= 0.0 and d_minus <= 0.0:
        kind = "crossing" if incoming != Mode.MINUS else "grazing"
        return Mode.MINUS, kind
    # repulsive: should not be reachable along a trajectory; follow the
    # dominant field so the simulation cannot hang
    return (Mode.PLUS if d_plus >= -d_minus else Mode.MINUS), "grazing"


# -- recording ------------------------------------------------------------------

class _Recorder:
    def __init__(self, n: int, cfg: IntegratorConfig):
        self.sample_ts = cfg.sample_times()
        self.idx = 0
        self.ts: List[float] = []
        self.xs: List[np.ndarray] = []
        self.modes: List[int] = []
        self.events: List[Event] = []
        self.segments: List[_Segment] = []
        self.eps = 1e-12 * (cfg.t_span[1] - cfg.t_span[0])

    def segment(self, seg: _Segment, mode: Mode):
        self.segments.append(seg)
        while self.idx < len(self.sample_ts) and self.sample_ts[self.idx] <= seg.t_end + self.eps:
            ts = self.sample_ts[self.idx]
            self.idx += 1
            self._append(ts, seg.eval(min(ts, seg.t_end)), mode)

    def _append(self, t, x, mode: Mode):
        if self.ts and t <= self.ts[-1]:
            return
        self.ts.append(float(t))
        self.xs.append(np.asarray(x, dtype=float).copy())
        self.modes.append(int(mode))

    def point(self, t, x, mode: Mode):
        self._append(t, x, mode)

    def event(self, t, kind, x):
        self.events.append(Event(float(t), kind, np.asarray(x, dtype=float).copy()))

    def build(self, t0, tf) -> Trajectory:
        return Trajectory(
            t0=t0,
            tf=tf,
            ts=np.array(self.ts),
            X=np.array(self.xs),
            modes=np.array(self.modes, dtype=int),
            events=self.events,
            segments=self.segments,
        )


def _bisect_guard(gval, t_lo, t_hi, value_tol, window_tol):
    """Earliest root of a scalar guard on [t_lo, t_hi] given a sign change.

    Stops when |g| <= value_tol (and the bracket is below window_tol, when
    given); 200 iterations cap the cost.
    """
    v_lo = gval(t_lo)
    if abs(v_lo) <= value_tol:
        return t_lo
    c = t_hi
    for _ in range(200):
        c = 0.5 * (t_lo + t_hi)
        vc = gval(c)
        if abs(vc) <= value_tol and t_hi - t_lo <= max(window_tol, 64.0 * abs(np.spacing(c))):
            return c
        if (vc > 0.0) == (v_lo > 0.0):
            t_lo, v_lo = c, vc
        else:
            t_hi = c
        if t_hi - t_lo <= 4.0 * abs(np.spacing(c)):
            return t_hi
    return c


def integrate(sys: BimodalSystem, x0, cfg: IntegratorConfig) -> Trajectory:
    """Integrate a bimodal system in the Filippov sense over cfg.t_span.

    Samples land on the uniform grid implied by cfg.sample_interval plus every
    event instant; events record transversal crossings, sliding entries and
    exits, and grazing contacts.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n,) or not np.all(np.isfinite(x0)):
        raise ValueError(f"x0 must be a finite vector of length {sys.n}")
    t0, tf = cfg.t_span
    rec = _Recorder(sys.n, cfg)

    h0 = sys.h(x0)
    if abs(h0) <= sys.tol_h:
        mode, kind = _classify_at_surface(sys, x0, t0, None)
        if mode == Mode.SLIDING:
            rec.event(t0, "sliding-entry", x0)
        elif kind == "grazing":
            rec.event(t0, "grazing", x0)
    else:
        mode = Mode.PLUS if h0 > 0.0 else Mode.MINUS

    t, x = t0, x0.copy()
    rec.point(t, x, mode)
    n_events = 0

    def smooth_field(m: Mode):
        return lambda xx, tt: sys.field(m, xx, tt)

    def slide_field(xx, tt):
        d_plus, d_minus = _normal_components(sys, xx, tt)
        den = d_minus - d_plus
        if abs(den) < _DEGENERATE_DEN:
            raise DegenerateSlidingError(f"degenerate sliding at t={tt}")
        return _sliding_combination(sys, xx, tt, d_plus, d_minus)

    try:
        while t < tf - 1e-14 * max(1.0, abs(tf)):
            if n_events > cfg.max_events:
                raise IntegrationError(
                    f"more than {cfg.max_events} events; possible Zeno behavior"
                )
            if mode == Mode.SLIDING:
                t, x, exited = _run_sliding(sys, slide_field, t, x, tf, cfg, rec)
                if exited is None:
                    break
                kind, new_mode = exited
                rec.event(t, kind, x)
                rec.point(t, x, new_mode)
                mode = new_mode
                n_events += 1
            else:
                t, x, hit = _run_smooth(sys, smooth_field(mode), mode, t, x, tf, cfg, rec)
                if hit is None:
                    break
                new_mode, kind = _classify_at_surface(sys, x, t, mode)
                rec.event(t, kind, x)
                rec.point(t, x, new_mode)
                mode = new_mode
                n_events += 1
    except IntegrationError as exc:
        if exc.partial is None:
            exc.partial = rec.build(t0, t)
        raise

    return rec.build(t0, tf)


def _run_smooth(sys, f, mode: Mode, t, x, tf, cfg, rec):
    """Advance a smooth mode until tf or a located surface crossing."""
    tol_ev = cfg.tol_event
    sign = 1.0 if mode == Mode.PLUS else -1.0  # h*sign >= 0 inside the mode
    stepper = _Stepper(f, t, x, cfg)
    armed = abs(sys.h(x)) > _ARM_FACTOR * tol_ev
    while stepper.t < tf - 1e-14 * max(1.0, abs(tf)):
        t0s, x0s, t1s, x1s, Q = stepper.step(tf)
        seg = _Segment(t0s, t1s - t0s, t1s, x0s, Q)

        def hval(tt):
            return sys.h(seg.eval(tt)) * sign

        v_mid = hval(0.5 * (t0s + t1s))
        v_end = sys.h(x1s) * sign
        if armed and (v_mid < 0.0 or v_end < 0.0):
            t_hi = 0.5 * (t0s + t1s) if v_mid < 0.0 else t1s
            t_ev = _bisect_guard(hval, t0s, t_hi, tol_ev, 0.0)
            x_ev = seg.eval(t_ev)
            seg.t_end = t_ev
            rec.segment(seg, mode)
            return t_ev, x_ev, True
        rec.segment(seg, mode)
        if not armed:
            if v_end < -_ARM_FACTOR * tol_ev:
                # drifted through the surface before the guard armed
                # (near-tangent departure); hand back for reclassification
                return t1s, x1s, True
            if v_end > _ARM_FACTOR * tol_ev:
                armed = True
    return stepper.t, stepper.x, None


def _run_sliding(sys, f_s, t, x, tf, cfg, rec):
    """Advance sliding motion until tf or an exit; the state is projected back
    onto the surface after every accepted step."""
    tol_ev = cfg.tol_event
    x = _project_onto_surface(sys, x)
    stepper = _Stepper(f_s, t, x, cfg)

    def guard_plus(xx, tt):
        return _normal_components(sys, xx, tt)[0]

    def guard_minus(xx, tt):
        return _normal_components(sys, xx, tt)[1]

    armed_p = guard_plus(x, t) < -_ARM_FACTOR * tol_ev
    armed_m = guard_minus(x, t) > _ARM_FACTOR * tol_ev

    while stepper.t < tf - 1e-14 * max(1.0, abs(tf)):
        t0s, x0s, t1s, x1s, Q = stepper.step(tf)
        seg = _Segment(t0s, t1s - t0s, t1s, x0s, Q)
        t_mid = 0.5 * (t0s + t1s)
        candidates = []
        if armed_p:
            vp_mid, vp_end = guard_plus(seg.eval(t_mid), t_mid), guard_plus(x1s, t1s)
            if vp_mid >= 0.0 or vp_end >= 0.0:
                t_hi = t_mid if vp_mid >= 0.0 else t1s
                t_ev = _bisect_guard(lambda tt: guard_plus(seg.eval(tt), tt),
                                     t0s, t_hi, tol_ev, 0.5 * tol_ev)
                candidates.append((t_ev, "exit_plus"))
        if armed_m:
            vm_mid, vm_end = guard_minus(seg.eval(t_mid), t_mid), guard_minus(x1s, t1s)
            if vm_mid <= 0.0 or vm_end <= 0.0:
                t_hi = t_mid if vm_mid <= 0.0 else t1s
                t_ev = _bisect_guard(lambda tt: guard_minus(seg.eval(tt), tt),
                                     t0s, t_hi, tol_ev, 0.5 * tol_ev)
                candidates.append((t_ev, "exit_minus"))
        if candidates:
            t_ev, which = min(candidates)
            x_ev = _project_onto_surface(sys, seg.eval(t_ev))
            seg.t_end = t_ev
            rec.segment(seg, Mode.SLIDING)
            new_mode = Mode.PLUS if which == "exit_plus" else Mode.MINUS
            return t_ev, x_ev, ("sliding-exit", new_mode)

        x_proj = _project_onto_surface(sys, x1s)
        rec.segment(seg, Mode.SLIDING)
        stepper.restart(t1s, x_proj)
        if not armed_p and guard_plus(x_proj, t1s) < -_ARM_FACTOR * tol_ev:
            armed_p = True
        if not armed_m and guard_minus(x_proj, t1s) > _ARM_FACTOR * tol_ev:
            armed_m = True
    return stepper.t, stepper.x, None


def _project_onto_surface(sys, x) -> np.ndarray:
    """One Newton step of h along grad_h; keeps sliding drift at rounding level."""
    g = sys.grad_h(x)
    den = float(g @ g)
    if den == 0.0:
        raise IntegrationError("switching-surface gradient vanished during sliding")
    return x - (sys.h(x) / den) * g


def integrate_smooth(f: Callable, x0, cfg: IntegratorConfig,
                     label: Optional[Callable] = None) -> Trajectory:
    """Plain adaptive integration of a smooth field f(x, t), no event handling.

    `label` optionally maps a state to a Mode for the sample records.
    """
    x0 = np.asarray(x0, dtype=float)
    t0, tf = cfg.t_span
    rec = _Recorder(x0.size, cfg)
    mode_of = label if label is not None else (lambda x: Mode.PLUS)
    rec.point(t0, x0, mode_of(x0))
    stepper = _Stepper(f, t0, x0, cfg)
    try:
        while stepper.t < tf - 1e-14 * max(1.0, abs(tf)):
            t0s, x0s, t1s, x1s, Q = stepper.step(tf)
            rec.segment(_Segment(t0s, t1s - t0s, t1s, x0s, Q), mode_of(x1s))
    except IntegrationError as exc:
        if exc.partial is None:
            exc.partial = rec.build(t0, stepper.t)
        raise
    return rec.build(t0, tf)

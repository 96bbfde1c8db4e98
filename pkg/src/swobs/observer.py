"""Plant/observer co-simulation and exponential error-envelope checks.

The plant is integrated first; its output is fed to the observer through the
dense-output interpolant, and the observer is then integrated as a switched
system in its own right, switching and possibly sliding on h(xhat).  Keeping
the two event streams separate avoids the mode explosion a stacked
plant+observer system would suffer, since h(x) and h(xhat) fire at different
times.

The error norm is tracked in the norm matching the certificate's measure
kind, and compared against K * exp(-c (t - t0)) * |x(t0)|.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .measures import MeasureKind, vec_norm
from .simulate import IntegratorConfig, Trajectory, integrate
from .systems import BimodalSystem, Mode, ObserverSpec


class _ObserverAsSwitchedSystem:
    """Adapter exposing the observer as a switched system driven by a y(t) feed."""

    def __init__(self, obs: ObserverSpec, y_of_t: Callable[[float], np.ndarray]):
        self.obs = obs
        self.y_of_t = y_of_t
        base = obs.base
        self.n = base.n
        self.tol_h = base.tol_h

    def h(self, x) -> float:
        return self.obs.base.h(x)

    def grad_h(self, x) -> np.ndarray:
        return self.obs.base.grad_h(x)

    def field(self, mode: Mode, x, t: float) -> np.ndarray:
        return self.obs.field(mode, x, self.y_of_t(t), t)


@dataclass
class ErrorTrace:
    ts: np.ndarray
    errs: np.ndarray  # |e(t)| in `kind`'s norm, on the plant sample grid
    kind: MeasureKind
    x0_norm: float  # |x(t0)| in the same norm, the envelope's amplitude
    envelope: Optional[Tuple[float, float]] = None  # (K, c) of the last check
    violations: List[Tuple[float, float, float]] = field(default_factory=list)

    def to_csv(self, K: float, c: float) -> str:
        lines = ["t,err_norm,bound"]
        t0 = self.ts[0]
        for t, e in zip(self.ts, self.errs):
            bound = K * np.exp(-c * (t - t0)) * self.x0_norm
            lines.append(f"{t:.17g},{e:.17g},{bound:.17g}")
        return "\n".join(lines) + "\n"


def run_pair(obs: ObserverSpec, x0, xhat0, cfg: IntegratorConfig,
             kind: MeasureKind = MeasureKind.L2,
             plant: Optional[BimodalSystem] = None,
             ) -> Tuple[Trajectory, Trajectory, ErrorTrace]:
    """Integrate the plant, feed its interpolated output to the observer, and
    sample the error norm on the plant's grid.

    `plant` overrides the observed system (used for model-mismatch studies);
    by default the observer watches its own base system.
    """
    plant_sys = plant if plant is not None else obs.base
    plant_traj = integrate(plant_sys, x0, cfg)

    def y_of_t(t: float) -> np.ndarray:
        return plant_sys.output(plant_traj.interp(t))

    adapter = _ObserverAsSwitchedSystem(obs, y_of_t)
    obs_traj = integrate(adapter, xhat0, cfg)

    ts = plant_traj.ts
    errs = np.empty(ts.size)
    for i, t in enumerate(ts):
        errs[i] = vec_norm(kind, plant_traj.interp(t) - obs_traj.interp(t))
    x0_norm = vec_norm(kind, np.asarray(x0, dtype=float))
    return plant_traj, obs_traj, ErrorTrace(ts=ts, errs=errs, kind=kind, x0_norm=x0_norm)


def check_envelope(trace: ErrorTrace, K: float, c: float, slack: float = 0.05):
    """Flag samples with |e(t)| > K exp(-c (t-t0)) |x(t0)| (1 + slack).

    Returns (passed, violations); violations are (t, err, bound) triples.
    """
    if c <= 0.0:
        raise ValueError("envelope rate c must be positive")
    if K < 1.0:
        raise ValueError("envelope gain K must be at least 1")
    t0 = trace.ts[0]
    bounds = K * np.exp(-c * (trace.ts - t0)) * trace.x0_norm * (1.0 + slack)
    bad = trace.errs > bounds
    trace.envelope = (K, c)
    trace.violations = [
        (float(t), float(e), float(b))
        for t, e, b in zip(trace.ts[bad], trace.errs[bad], bounds[bad])
    ]
    return not bool(bad.any()), trace.violations


def fit_envelope_gain(trace: ErrorTrace, c: float) -> float:
    """Smallest K making the envelope hold with zero slack at rate c."""
    t0 = trace.ts[0]
    if trace.x0_norm == 0.0:
        return 1.0
    decay = np.exp(-c * (trace.ts - t0)) * trace.x0_norm
    return float(max(1.0, np.max(trace.errs / decay)))


@dataclass
class DisturbanceReport:
    param: str
    sizes: List[float]
    tail_sups: List[float]
    initial_error: float
    passed: bool
    ratio_limit: float

    def rows(self):
        return list(zip(self.sizes, self.tail_sups))


def disturbance_study(obs: ObserverSpec, perturbation: dict, x0, xhat0,
                      cfg: IntegratorConfig, kind: MeasureKind = MeasureKind.L2,
                      sweep=(0.5, 1.0, 2.0), ratio_slack: float = 1.5,
                      ) -> DisturbanceReport:
    """Bounded-error check under plant-parameter mismatch.

    The plant's parameters are perturbed (observer keeps nominal values), the
    pair is run per sweep point, and the sup of |e| over the tail window
    [midpoint, tf] is reported.  Passes when the tail sup grows at most
    linearly (with `ratio_slack` headroom) in the perturbation size and stays
    below the initial error.
    """
    if len(perturbation) != 1:
        raise ValueError("perturb exactly one parameter per study")
    (name, rel_size), = perturbation.items()
    t0, tf = cfg.t_span
    t_tail = 0.5 * (t0 + tf)
    sizes, tails = [], []
    for mult in sweep:
        size = rel_size * mult
        perturbed = obs.base.with_params(**{name: obs.base.params[name] * (1.0 + size)})
        _, _, trace = run_pair(obs, x0, xhat0, cfg, kind, plant=perturbed)
        mask = trace.ts >= t_tail
        sizes.append(size)
        tails.append(float(np.max(trace.errs[mask])))
    e0 = vec_norm(kind, np.asarray(x0, dtype=float) - np.asarray(xhat0, dtype=float))
    ok = all(np.isfinite(tails)) and all(tv < e0 for tv in tails)
    for (s_a, t_a), (s_b, t_b) in zip(zip(sizes, tails), list(zip(sizes, tails))[1:]):
        if s_a > 0.0 and t_a > 0.0 and t_b > ratio_slack * (s_b / s_a) * t_a:
            ok = False
    return DisturbanceReport(
        param=name, sizes=sizes, tail_sups=tails,
        initial_error=e0, passed=ok, ratio_limit=ratio_slack,
    )

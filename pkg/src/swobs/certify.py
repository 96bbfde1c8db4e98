"""Contraction certificates for switched plants and their observers.

A certificate reports the worst matrix measure of each mode's Jacobian over
its closed region (negated into rates c1, c2), the worst measure of the
rank-one surface matrix [field jump] * grad_h over sampled surface points
(the sliding residual), and a verdict.  For plants the mode Jacobians are
those of f+ and f-; for observers they carry the output-injection correction
df/dx - L dg/dx, and the surface matrix gains the injection jump term
(L+ - L-)(y - g(xhat)) quantified over a user-supplied output box.

Sampling is a falsification and evidence tool, not a proof: ``certified``
means certified on the sampled region at the recorded resolution.  For
piecewise-affine systems the mode measures are evaluated exactly from the
constant matrices, with no sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .measures import MeasureKind, measure
from .systems import BimodalSystem, Mode, ObserverSpec

SLIDING_TOL = 1e-9

VERDICT_CERTIFIED = "certified"
VERDICT_FALSIFIED = "falsified"
VERDICT_INCONCLUSIVE = "inconclusive"


@dataclass
class Certificate:
    kind: MeasureKind
    c1: float
    c2: float
    sliding_residual: float  # worst (most positive) surface measure
    verdict: str
    sliding_min: float = 0.0  # most negative surface measure, for transparency
    sliding_tol: float = SLIDING_TOL
    exact: bool = False
    region: Optional[list] = None
    output_range: Optional[list] = None
    grid: Optional[list] = None
    counts: dict = field(default_factory=dict)
    diagnostics: List[str] = field(default_factory=list)
    worst_points: dict = field(default_factory=dict)

    @property
    def rate(self) -> float:
        return min(self.c1, self.c2)

    def to_text(self) -> str:
        lines = [
            f"measure kind:      {self.kind.value}",
            f"c1 (plus mode):    {self.c1:.12g}",
            f"c2 (minus mode):   {self.c2:.12g}",
            f"rate min(c1,c2):   {self.rate:.12g}",
            f"sliding residual:  {self.sliding_residual:.12g} (tol {self.sliding_tol:g})",
            f"sliding min:       {self.sliding_min:.12g}",
            f"verdict:           {self.verdict}",
            f"evaluation:        {'exact (constant matrices)' if self.exact else 'sampled'}",
        ]
        if self.region is not None:
            lines.append(f"state region:      {self.region}")
        if self.output_range is not None:
            lines.append(f"output range:      {self.output_range}")
        if self.grid is not None:
            lines.append(f"grid counts:       {self.grid}")
        if self.counts:
            lines.append(f"sample counts:     {self.counts}")
        for d in self.diagnostics:
            lines.append(f"note:              {d}")
        return "\n".join(lines)

    CSV_HEADER = "kind,c1,c2,rate,sliding_residual,sliding_min,verdict,exact"

    def to_csv_row(self) -> str:
        return (
            f"{self.kind.value},{self.c1:.17g},{self.c2:.17g},{self.rate:.17g},"
            f"{self.sliding_residual:.17g},{self.sliding_min:.17g},{self.verdict},"
            f"{int(self.exact)}"
        )


def _axis_grids(region: Sequence[Sequence[float]], counts: Sequence[int]) -> List[np.ndarray]:
    if len(counts) == 1 and len(region) > 1:
        counts = list(counts) * len(region)
    if len(region) != len(counts):
        raise ValueError("one grid count per region axis required")
    grids = []
    for (lo, hi), c in zip(region, counts):
        if not (lo <= hi) or c < 2:
            raise ValueError(f"invalid axis [{lo}, {hi}] with {c} points")
        grids.append(np.linspace(float(lo), float(hi), int(c)))
    return grids


def _box_points(region, counts) -> np.ndarray:
    grids = _axis_grids(region, counts)
    mesh = np.meshgrid(*grids, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def surface_points(sys: BimodalSystem, region, counts, h_tol: float = 1e-12) -> np.ndarray:
    """Sample points of the switching surface inside an axis-aligned box.

    Grid points with |h| below h_tol are kept directly; grid edges whose
    endpoints straddle the surface are bisected down to |h| <= h_tol.
    """
    grids = _axis_grids(region, counts)
    pts = _box_points(region, counts)
    shape = tuple(len(g) for g in grids)
    H = np.array([sys.h(p) for p in pts]).reshape(shape)
    P = pts.reshape(shape + (len(grids),))
    found = []
    on_grid = np.abs(H) <= h_tol
    for idx in np.argwhere(on_grid):
        found.append(P[tuple(idx)])
    for axis in range(len(grids)):
        sl_a = [slice(None)] * len(grids)
        sl_b = [slice(None)] * len(grids)
        sl_a[axis] = slice(None, -1)
        sl_b[axis] = slice(1, None)
        ha, hb = H[tuple(sl_a)], H[tuple(sl_b)]
        cross = (np.sign(ha) * np.sign(hb) < 0) & (np.abs(ha) > h_tol) & (np.abs(hb) > h_tol)
        for idx in np.argwhere(cross):
            a = P[tuple(sl_a)][tuple(idx) + (slice(None),)].copy()
            b = P[tuple(sl_b)][tuple(idx) + (slice(None),)].copy()
            va = sys.h(a)
            for _ in range(200):
                m = 0.5 * (a + b)
                vm = sys.h(m)
                if abs(vm) <= h_tol:
                    found.append(m)
                    break
                if (vm > 0) == (va > 0):
                    a, va = m, vm
                else:
                    b = m
            else:
                found.append(0.5 * (a + b))
    if not found:
        return np.empty((0, len(grids)))
    return np.unique(np.round(np.array(found), 12), axis=0)


def _rank_one(v: np.ndarray, grad: np.ndarray) -> np.ndarray:
    return np.outer(np.asarray(v, dtype=float), np.asarray(grad, dtype=float))


def _worst_measure(kind, matrices_points) -> Tuple[float, Optional[np.ndarray]]:
    worst = -np.inf
    at = None
    for A, p in matrices_points:
        m = measure(kind, A)
        if m > worst:
            worst, at = m, p
    return worst, at


def _assemble(kind, mu_plus, mu_minus, at_plus, at_minus, surf_mus, sliding_tol,
              exact, region, output_range, grid, counts, diagnostics):
    if surf_mus:
        residual = float(max(surf_mus))
        s_min = float(min(surf_mus))
    else:
        residual, s_min = 0.0, 0.0
        diagnostics = list(diagnostics) + [
            "no surface samples inside the region; sliding condition not exercised"
        ]
    cert = Certificate(
        kind=kind,
        c1=-mu_plus,
        c2=-mu_minus,
        sliding_residual=residual,
        sliding_min=s_min,
        verdict=VERDICT_INCONCLUSIVE,
        sliding_tol=sliding_tol,
        exact=exact,
        region=region,
        output_range=output_range,
        grid=grid,
        counts=counts,
        diagnostics=list(diagnostics),
        worst_points={"plus": at_plus, "minus": at_minus},
    )
    if not np.isfinite(mu_plus) or not np.isfinite(mu_minus):
        cert.diagnostics.append("empty mode sample set; verdict inconclusive")
        return cert
    ok = cert.c1 > 0.0 and cert.c2 > 0.0 and residual <= sliding_tol
    cert.verdict = VERDICT_CERTIFIED if ok else VERDICT_FALSIFIED
    if s_min < -sliding_tol:
        cert.diagnostics.append(
            f"surface measure dips to {s_min:.3g}; the certified reading only "
            "requires it to be non-positive"
        )
    return cert


def certify_plant(sys: BimodalSystem, kind: MeasureKind, region, grid,
                  sliding_tol: float = SLIDING_TOL, t: float = 0.0) -> Certificate:
    """Check plant contraction over a box: mode-Jacobian measures on the closed
    half-regions plus the jump/gradient rank-one measure on the surface."""
    pts = _box_points(region, grid)
    hv = np.array([sys.h(p) for p in pts])
    sigma = surface_points(sys, region, grid)
    plus_pts = [p for p, h in zip(pts, hv) if h > sys.tol_h]
    minus_pts = [p for p, h in zip(pts, hv) if h < -sys.tol_h]
    # closures include the surface
    plus_pts += list(sigma)
    minus_pts += list(sigma)
    diagnostics = []
    if not plus_pts or not minus_pts:
        diagnostics.append("region does not intersect both sides of the surface")
    mu_p, at_p = _worst_measure(
        kind, ((sys.jacobian(Mode.PLUS, p, t), p) for p in plus_pts)
    )
    mu_m, at_m = _worst_measure(
        kind, ((sys.jacobian(Mode.MINUS, p, t), p) for p in minus_pts)
    )
    surf_mus = []
    for p in sigma:
        jump = sys.field(Mode.PLUS, p, t) - sys.field(Mode.MINUS, p, t)
        surf_mus.append(measure(kind, _rank_one(jump, sys.grad_h(p))))
    counts = {"plus": len(plus_pts), "minus": len(minus_pts), "surface": len(sigma)}
    return _assemble(kind, mu_p, mu_m, at_p, at_m, surf_mus, sliding_tol, False,
                     [list(r) for r in region], None, list(grid), counts, diagnostics)


def certify_observer(obs: ObserverSpec, kind: MeasureKind, region, output_range,
                     grid, output_grid=None, sliding_tol: float = SLIDING_TOL,
                     t: float = 0.0) -> Certificate:
    """Check observer contraction: injected mode Jacobians over the closed
    half-regions of the estimate box, and the surface condition over located
    surface points crossed with an output-range grid.

    The output range over-approximates the plant outputs actually seen by the
    observer; it is the caller's assertion and is recorded in the certificate.
    """
    sys = obs.base
    pts = _box_points(region, grid)
    hv = np.array([sys.h(p) for p in pts])
    sigma = surface_points(sys, region, grid)
    plus_pts = [p for p, h in zip(pts, hv) if h > sys.tol_h] + list(sigma)
    minus_pts = [p for p, h in zip(pts, hv) if h < -sys.tol_h] + list(sigma)
    diagnostics = []
    mu_p, at_p = _worst_measure(kind, ((obs.jacobian(Mode.PLUS, p, t), p) for p in plus_pts))
    mu_m, at_m = _worst_measure(kind, ((obs.jacobian(Mode.MINUS, p, t), p) for p in minus_pts))

    output_grid = output_grid if output_grid is not None else [g for g in grid][:1]
    y_pts = _box_points(output_range, output_grid) if len(sigma) else np.empty((0, sys.p))
    dL = obs.L_plus - obs.L_minus
    surf_mus = []
    for p in sigma:
        jump_f = sys.field(Mode.PLUS, p, t) - sys.field(Mode.MINUS, p, t)
        gh = sys.grad_h(p)
        yhat = sys.output(p)
        for y in y_pts:
            v = jump_f + dL @ (y - yhat)
            surf_mus.append(measure(kind, _rank_one(v, gh)))
    counts = {
        "plus": len(plus_pts), "minus": len(minus_pts),
        "surface": len(sigma), "outputs": len(y_pts),
    }
    return _assemble(kind, mu_p, mu_m, at_p, at_m, surf_mus, sliding_tol, False,
                     [list(r) for r in region], [list(r) for r in output_range],
                     list(grid), counts, diagnostics)


def certify_pwa_exact(obs: ObserverSpec, kind: MeasureKind,
                      sigma_region=None, sigma_grid=None,
                      output_range=None, output_grid=None,
                      sliding_tol: float = SLIDING_TOL) -> Certificate:
    """Exact certificate for a piecewise-affine observer: measures of the
    constant matrices A1 - L+ c and A2 - L- c, no state sampling.

    The surface condition reduces to a single evaluation when the mode
    matrices agree on the surface subspace and the gains coincide; otherwise
    it is sampled over `sigma_region` (and `output_range` when the gain jump
    couples the output in)."""
    sys = obs.base
    if sys.pwa is None:
        raise TypeError("certify_pwa_exact requires a system built from PWA matrices")
    pw = sys.pwa
    c = pw["c"]
    J1 = pw["A1"] - obs.L_plus @ c
    J2 = pw["A2"] - obs.L_minus @ c
    mu_p = measure(kind, J1)
    mu_m = measure(kind, J2)
    dA = pw["A1"] - pw["A2"]
    db = pw["b1"] - pw["b2"]
    dL = obs.L_plus - obs.L_minus
    h_vec = pw["h"]
    diagnostics = []
    # basis of the surface subspace {x : h.x = 0}
    _, _, vt = np.linalg.svd(h_vec.reshape(1, -1))
    tangent = vt[1:].T  # n x (n-1)
    constant_on_sigma = np.allclose(dA @ tangent, 0.0, atol=1e-14) and np.allclose(dL, 0.0)
    surf_mus = []
    exact = True
    if constant_on_sigma:
        surf_mus.append(measure(kind, _rank_one(db, h_vec)))
        n_surface, n_outputs = 1, 0
    else:
        exact = False
        if sigma_region is None:
            raise ValueError(
                "surface term varies along the surface; supply sigma_region/sigma_grid"
            )
        sigma_grid = sigma_grid if sigma_grid is not None else [41] * sys.n
        sigma = surface_points(sys, sigma_region, sigma_grid)
        need_y = not np.allclose(dL, 0.0)
        if need_y:
            if output_range is None:
                raise ValueError("gain jump is nonzero; supply output_range")
            y_pts = _box_points(output_range, output_grid or [41])
        else:
            y_pts = np.zeros((1, sys.p))
        for p in sigma:
            base_v = dA @ p + db
            yhat = sys.output(p)
            for y in y_pts:
                v = base_v + (dL @ (y - yhat) if need_y else 0.0)
                surf_mus.append(measure(kind, _rank_one(v, h_vec)))
        n_surface, n_outputs = len(sigma), (len(y_pts) if need_y else 0)
        diagnostics.append("surface term sampled; mode measures remain exact")
    counts = {"surface": n_surface, "outputs": n_outputs}
    return _assemble(kind, mu_p, mu_m, None, None, surf_mus, sliding_tol, exact,
                     None, [list(r) for r in output_range] if output_range else None,
                     None, counts, diagnostics)

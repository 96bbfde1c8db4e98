"""Bimodal switched systems: two smooth vector fields separated by a scalar
switching surface, an optional output map, and Luenberger-style observer gains.

Systems are immutable after construction and may be shared freely across
threads.  Piecewise-affine systems get a dedicated constructor from raw
matrices so that Jacobians (and hence certificates) are exact constants.
"""

from __future__ import annotations

import enum
from typing import Mapping, Optional, Sequence

import numpy as np

from . import expr as ex

TOL_H = 1e-9  # switching-surface membership tolerance, in scaled state units

_FD_STEP = 6.0e-6  # ~cbrt(eps), central differences


class Mode(enum.IntEnum):
    """Mode label: the two open regions and motion on the surface itself."""

    PLUS = 1
    MINUS = -1
    SLIDING = 0


def _parse_all(sources: Sequence[str], n: int, params) -> tuple:
    return tuple(ex.parse(src, n, params) for src in sources)


def _uses_time(e: ex.Expr) -> bool:
    return any(isinstance(node, ex.Time) for node in ex.iter_nodes(e))


def _uses_state(e: ex.Expr) -> bool:
    return any(isinstance(node, ex.State) for node in ex.iter_nodes(e))


class SmoothField:
    """One mode's vector field: n expression components plus their Jacobian.

    Jacobian entries are differentiated symbolically; entries that cannot be
    (abs/sgn/min/max in the dependency path) fall back to central differences
    of the compiled component.
    """

    def __init__(self, components: Sequence[ex.Expr], n: int, params: Mapping[str, float]):
        if len(components) != n:
            raise ValueError(f"field needs {n} components, got {len(components)}")
        self.n = n
        self.components = tuple(components)
        self.params = dict(params)
        self._f = ex.compile_vector(self.components, params)
        self.jac_exprs = []
        self._jac_fns = []
        self._all_symbolic = True
        for i, comp in enumerate(self.components):
            row_exprs, row_fns = [], []
            for j in range(n):
                try:
                    d = ex.diff(comp, j)
                except ex.DiffError:
                    d = None
                    self._all_symbolic = False
                row_exprs.append(d)
                row_fns.append(ex.compile_scalar(d, params) if d is not None else None)
            self.jac_exprs.append(row_exprs)
            self._jac_fns.append(row_fns)
        if self._all_symbolic:
            flat = [d for row in self.jac_exprs for d in row]
            self._jac_flat = ex.compile_vector(flat, params)

    def __call__(self, x, t: float) -> tuple:
        return self._f(x, t)

    def jacobian(self, x, t: float) -> np.ndarray:
        if self._all_symbolic:
            return np.array(self._jac_flat(x, t), dtype=float).reshape(self.n, self.n)
        J = np.empty((self.n, self.n))
        for i in range(self.n):
            for j in range(self.n):
                fn = self._jac_fns[i][j]
                if fn is not None:
                    J[i, j] = fn(x, t)
                else:
                    J[i, j] = self._fd_entry(i, j, x, t)
        return J

    def _fd_entry(self, i: int, j: int, x, t: float) -> float:
        h = _FD_STEP * (1.0 + abs(float(x[j])))
        xp = np.array(x, dtype=float)
        xm = xp.copy()
        xp[j] += h
        xm[j] -= h
        return (self._f(xp, t)[i] - self._f(xm, t)[i]) / (2.0 * h)


class SwitchingSurface:
    """Scalar switching function h and its gradient; h must be differentiable."""

    def __init__(self, h: ex.Expr, n: int, params: Mapping[str, float]):
        if _uses_time(h):
            raise ValueError("switching function h must depend on the state only")
        self.n = n
        self.h_expr = h
        try:
            self.grad_exprs = tuple(ex.diff(h, j) for j in range(n))
        except ex.DiffError as exc:
            raise ValueError(f"switching function must be differentiable: {exc}") from exc
        self._h = ex.compile_scalar(h, params)
        self._grad = ex.compile_vector(self.grad_exprs, params)

    def h(self, x) -> float:
        return self._h(x, 0.0)

    def grad(self, x) -> np.ndarray:
        g = np.array(self._grad(x, 0.0), dtype=float)
        return g


class BimodalSystem:
    """Plant with two smooth modes split by h(x) = 0, optional output y = g(x),
    and an optional exogenous input u(t) entering both modes identically."""

    def __init__(
        self,
        n: int,
        f_plus: Sequence[ex.Expr],
        f_minus: Sequence[ex.Expr],
        h: ex.Expr,
        g: Sequence[ex.Expr] = (),
        u: Optional[Sequence[ex.Expr]] = None,
        params: Optional[Mapping[str, float]] = None,
        tol_h: float = TOL_H,
    ):
        params = dict(params or {})
        for comp in (*f_plus, *f_minus):
            if _uses_time(comp):
                raise ValueError(
                    "mode fields must be autonomous; route time dependence through u(t)"
                )
        for comp in g:
            if _uses_time(comp):
                raise ValueError("output map must depend on the state only")
        if u is not None:
            if len(u) != n:
                raise ValueError(f"input needs {n} components, got {len(u)}")
            for comp in u:
                if _uses_state(comp):
                    raise ValueError("input u may depend on t only")
        self.n = n
        self.params = params
        self.tol_h = tol_h
        self.f_plus = SmoothField(f_plus, n, params)
        self.f_minus = SmoothField(f_minus, n, params)
        self.surface = SwitchingSurface(h, n, params)
        self.g_exprs = tuple(g)
        self.dg_exprs = tuple(
            tuple(ex.diff(comp, j) for j in range(n)) for comp in self.g_exprs
        )
        self._g = ex.compile_vector(self.g_exprs, params) if self.g_exprs else None
        self._dg = (
            ex.compile_vector([d for row in self.dg_exprs for d in row], params)
            if self.g_exprs
            else None
        )
        self.u_exprs = tuple(u) if u is not None else None
        self._u = ex.compile_vector(self.u_exprs, params) if u is not None else None
        self._zero_u = (0.0,) * n
        # set by from_pwa
        self.pwa: Optional[dict] = None

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_sources(cls, n, f_plus, f_minus, h, g=(), u=None, params=None, tol_h=TOL_H):
        """Build from expression-language source strings."""
        params = dict(params or {})
        sys = cls(
            n,
            _parse_all(f_plus, n, params),
            _parse_all(f_minus, n, params),
            ex.parse(h, n, params),
            _parse_all(g, n, params),
            _parse_all(u, n, params) if u is not None else None,
            params,
            tol_h,
        )
        sys._sources = {
            "n": n, "f_plus": list(f_plus), "f_minus": list(f_minus), "h": h,
            "g": list(g), "u": list(u) if u is not None else None,
        }
        return sys

    @classmethod
    def from_pwa(cls, A1, b1, A2, b2, B, h_vec, c, u_src: Optional[str] = None, params=None):
        """Piecewise-affine plant: dx = A_i x + b_i + B u(t), switching on h^T x,
        output y = c^T x.  Jacobians are materialized as exact constant matrices."""
        A1 = np.asarray(A1, dtype=float)
        A2 = np.asarray(A2, dtype=float)
        b1 = np.asarray(b1, dtype=float).ravel()
        b2 = np.asarray(b2, dtype=float).ravel()
        h_vec = np.asarray(h_vec, dtype=float).ravel()
        c = np.atleast_2d(np.asarray(c, dtype=float))
        if c.shape[1] != A1.shape[0]:
            c = c.T
        n = A1.shape[0]
        if A1.shape != (n, n) or A2.shape != (n, n):
            raise ValueError("A1 and A2 must be square and equally sized")
        if b1.shape != (n,) or b2.shape != (n,) or h_vec.shape != (n,):
            raise ValueError("b1, b2, h must have length n")
        params = dict(params or {})

        def affine_row(A, b, i):
            terms = [f"({float(A[i, j])!r})*x{j + 1}" for j in range(n) if A[i, j] != 0.0]
            terms.append(repr(float(b[i])))
            return " + ".join(terms)

        def linear_row(M, i):
            terms = [
                f"({float(M[i, j])!r})*x{j + 1}"
                for j in range(M.shape[1])
                if M[i, j] != 0.0
            ]
            return " + ".join(terms) if terms else "0"

        f1 = [affine_row(A1, b1, i) for i in range(n)]
        f2 = [affine_row(A2, b2, i) for i in range(n)]
        h_src = linear_row(h_vec.reshape(1, -1), 0)
        g_src = [linear_row(c, i) for i in range(c.shape[0])]
        u_list = None
        Bv = None
        if u_src is not None:
            Bv = np.asarray(B, dtype=float).ravel()
            if Bv.shape != (n,):
                raise ValueError("B must have length n")
            u_list = [
                f"({float(Bv[i])!r})*({u_src})" if Bv[i] != 0.0 else "0"
                for i in range(n)
            ]
        sys = cls.from_sources(n, f1, f2, h_src, g_src, u_list, params)
        sys.pwa = {
            "A1": A1, "b1": b1, "A2": A2, "b2": b2,
            "B": Bv, "h": h_vec, "c": c, "u_src": u_src,
        }
        sys._sources["pwa"] = {
            "A1": A1.tolist(), "b1": b1.tolist(), "A2": A2.tolist(), "b2": b2.tolist(),
            "B": None if Bv is None else Bv.tolist(), "h": h_vec.tolist(),
            "c": c.tolist(), "u": u_src,
        }
        return sys

    def with_params(self, **updates) -> "BimodalSystem":
        """Rebuild the system with some parameter values replaced."""
        if self.pwa is not None:
            raise ValueError("PWA systems built from matrices carry no named parameters")
        if not hasattr(self, "_sources"):
            raise ValueError("system was not built from sources; rebuild it directly")
        unknown = set(updates) - set(self.params)
        if unknown:
            raise ValueError(f"unknown parameters: {sorted(unknown)}")
        params = {**self.params, **updates}
        s = self._sources
        return BimodalSystem.from_sources(
            s["n"], s["f_plus"], s["f_minus"], s["h"], s["g"], s["u"], params, self.tol_h
        )

    # -- geometry and evaluation ----------------------------------------------

    @property
    def p(self) -> int:
        return len(self.g_exprs)

    def h(self, x) -> float:
        return self.surface.h(x)

    def grad_h(self, x) -> np.ndarray:
        return self.surface.grad(x)

    def region(self, x) -> Mode:
        hv = self.surface.h(x)
        if hv > self.tol_h:
            return Mode.PLUS
        if hv < -self.tol_h:
            return Mode.MINUS
        return Mode.SLIDING

    def u(self, t: float) -> tuple:
        return self._u(self._zero_u, t) if self._u is not None else self._zero_u

    def field(self, mode: Mode, x, t: float) -> np.ndarray:
        """Full right-hand side f^mode(x) + u(t)."""
        f = self.f_plus(x, t) if mode == Mode.PLUS else self.f_minus(x, t)
        if self._u is None:
            return np.array(f, dtype=float)
        uu = self._u(x, t)
        return np.array([f[i] + uu[i] for i in range(self.n)], dtype=float)

    def eval_field(self, mode: Mode, x, t: float) -> np.ndarray:
        if np.shape(x) != (self.n,):
            raise ValueError(f"state must have shape ({self.n},), got {np.shape(x)}")
        return self.field(mode, x, t)

    def jacobian(self, mode: Mode, x, t: float = 0.0) -> np.ndarray:
        """Mode Jacobian; exact constant for PWA systems."""
        if self.pwa is not None:
            return self.pwa["A1"].copy() if mode == Mode.PLUS else self.pwa["A2"].copy()
        fld = self.f_plus if mode == Mode.PLUS else self.f_minus
        return fld.jacobian(x, t)

    def output(self, x) -> np.ndarray:
        if self._g is None:
            raise ValueError("system has no output map")
        return np.array(self._g(x, 0.0), dtype=float)

    def output_jacobian(self, x) -> np.ndarray:
        if self._dg is None:
            raise ValueError("system has no output map")
        if self.pwa is not None:
            return self.pwa["c"].copy()
        return np.array(self._dg(x, 0.0), dtype=float).reshape(self.p, self.n)


class ObserverSpec:
    """Output-injection observer: a copy of the plant per mode plus L(y - yhat)."""

    def __init__(self, base: BimodalSystem, L_plus, L_minus):
        if base.p == 0:
            raise ValueError("observer requires a system with an output map")
        self.base = base
        self.L_plus = np.asarray(L_plus, dtype=float).reshape(base.n, base.p)
        self.L_minus = np.asarray(L_minus, dtype=float).reshape(base.n, base.p)

    def gain(self, mode: Mode) -> np.ndarray:
        return self.L_plus if mode == Mode.PLUS else self.L_minus

    def field(self, mode: Mode, xhat, y, t: float) -> np.ndarray:
        """f^mode(xhat) + L^mode (y - g(xhat)) + u(t)."""
        y = np.asarray(y, dtype=float).reshape(self.base.p)
        innov = y - self.base.output(xhat)
        return self.base.field(mode, xhat, t) + self.gain(mode) @ innov

    def jacobian(self, mode: Mode, xhat, t: float = 0.0) -> np.ndarray:
        """d/dxhat of the observer right-hand side: df^mode/dx - L^mode dg/dx."""
        return self.base.jacobian(mode, xhat, t) - self.gain(mode) @ self.base.output_jacobian(xhat)


def observer_field(obs: ObserverSpec, mode: Mode, xhat, y, t: float) -> np.ndarray:
    """Observer right-hand side given the measured output y (module-level alias)."""
    if np.shape(xhat) != (obs.base.n,):
        raise ValueError(f"state must have shape ({obs.base.n},), got {np.shape(xhat)}")
    return obs.field(mode, xhat, y, t)

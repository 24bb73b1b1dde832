"""Entry-exit relation: base points, exit solvers, and delay predictions.

For n = 1 the exit point x_out is characterized through base points on y = 0:
project the entry section point down the fast fiber, solve the scalar
relation

    int_{x_out_b}^{x_in_b} (zeta(s,0)+1)/(s zeta(s,0)) ds + log(-x_out_b/x_in_b) = K,
    K = lam_1 pi / sqrt(-4 lam_0 - lam_1^2),

for x_out_b, then ride the exit fiber back up to the section. The left side
is strictly decreasing in x_out_b, so a sign-change bracket plus Brent is
exact business. For n >= 2 no such relation holds; instead the one-sided
delays z_in, z_out have leading orders eps^(2n-1)/( -int_0^inf v/P dv ) and
eps^(2n-1)/( int_-inf^0 v/P dv ), whose mismatch is the obstruction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import EntryExitError
from .model import PolyP, SlowFastModel
from .quadrature import (DEFAULT_TOL, adaptive_quad, pv_fast_half,
                         pv_fast_quadratic, regular_slow_part,
                         half_line_integral, whole_line_integral, QuadResult)

__all__ = [
    "BasePointMap",
    "EntryExitResult",
    "DelayPrediction",
    "base_point",
    "section_from_base",
    "entry_exit_constant",
    "solve_delta0_n1",
    "ddr_delta0_closed_form",
    "predict_delay_nge2",
    "canard_slope",
    "solve_canard_parameter",
    "classical_delta0",
    "log_y_leading_order",
]

_X_FLOOR = 1e-6  # fibers must stay this far from the turning point


@dataclass(frozen=True)
class BasePointMap:
    """Fast-fiber projection between the sections y = delta and the line y = 0.

    The fibers solve dx/dy = -g(x, y, 0) / x, which is regular while
    |x| >= x_floor; crossing the floor aborts with a structured error.
    """

    model: SlowFastModel
    tol: float = 1e-13
    x_floor: float = _X_FLOOR

    def _solve(self, x0: float, y0: float, y1: float,
               ys: Sequence[float] | None = None):
        g = self.model.g
        floor = self.x_floor

        def rhs(y, xv):
            return [-g(xv[0], y, 0.0) / xv[0]]

        def hit_floor(y, xv):
            return abs(xv[0]) - floor
        hit_floor.terminal = True
        hit_floor.direction = -1

        sol = solve_ivp(rhs, (y0, y1), [x0], method="DOP853",
                        rtol=self.tol, atol=1e-15, events=[hit_floor],
                        t_eval=None if ys is None else np.asarray(ys),
                        dense_output=False)
        if sol.status == 1:  # floor event
            raise EntryExitError(
                f"fiber from x = {x0:.6g} reached |x| = {floor:g} before "
                f"y = {y1:g}; no base point on this side")
        if not sol.success:
            raise EntryExitError(f"fiber integration failed: {sol.message}")
        return sol

    def __call__(self, x_section: float) -> float:
        """Base point: follow the fiber from (x_section, delta) down to y = 0."""
        if abs(x_section) <= self.x_floor:
            raise EntryExitError(f"section point too close to 0: {x_section}")
        sol = self._solve(x_section, self.model.delta, 0.0)
        return float(sol.y[0][-1])

    def inverse(self, x_base: float) -> float:
        """Section point: follow the fiber from (x_base, 0) up to y = delta."""
        if abs(x_base) <= self.x_floor:
            raise EntryExitError(f"base point too close to 0: {x_base}")
        sol = self._solve(x_base, 0.0, self.model.delta)
        return float(sol.y[0][-1])

    def trace(self, x_section: float, ys: Sequence[float]) -> np.ndarray:
        """x values along the fiber at the requested y nodes (descending)."""
        sol = self._solve(x_section, self.model.delta, 0.0, ys=ys)
        return sol.y[0]


def base_point(model: SlowFastModel, x_section: float, *, tol: float = 1e-13) -> float:
    """Project a section point (x_section, delta) along its fast fiber to y = 0."""
    return BasePointMap(model, tol=tol)(x_section)


def section_from_base(model: SlowFastModel, x_base: float, *, tol: float = 1e-13) -> float:
    """Inverse fiber map: lift (x_base, 0) to the section y = delta."""
    return BasePointMap(model, tol=tol).inverse(x_base)


def entry_exit_constant(p: PolyP) -> float:
    """K = lam_1 pi / sqrt(-4 lam_0 - lam_1^2), taken from the closed form."""
    if p.n != 1:
        raise EntryExitError("the scalar entry-exit constant exists for n = 1 only")
    return -pv_fast_quadratic(p.lam[0], p.lam[1])


@dataclass(frozen=True)
class EntryExitResult:
    """Solved exit data for one entry point (n = 1)."""
    x_in: float
    x_in_b: float
    x_out_b: float
    x_out: float
    relation_residual: float


def _relation_lhs(model: SlowFastModel, x_out_b: float, x_in_b: float,
                  tol: float) -> float:
    reg = regular_slow_part(model.zeta, x_out_b, x_in_b, tol)
    return reg.value + math.log(-x_out_b / x_in_b)


def solve_delta0_n1(model: SlowFastModel, x_in: float,
                    tol: float = 1e-12) -> EntryExitResult:
    """Solve the entry-exit relation for the exit point paired with x_in.

    The root is bracketed by a sign scan of the relation over the base-point
    image of I_out (expanded 10%), then polished with Brent; the solver never
    extrapolates outside a verified sign change.
    """
    if model.n != 1:
        raise EntryExitError("solve_delta0_n1 requires an n = 1 model")
    bpm = BasePointMap(model)
    x_in_b = bpm(x_in)
    if x_in_b <= 0.0:
        raise EntryExitError(
            f"entry fiber from x_in = {x_in} lands at x_in_b = {x_in_b:.6g} <= 0")
    K = entry_exit_constant(model.p)

    def F(a: float) -> float:
        return _relation_lhs(model, a, x_in_b, tol) - K

    lo = bpm(model.I_out[0])
    hi = bpm(model.I_out[1])
    if lo > hi:
        lo, hi = hi, lo
    span = hi - lo
    lo = max(model.I[0], lo - 0.1 * span)
    hi = min(-_X_FLOOR * 10.0, hi + 0.1 * span)

    grid = np.linspace(lo, hi, 64)
    fvals = [F(float(a)) for a in grid]
    bracket = None
    for a0, a1, f0, f1 in zip(grid[:-1], grid[1:], fvals[:-1], fvals[1:]):
        if f0 == 0.0:
            bracket = (float(a0), float(a0))
            break
        if f0 * f1 < 0.0:
            bracket = (float(a0), float(a1))
            break
    if bracket is None:
        raise EntryExitError(
            f"entry-exit relation has no root over the base-point image "
            f"[{lo:.6g}, {hi:.6g}] of I_out (x_in = {x_in}); "
            "exit lies outside the declared exit section")
    if bracket[0] == bracket[1]:
        x_out_b = bracket[0]
    else:
        x_out_b = float(brentq(F, bracket[0], bracket[1], xtol=tol))
    residual = abs(F(x_out_b))
    x_out = bpm.inverse(x_out_b)
    return EntryExitResult(x_in=x_in, x_in_b=x_in_b, x_out_b=x_out_b,
                           x_out=x_out, relation_residual=residual)


def ddr_delta0_closed_form(model: SlowFastModel, x_in: float) -> float:
    """Exit point for the worked model zeta = -1 + beta x, g = -1, n = 1.

    x_in_b = sqrt(x_in^2 - 2 delta),
    x_out_b = e^K x_in_b / (beta (e^K + 1) x_in_b - 1),
    x_out = -sqrt(2 delta + x_out_b^2).
    """
    if model.n != 1:
        raise EntryExitError("closed form requires an n = 1 model")
    if model.zeta_kind != "ddr-beta":
        raise EntryExitError(
            f"closed form requires the 'ddr-beta' zeta, model has {model.zeta_kind!r}")
    if model.g_kind != "constant" or model.g_params != (-1.0,):
        raise EntryExitError("closed form requires the constant fast factor g = -1")
    beta = model.zeta_params[0]
    under = x_in * x_in - 2.0 * model.delta
    if under <= 0.0:
        raise EntryExitError(
            f"x_in = {x_in} is below the fold of the entry fiber "
            f"(x_in^2 <= 2 delta = {2 * model.delta:g})")
    b = math.sqrt(under)
    eK = math.exp(entry_exit_constant(model.p))
    denom = beta * (eK + 1.0) * b - 1.0
    if denom >= 0.0:
        raise EntryExitError(
            f"x_in = {x_in} has no admissible exit: beta (e^K+1) x_in_b - 1 = "
            f"{denom:.6g} >= 0")
    x_out_b = eK * b / denom
    return -math.sqrt(2.0 * model.delta + x_out_b * x_out_b)


@dataclass(frozen=True)
class DelayPrediction:
    """Leading-order one-sided delays for n >= 2.

    z_in_leading and z_out_leading are the eps-free constants; the predicted
    section values are eps^(2n-1) times them. whole_line_integral's sign
    classifies the asymmetry: negative means 0 < z_in < z_out (entry delay
    undershoots), positive means z_in > z_out > 0.
    """

    n: int
    eps: float
    z_in_leading: float
    z_out_leading: float
    whole_line_integral: float

    @property
    def z_in(self) -> float:
        return self.eps ** (2 * self.n - 1) * self.z_in_leading

    @property
    def z_out(self) -> float:
        return self.eps ** (2 * self.n - 1) * self.z_out_leading


def predict_delay_nge2(p: PolyP, eps: float, tol: float = DEFAULT_TOL) -> DelayPrediction:
    """Leading-order z_in/z_out prediction from the half-line integrals."""
    if p.n < 2:
        raise EntryExitError("predict_delay_nge2 requires n >= 2")
    pos = half_line_integral(p, "pos", tol)
    neg = half_line_integral(p, "neg", tol)
    if pos.value >= 0.0 or neg.value <= 0.0:
        raise EntryExitError(
            f"half-line integrals have unexpected signs: pos={pos.value:.6g}, "
            f"neg={neg.value:.6g}")
    return DelayPrediction(
        n=p.n, eps=eps,
        z_in_leading=1.0 / (-pos.value),
        z_out_leading=1.0 / neg.value,
        whole_line_integral=pos.value + neg.value,
    )


def canard_slope(p: PolyP, l_index: int, tol: float = DEFAULT_TOL) -> float:
    """d/d lam_l of int_R v/P dv, which equals -int_R v^(1+l)/P^2 dv.

    Strictly negative for odd l when P is negative definite.
    """
    if not (0 <= l_index < 2 * p.n):
        raise EntryExitError(f"l_index out of range: {l_index}")
    k = 4 * p.n - 3 - l_index
    core = adaptive_quad(lambda v: v ** (1 + l_index) / p(v) ** 2, -1.0, 1.0, tol / 2)
    tail = adaptive_quad(lambda u: u ** k / p.tail_poly(u) ** 2, -1.0, 1.0, tol / 2)
    return -(core.value + tail.value)


def solve_canard_parameter(p: PolyP, l_index: int, target: float = 0.0,
                           tol: float = 1e-12) -> float:
    """Retune the odd coefficient lam_l so int_R v/P dv equals target.

    Used to restore the symmetric (canard) balance z_in = z_out at leading
    order. The slope in lam_l must be nondegenerate; even l is rejected since
    the balance is controlled by the odd part of P.
    """
    if p.n < 2:
        raise EntryExitError("solve_canard_parameter requires n >= 2")
    if l_index % 2 == 0 or not (0 <= l_index < 2 * p.n):
        raise EntryExitError(
            f"l_index must be an odd index in [1, {2 * p.n - 1}], got {l_index}")

    def with_l(v: float) -> PolyP:
        lam = list(p.lam)
        lam[l_index] = v
        return PolyP(n=p.n, lam=tuple(lam))

    def W(v: float) -> float:
        q = with_l(v)
        if not q.is_negative_definite():
            raise EntryExitError(
                f"lam_{l_index} = {v:.6g} breaks negative definiteness while "
                "solving for the canard balance")
        return whole_line_integral(q, tol).value - target

    v0 = p.lam[l_index]
    w0 = W(v0)
    if w0 == 0.0:
        return v0
    # W is decreasing in lam_l near the balance: walk toward the root
    step = max(0.1, 0.5 * abs(v0))
    lo, hi = v0, v0
    for _ in range(40):
        if w0 > 0.0:
            hi += step
            if W(hi) <= 0.0:
                break
            lo = hi
        else:
            lo -= step
            if W(lo) >= 0.0:
                break
            hi = lo
        step *= 1.6
    else:
        raise EntryExitError("could not bracket the canard balance in lam_l")
    root = float(brentq(W, lo, hi, xtol=1e-14))
    slope = canard_slope(with_l(root), l_index, tol)
    if abs(slope) < 1e-10:
        raise EntryExitError(
            f"degenerate canard slope {slope:.3g} at lam_{l_index} = {root:.6g}")
    return root


def classical_delta0(h_over_f: Callable[[float], float], x_in: float,
                     bracket: tuple[float, float], tol: float = 1e-12) -> float:
    """Exit point of the classical entry-exit function: the x_out != x_in with
    int_{x_in}^{x_out} (h/f)(s) ds = 0, sought inside `bracket`."""

    def A(x_out: float) -> float:
        r = adaptive_quad(h_over_f, x_in, x_out, max(tol, 1e-13))
        return r.value

    a, b = bracket
    fa, fb = A(a), A(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise EntryExitError(
            f"no sign change of the divergence integral over {bracket}")
    return float(brentq(A, a, b, xtol=tol))


def log_y_leading_order(model: SlowFastModel, x_in: float, eps: float,
                        tol: float = DEFAULT_TOL) -> float:
    """Leading-order log y at the x = 0 crossing for an n = 1 passage.

    log y = (1/eps) * [ log eps + R_+ + S(x_in_b) - log x_in_b ], where R_+
    is the one-sided regularized fast combination and S integrates the
    regular slow kernel from 0 to the entry base point.
    """
    if model.n != 1:
        raise EntryExitError("log_y_leading_order is implemented for n = 1")
    x_in_b = base_point(model, x_in)
    rplus = pv_fast_half(model.p, "pos", tol)
    s = regular_slow_part(model.zeta, 0.0, x_in_b, tol)
    return (math.log(eps) + rplus.value + s.value - math.log(x_in_b)) / eps

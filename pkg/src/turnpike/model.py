"""Planar slow-fast models with a degenerate turning point on the line y = 0.

The systems handled here have the form

    x' = eps * f(x, eps) + y * g(x, y, eps)
    y' = -x * y

with  f(x, eps) = sum_i eps^(2n-i) * lam_i * x^i  +  x^(2n) * zeta(x, eps),
zeta(0, 0) = -1, so the slow drift degenerates like -x^(2n) at the origin.
The singular coordinate y = exp(-1/z) turns the y equation into z' = -x z^2,
which is what makes passages with exponentially small y computable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ModelError

__all__ = [
    "PolyP",
    "SlowFastModel",
    "StateXY",
    "StateXZ",
    "HypothesisReport",
    "exp_neg_inv",
    "eval_f_lambda",
    "vector_field_xy",
    "vector_field_xz",
    "check_hypotheses",
    "load_model",
    "make_zeta",
    "make_g",
    "ddr_model",
]

# exp(-1/z) underflows to an exact double 0 once 1/z exceeds ~745.13
_EXP_UNDERFLOW = 745.0


def exp_neg_inv(z: float) -> float:
    """Guarded exp(-1/z): exactly 0.0 for z <= 0 and once 1/z > 745."""
    if z <= 0.0:
        return 0.0
    r = 1.0 / z
    if r > _EXP_UNDERFLOW:
        return 0.0
    return math.exp(-r)


@dataclass(frozen=True)
class PolyP:
    """Rescaled turning-point polynomial P(v) = sum_i lam_i v^i - v^(2n).

    `lam` holds the 2n free coefficients lam_0 .. lam_{2n-1}; the leading
    coefficient is fixed at -1.
    """

    n: int
    lam: tuple[float, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ModelError(f"n must be >= 1, got {self.n}")
        if len(self.lam) != 2 * self.n:
            raise ModelError(
                f"lam must have 2n = {2 * self.n} entries, got {len(self.lam)}")
        object.__setattr__(self, "lam", tuple(float(c) for c in self.lam))

    @property
    def degree(self) -> int:
        return 2 * self.n

    def coeffs(self) -> tuple[float, ...]:
        """Full coefficient tuple (lam_0, ..., lam_{2n-1}, -1)."""
        return self.lam + (-1.0,)

    def __call__(self, v):
        """Evaluate P(v); accepts scalars or arrays (Horner form)."""
        acc = np.multiply(v, 0.0) - 1.0
        for c in reversed(self.lam):
            acc = acc * v + c
        return acc

    def tail_poly(self, u):
        """Evaluate Q(u) = u^(2n) P(1/u); a polynomial with Q(0) = -1.

        Q(u) = lam_0 u^(2n) + lam_1 u^(2n-1) + ... + lam_{2n-1} u - 1.
        Used to map integrals over |v| >= 1 onto u = 1/v in [-1, 1].
        """
        acc = np.multiply(u, 0.0)
        for c in self.lam:
            acc = (acc + c) * u
        return acc - 1.0

    def is_negative_definite(self) -> bool:
        """True iff P(v) < 0 for all real v.

        For n = 1 this is the exact discriminant test 4 lam_0 + lam_1^2 < 0;
        for n >= 2 the real critical points of P are found numerically.
        """
        if self.n == 1:
            return 4.0 * self.lam[0] + self.lam[1] ** 2 < 0.0
        return self.max_over_reals() < 0.0

    def max_over_reals(self) -> float:
        """Global maximum of P over the reals (finite: leading term -v^2n)."""
        # roots of P' (degree 2n-1, odd, so at least one real critical point);
        # np.roots wants highest degree first: P' = -2n v^(2n-1) + ... + lam_1
        dcoeffs = [-(2.0 * self.n)] + [
            float(i * self.lam[i]) for i in range(2 * self.n - 1, 0, -1)]
        roots = np.roots(dcoeffs)
        real = roots[np.abs(roots.imag) < 1e-9].real
        if real.size == 0:  # cannot happen for odd degree, kept as a guard
            return float(self(0.0))
        return float(np.max(self(real)))


@dataclass(frozen=True)
class StateXY:
    """Point of the raw planar system, with its eps."""
    x: float
    y: float
    eps: float


@dataclass(frozen=True)
class StateXZ:
    """Point of the singularly transformed system y = exp(-1/z)."""
    x: float
    z: float
    eps: float


@dataclass(frozen=True)
class SlowFastModel:
    """Model data: turning-point polynomial, zeta, g, and section geometry.

    zeta(x, eps) must satisfy zeta(0, 0) = -1; g(x, y, eps) is the regular
    fast factor; delta in (0, 1) is the section height; I contains 0 and all
    base points; I_in/I_out are the entry/exit section intervals in x.

    zeta_kind/g_kind carry the builtin form (if any) so the compiled kernel
    can evaluate without Python callbacks; arbitrary callables work too and
    simply run on the pure-Python path.
    """

    p: PolyP
    zeta: Callable[[float, float], float]
    g: Callable[[float, float, float], float]
    delta: float
    I: tuple[float, float]
    I_in: tuple[float, float]
    I_out: tuple[float, float]
    zeta_kind: str | None = None
    zeta_params: tuple[float, ...] = ()
    g_kind: str | None = None
    g_params: tuple[float, ...] = ()

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ModelError(f"delta must lie in (0, 1), got {self.delta}")
        if not (self.I[0] < 0.0 < self.I[1]):
            raise ModelError(f"I must contain 0 in its interior, got {self.I}")
        if not (0.0 < self.I_in[0] <= self.I_in[1]):
            raise ModelError(f"I_in must be a subinterval of (0, inf): {self.I_in}")
        if not (self.I_out[0] <= self.I_out[1] < 0.0):
            raise ModelError(f"I_out must be a subinterval of (-inf, 0): {self.I_out}")
        z00 = float(self.zeta(0.0, 0.0))
        if abs(z00 + 1.0) > 1e-12:
            raise ModelError(f"zeta(0, 0) must equal -1, got {z00}")

    @property
    def n(self) -> int:
        return self.p.n

    @property
    def z_delta(self) -> float:
        """z value of the sections y = delta under y = exp(-1/z)."""
        return -1.0 / math.log(self.delta)


def eval_f_lambda(model: SlowFastModel, x: float, eps: float) -> float:
    """Slow drift f(x, eps) = sum_i eps^(2n-i) lam_i x^i + x^(2n) zeta(x, eps).

    Exact for eps = 0 as well (limit x^(2n) zeta(x, 0)); this expanded form
    avoids the 0/0 of the rescaled P(x/eps) representation.
    """
    lam = model.p.lam
    two_n = 2 * model.p.n
    acc = 0.0
    # Horner in x with eps-weighted coefficients eps^(2n-i) lam_i
    for i in range(two_n - 1, -1, -1):
        acc = acc * x + lam[i] * eps ** (two_n - i)
    return acc + x ** two_n * float(model.zeta(x, eps))


def vector_field_xy(model: SlowFastModel, s: StateXY) -> tuple[float, float]:
    """Right-hand side of the raw system (x', y')."""
    gy = s.y * float(model.g(s.x, s.y, s.eps))
    return (s.eps * eval_f_lambda(model, s.x, s.eps) + gy, -s.x * s.y)


def vector_field_xz(model: SlowFastModel, s: StateXZ) -> tuple[float, float]:
    """Right-hand side of the transformed system (x', z'), y = exp(-1/z)."""
    y = exp_neg_inv(s.z)
    gy = y * float(model.g(s.x, y, s.eps)) if y != 0.0 else 0.0
    return (s.eps * eval_f_lambda(model, s.x, s.eps) + gy, -s.x * s.z * s.z)


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of the standing-assumption check.

    c is the largest margin such that zeta(x, 0) <= -c on I and P <= -c on R;
    f_margin is -max f over the sampled (x, eps) grid. witness locates the
    worst point of the first failed check, None when all pass.
    """

    passed: bool
    c: float
    f_margin: float
    witness: tuple[str, float, float, float] | None


def check_hypotheses(model: SlowFastModel, eps_max: float = 0.05,
                     grid: int = 201) -> HypothesisReport:
    """Verify negativity of zeta(., 0) on I, of P on R, and of f on I x (0, eps_max]."""
    xs = np.linspace(model.I[0], model.I[1], grid)
    zvals = np.array([float(model.zeta(x, 0.0)) for x in xs])
    zmax = float(zvals.max())
    witness = None
    if zmax >= 0.0:
        xw = float(xs[int(zvals.argmax())])
        witness = ("zeta", xw, 0.0, zmax)

    pmax = model.p.max_over_reals()
    if witness is None and pmax >= 0.0:
        witness = ("P", math.nan, math.nan, pmax)

    f_margin = math.inf
    eps_grid = np.linspace(eps_max / grid, eps_max, grid)
    for eps in eps_grid:
        fvals = np.array([eval_f_lambda(model, float(x), float(eps)) for x in xs])
        fmax = float(fvals.max())
        if -fmax < f_margin:
            f_margin = -fmax
            if fmax >= 0.0 and witness is None:
                witness = ("f", float(xs[int(fvals.argmax())]), float(eps), fmax)

    c = min(-zmax, -pmax)
    passed = zmax < 0.0 and pmax < 0.0 and f_margin > 0.0
    return HypothesisReport(passed=passed, c=c, f_margin=f_margin,
                            witness=witness)


# ---------------------------------------------------------------------------
# builtin zeta / g factories and the model-file loader

def make_zeta(kind: str, params: Sequence[float] = ()) -> Callable[[float, float], float]:
    """Builtin zeta forms: 'ddr-beta' (-1 + beta x), 'constant-minus-one', 'poly'."""
    if kind == "ddr-beta":
        if len(params) != 1:
            raise ModelError("zeta 'ddr-beta' needs exactly one parameter beta")
        beta = float(params[0])
        return lambda x, eps: -1.0 + beta * x
    if kind == "constant-minus-one":
        return lambda x, eps: -1.0
    if kind == "poly":
        if not params:
            raise ModelError("zeta 'poly' needs coefficients (c0, c1, ...)")
        cs = tuple(float(c) for c in params)
        if abs(cs[0] + 1.0) > 1e-12:
            raise ModelError("zeta 'poly' must have c0 = -1")

        def zpoly(x, eps, _cs=cs):
            acc = 0.0
            for c in reversed(_cs):
                acc = acc * x + c
            return acc

        return zpoly
    raise ModelError(f"unknown zeta kind {kind!r}")


def make_g(kind: str, params: Sequence[float] = ()) -> Callable[[float, float, float], float]:
    """Builtin g forms: 'constant' (needs g_value) and 'ddr' (identically -1)."""
    if kind == "constant":
        if len(params) != 1:
            raise ModelError("g 'constant' needs exactly one parameter g_value")
        v = float(params[0])
        return lambda x, y, eps: v
    if kind == "ddr":
        return lambda x, y, eps: -1.0
    raise ModelError(f"unknown g kind {kind!r}")


def _build(n: int, lam: Sequence[float], zeta_kind: str, zeta_params: Sequence[float],
           g_kind: str, g_params: Sequence[float], delta: float,
           I: Sequence[float], I_in: Sequence[float], I_out: Sequence[float]) -> SlowFastModel:
    if g_kind == "ddr":
        g_kind, g_params = "constant", (-1.0,)
    return SlowFastModel(
        p=PolyP(n=n, lam=tuple(lam)),
        zeta=make_zeta(zeta_kind, zeta_params),
        g=make_g(g_kind, g_params),
        delta=float(delta),
        I=(float(I[0]), float(I[1])),
        I_in=(float(I_in[0]), float(I_in[1])),
        I_out=(float(I_out[0]), float(I_out[1])),
        zeta_kind=zeta_kind,
        zeta_params=tuple(float(p) for p in zeta_params),
        g_kind=g_kind,
        g_params=tuple(float(p) for p in g_params),
    )


def ddr_model(lam0: float = -2.0, lam1: float = 1.0, beta: float = 1.0,
              delta: float = 0.5,
              I: tuple[float, float] = (-3.0, 0.9),
              I_in: tuple[float, float] = (1.004, 1.016),
              I_out: tuple[float, float] = (-2.8, -1.01)) -> SlowFastModel:
    """The worked n = 1 example: zeta = -1 + beta x, g = -1."""
    return _build(1, (lam0, lam1), "ddr-beta", (beta,), "ddr", (),
                  delta, I, I_in, I_out)


def parse_kv_file(path: str | Path) -> dict[str, str]:
    """Parse a flat `key = value` text file; '#' comments, blank lines allowed."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def load_model(path: str | Path) -> SlowFastModel:
    """Load a SlowFastModel from a key-value model file."""
    kv = parse_kv_file(path)
    required = {"n", "lambda", "zeta", "g", "delta", "I", "I_in", "I_out"}
    missing = required - kv.keys()
    if missing:
        raise ModelError(f"{path}: missing keys {sorted(missing)}")
    try:
        n = int(kv["n"])
        lam = _floats(kv["lambda"])
        zeta_kind = kv["zeta"]
        if zeta_kind == "ddr-beta":
            zeta_params = (float(kv["beta"]),) if "beta" in kv else ()
            if not zeta_params:
                raise ModelError(f"{path}: zeta 'ddr-beta' requires key beta")
        elif zeta_kind == "poly":
            if "zeta_coeffs" not in kv:
                raise ModelError(f"{path}: zeta 'poly' requires key zeta_coeffs")
            zeta_params = _floats(kv["zeta_coeffs"])
        else:
            zeta_params = ()
        g_kind = kv["g"]
        if g_kind == "constant":
            if "g_value" not in kv:
                raise ModelError(f"{path}: g 'constant' requires key g_value")
            g_params = (float(kv["g_value"]),)
        else:
            g_params = ()
        return _build(n, lam, zeta_kind, zeta_params, g_kind, g_params,
                      float(kv["delta"]), _floats(kv["I"]),
                      _floats(kv["I_in"]), _floats(kv["I_out"]))
    except ModelError:
        raise
    except (ValueError, KeyError) as exc:
        raise ModelError(f"{path}: {exc}") from exc

"""Flow of the dimensionless counterterm coupling with the floating cutoff.

For the attractive inverse-square potential, lowering the momentum cutoff
induces a separable counterterm whose dimensionless strength f obeys

    Lambda df/dLambda = beta(f) = (f - a)^2 + b2,

with a = alpha/(2L) - L, b2 = alpha - L^2 and L = l + 1/2.  The sign of b2
selects the behavior: b2 > 0 gives a limit cycle (f log-periodic in Lambda,
running through infinity once per cycle), b2 = 0 the critical case (merged
fixed point, logarithmic approach or a finite-cutoff divergence), b2 < 0 a
pair of fixed points with asymptotically free and trivial branches.

All types are immutable values and every operation is a pure function, so the
module is safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Integral

import numpy as np

from . import _flow_kernels

__all__ = [
    "PartialWave",
    "FlowParams",
    "FlowState",
    "Regime",
    "PoleSignal",
    "FlowIntegrationError",
    "critical_alpha",
    "make_flow_params",
    "beta",
    "classify",
    "classify_with_tolerance",
    "flow_analytic",
    "flow_numeric",
    "gamma_from_f",
    "f_from_gamma",
    "fixed_point_locus",
]


class FlowIntegrationError(RuntimeError):
    """The adaptive integrator failed to reach the requested cutoff."""


@dataclass(frozen=True)
class PartialWave:
    """Angular-momentum sector; sectors decouple and flow independently."""

    l: int

    def __post_init__(self):
        if not isinstance(self.l, Integral) or isinstance(self.l, bool):
            raise ValueError(f"angular momentum l must be an integer, got {self.l!r}")
        if self.l < 0:
            raise ValueError(f"angular momentum l must be >= 0, got {self.l}")
        object.__setattr__(self, "l", int(self.l))

    @property
    def l_plus_half(self) -> float:
        """Half-integer combination l + 1/2 that sets scaling dimensions."""
        return self.l + 0.5


@dataclass(frozen=True)
class FlowParams:
    """Coupling strength and the two derived beta-function coefficients.

    ``a`` is the vertex (minimum position) of the quadratic beta function and
    ``b2`` its minimum value; b2 may be negative.
    """

    alpha: float
    wave: PartialWave
    a: float
    b2: float


@dataclass(frozen=True)
class FlowState:
    """A point (cutoff, f) on a flow trajectory."""

    cutoff: float
    f: float

    def __post_init__(self):
        if not (self.cutoff > 0.0) or not math.isfinite(self.cutoff):
            raise ValueError(f"cutoff must be positive and finite, got {self.cutoff}")
        if not math.isfinite(self.f):
            raise ValueError(f"coupling f must be finite, got {self.f}")


@dataclass(frozen=True)
class Regime:
    """Classification of the flow at given (alpha, l).

    kind is one of "limit-cycle" (b2 > 0), "critical" (b2 = 0) or
    "two-fixed-points" (b2 < 0).  Only the fields meaningful for the kind are
    populated; the rest are None.
    """

    kind: str
    params: FlowParams
    f_minus: float | None = None
    f_plus: float | None = None
    fixed_point: float | None = None
    quotient: float | None = None
    log_period: float | None = None


@dataclass(frozen=True)
class PoleSignal:
    """Finite-cutoff divergence of the coupling, bracketed in ln Lambda.

    The bracket (t_lo, t_hi) is given in t = ln(Lambda/lambda0) and is
    guaranteed to contain the divergence; its width is at most 1e-6.
    A PoleSignal is an ordinary result, not an error: the trivial branch of
    the flow really does blow up at finite cutoff.
    """

    t_lo: float
    t_hi: float
    lambda0: float

    @property
    def width(self) -> float:
        return self.t_hi - self.t_lo

    @property
    def t_mid(self) -> float:
        return 0.5 * (self.t_lo + self.t_hi)

    @property
    def ln_lambda_lo(self) -> float:
        return math.log(self.lambda0) + self.t_lo

    @property
    def ln_lambda_hi(self) -> float:
        return math.log(self.lambda0) + self.t_hi

    @property
    def lambda_lo(self) -> float:
        return self.lambda0 * math.exp(self.t_lo)

    @property
    def lambda_hi(self) -> float:
        return self.lambda0 * math.exp(self.t_hi)


def critical_alpha(wave: PartialWave) -> float:
    """Coupling above which partial wave l enters the limit-cycle regime."""
    big_l = wave.l_plus_half
    return big_l * big_l


def make_flow_params(alpha: float, l: int) -> FlowParams:
    """Build the beta-function coefficients for coupling alpha in wave l."""
    wave = PartialWave(l)
    if not (alpha > 0.0) or not math.isfinite(alpha):
        raise ValueError(
            f"alpha must be > 0 (attractive potential), got {alpha!r}"
        )
    big_l = wave.l_plus_half
    a = alpha / (2.0 * big_l) - big_l
    b2 = alpha - big_l * big_l
    return FlowParams(alpha=float(alpha), wave=wave, a=a, b2=b2)


def beta(f, params: FlowParams):
    """Beta function Lambda df/dLambda = (f - a)^2 + b2; works on arrays."""
    return (f - params.a) ** 2 + params.b2


def classify(params: FlowParams) -> Regime:
    """Classify the regime by the exact sign of b2.

    The comparison is exact on the given inputs; use
    ``classify_with_tolerance`` when sweeping couplings numerically.
    """
    if params.b2 > 0.0:
        b = math.sqrt(params.b2)
        return Regime(
            kind="limit-cycle",
            params=params,
            quotient=math.exp(-2.0 * math.pi / b),
            log_period=math.pi / b,
        )
    if params.b2 == 0.0:
        return Regime(kind="critical", params=params, fixed_point=params.a)
    b = math.sqrt(-params.b2)
    return Regime(
        kind="two-fixed-points",
        params=params,
        f_minus=params.a - b,
        f_plus=params.a + b,
    )


def classify_with_tolerance(params: FlowParams, eps: float) -> Regime:
    """Classify treating |b2| <= eps as critical (sweep tooling helper)."""
    if eps < 0.0:
        raise ValueError("tolerance eps must be >= 0")
    if abs(params.b2) <= eps:
        return Regime(kind="critical", params=params, fixed_point=params.a)
    return classify(params)


def _certified_pole(t_pole: float, sign_fn, lambda0: float) -> PoleSignal:
    """Bracket a closed-form pole location by expanding until the
    denominator-like function changes sign across the bracket."""
    delta = max(1.0e-12, abs(t_pole) * 4.0e-16)
    for _ in range(60):
        lo = t_pole - delta
        hi = t_pole + delta
        s_lo = sign_fn(lo)
        s_hi = sign_fn(hi)
        if s_lo != 0.0 and s_hi != 0.0 and (s_lo > 0.0) != (s_hi > 0.0):
            return PoleSignal(t_lo=lo, t_hi=hi, lambda0=lambda0)
        delta *= 4.0
        if 2.0 * delta > 1.0e-6:
            break
    # fall back to the widest bracket the contract allows
    return PoleSignal(t_lo=t_pole - 5.0e-7, t_hi=t_pole + 5.0e-7, lambda0=lambda0)


def _validate_span(lambda0: float, lam: float) -> float:
    if not (lambda0 > 0.0) or not math.isfinite(lambda0):
        raise ValueError(f"lambda0 must be positive and finite, got {lambda0}")
    if not (lam > 0.0) or not math.isfinite(lam):
        raise ValueError(f"lambda must be positive and finite, got {lam}")
    return math.log(lam / lambda0)


def flow_analytic(
    params: FlowParams,
    f0: float,
    lambda0: float,
    lam: float,
    *,
    through_poles: bool = False,
):
    """Closed-form flow value f(lambda) from the condition f(lambda0) = f0.

    Returns a float, or a PoleSignal when the coupling diverges at a cutoff
    inside the requested interval (including the endpoint).  With
    ``through_poles=True`` the trajectory is continued through divergences
    (the coupling reappears from the opposite infinity), which is the natural
    continuation on a limit cycle; only an endpoint landing exactly on a pole
    still yields a PoleSignal.
    """
    t = _validate_span(lambda0, lam)
    if not math.isfinite(f0):
        raise ValueError(f"f0 must be finite, got {f0}")
    a = params.a
    b2 = params.b2
    u0 = f0 - a
    if t == 0.0:
        return f0

    if b2 > 0.0:
        b = math.sqrt(b2)
        phi = math.atan(u0 / b)
        if t > 0.0:
            t_pole = (0.5 * math.pi - phi) / b
            crossed = t >= t_pole
        else:
            t_pole = (-0.5 * math.pi - phi) / b
            crossed = t <= t_pole
        if crossed and not through_poles:
            return _certified_pole(
                t_pole, lambda tt: math.cos(phi + b * tt), lambda0
            )
        value = a + b * math.tan(phi + b * t)
        if not math.isfinite(value):
            return _certified_pole(
                t_pole, lambda tt: math.cos(phi + b * tt), lambda0
            )
        return value

    if b2 == 0.0:
        if u0 == 0.0:
            return a  # sitting on the merged fixed point
        t_pole = 1.0 / u0
        denom = 1.0 - u0 * t
        if denom <= 0.0 and not through_poles:
            return _certified_pole(t_pole, lambda tt: 1.0 - u0 * tt, lambda0)
        if denom == 0.0:
            return _certified_pole(t_pole, lambda tt: 1.0 - u0 * tt, lambda0)
        return a + u0 / denom

    b = math.sqrt(-b2)
    v0 = u0 / b
    if abs(v0) > 1.0:
        t_pole = math.atanh(1.0 / v0) / b
        crossed = (t_pole > 0.0 and t >= t_pole) or (t_pole < 0.0 and t <= t_pole)
        if crossed and not through_poles:
            return _certified_pole(
                t_pole, lambda tt: 1.0 - v0 * math.tanh(b * tt), lambda0
            )
        s = math.tanh(b * t)
        denom = 1.0 - v0 * s
        if denom == 0.0:
            return _certified_pole(
                t_pole, lambda tt: 1.0 - v0 * math.tanh(b * tt), lambda0
            )
        return a + b * (v0 - s) / denom
    # between (or on) the fixed points: no divergence on this branch
    s = math.tanh(b * t)
    return a + b * (v0 - s) / (1.0 - v0 * s)


def flow_numeric(
    params: FlowParams,
    f0: float,
    lambda0: float,
    lam: float,
    *,
    rtol: float = 1.0e-10,
    atol: float = 1.0e-12,
    through_poles: bool = False,
):
    """Adaptive RK4(5) integration of the flow in t = ln Lambda.

    Same return convention as ``flow_analytic``.  Divergences are located by
    tracking the reciprocal coupling through the blow-up and bracketing its
    zero crossing; the reported bracket width is well under 1e-6 in ln Lambda.
    """
    t = _validate_span(lambda0, lam)
    if not math.isfinite(f0):
        raise ValueError(f"f0 must be finite, got {f0}")
    if not (rtol > 0.0) or not (atol >= 0.0):
        raise ValueError("need rtol > 0 and atol >= 0")
    status, value, p_lo, p_hi = _flow_kernels.riccati_drive(
        params.a, params.b2, float(f0), t, float(rtol), float(atol), through_poles
    )
    if status == _flow_kernels.OK:
        return value
    if status == _flow_kernels.POLE:
        return PoleSignal(t_lo=p_lo, t_hi=p_hi, lambda0=lambda0)
    raise FlowIntegrationError(
        f"integrator failed: alpha={params.alpha}, l={params.wave.l}, "
        f"f0={f0}, span t={t}"
    )


def gamma_from_f(state: FlowState, wave: PartialWave) -> float:
    """Dimensionful coupling gamma = f / Lambda^(2l+1) of the separable term."""
    return state.f / state.cutoff ** (2 * wave.l + 1)


def f_from_gamma(gamma: float, cutoff: float, wave: PartialWave) -> float:
    """Inverse of ``gamma_from_f``; round-trips to machine precision."""
    if not (cutoff > 0.0) or not math.isfinite(cutoff):
        raise ValueError(f"cutoff must be positive and finite, got {cutoff}")
    return gamma * cutoff ** (2 * wave.l + 1)


def fixed_point_locus(alpha: float, ls) -> np.ndarray:
    """Minima of the beta functions across partial waves, at fixed alpha.

    Returns an array of rows (l, a, b2): the beta function of wave l has its
    minimum at f = a with value b2, so these points trace the locus on which
    all the minima lie.  Non-integer l are accepted to sample the locus as a
    continuous curve.
    """
    if not (alpha > 0.0) or not math.isfinite(alpha):
        raise ValueError(f"alpha must be > 0, got {alpha!r}")
    ls = np.asarray(ls, dtype=float)
    if ls.ndim != 1:
        raise ValueError("ls must be a one-dimensional sequence")
    if np.any(ls < 0.0):
        raise ValueError("all l values must be >= 0")
    big_l = ls + 0.5
    a = alpha / (2.0 * big_l) - big_l
    b2 = alpha - big_l * big_l
    return np.column_stack([ls, a, b2])

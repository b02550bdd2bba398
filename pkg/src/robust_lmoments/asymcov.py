"""Asymptotic variance-covariance of trimmed/winsorized moment estimators.

Several interchangeable evaluation routes are provided for each matrix
entry:

* ``sigma_alpha_form``   -- single integral of the product of influence
  integrands; the reference oracle for everything else.
* ``sigma_mtm_kernel_form`` -- double integral of the uniform empirical
  process kernel min(v,w) - vw against H'_j(v) H'_i(w) over the retained
  windows, scaled by the retained-mass factor.
* ``sigma_mtm_closed``   -- closed form valid when one retimming window
  is nested-left of the other (a_i <= a_j < 1-b_i <= 1-b_j, or the same
  after swapping the pair).
* ``sigma_mtm_equal_props`` -- fast path for equal proportions.
* ``sigma_mwm_decomposition`` / ``sigma_mwm_equal_props`` -- winsorized
  counterparts assembled from nine closed pieces.

All closed forms evaluate boundary products only when their coefficient
is nonzero, so zero trimming with an unbounded-but-integrable H endpoint
stays finite; genuinely divergent integrals raise DivergenceError.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, OrderingError
from .models import CompositeH, DistributionModel
from .moments import Mode, MomentSpec
from .quadrature import integrate

__all__ = [
    "CovMethod",
    "CovMatrix",
    "kernel_K",
    "int_I",
    "int_Ibar",
    "gamma_factor",
    "alpha",
    "sigma_alpha_form",
    "sigma_mtm_kernel_form",
    "sigma_mtm_closed",
    "sigma_mtm_equal_props",
    "sigma_mwm_decomposition",
    "sigma_mwm_equal_props",
    "sigma_pair",
    "cov_matrix",
]

_KERNEL_REL_TOL = 1e-8
_KERNEL_INNER_REL_TOL = 1e-9
_ALPHA_REL_TOL = 1e-9


class CovMethod(str, enum.Enum):
    ALPHA = "alpha"
    KERNEL = "kernel"
    CLOSED = "closed"
    EQUAL_PROPS = "equal-props"
    MWM_DECOMP = "mwm-decomposition"
    AUTO = "auto"


def kernel_K(v: float, w: float) -> float:
    """Covariance kernel of the uniform empirical process: min(v,w) - vw."""
    if not (0.0 <= v <= 1.0 and 0.0 <= w <= 1.0):
        raise DomainError(f"kernel arguments must lie in [0,1], got ({v}, {w})")
    return min(v, w) - v * w


def _int_H(ch: CompositeH, lo: float, hi: float) -> float:
    return integrate(ch.value, lo, hi)


def int_I(a: float, b: float, ch: CompositeH) -> float:
    """bH(b) - aH(a) - int_a^b H; equals int_a^b v H'(v) dv.

    Zero-coefficient endpoint products are dropped without evaluating H,
    so an integrable singularity at 0 does not poison the result.
    """
    if b == a:
        return 0.0
    value = -_int_H(ch, a, b)
    if b != 0.0:
        value += b * ch.value(b)
    if a != 0.0:
        value -= a * ch.value(a)
    return value


def int_Ibar(a: float, b: float, ch: CompositeH) -> float:
    """(1-b)H(b) - (1-a)H(a) + int_a^b H; equals int_a^b (1-v) H'(v) dv."""
    if b == a:
        return 0.0
    value = _int_H(ch, a, b)
    if b != 1.0:
        value += (1.0 - b) * ch.value(b)
    if a != 1.0:
        value -= (1.0 - a) * ch.value(a)
    return value


def gamma_factor(spec_i: MomentSpec, spec_j: MomentSpec) -> float:
    """Product of inverse retained-mass fractions for the pair."""
    return 1.0 / (spec_i.retained * spec_j.retained)


def alpha(u: float, spec: MomentSpec, ch: CompositeH) -> float:
    """Influence-style integrand whose pairwise product integrates to the
    covariance entry."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"alpha requires 0 < u < 1, got {u}")
    a, bb = spec.a, spec.b_bar
    if spec.mode is Mode.MTM:
        if u >= bb:
            return 0.0
        return int_Ibar(max(a, u), bb, ch) / (spec.retained * (1.0 - u))
    # winsorized: indicator-weighted atoms at the window edges
    psi = 0.0
    if u < bb:
        psi += int_Ibar(max(a, u), bb, ch)
    if a > 0.0 and a >= u:
        psi += a * (1.0 - a) * ch.deriv(a)
    if spec.b > 0.0 and bb >= u:
        psi += spec.b * spec.b * ch.deriv(bb)
    return psi / (1.0 - u)


def sigma_alpha_form(
    spec_i: MomentSpec,
    spec_j: MomentSpec,
    ch_i: CompositeH,
    ch_j: CompositeH,
) -> float:
    """Reference oracle: integral over (0,1) of alpha_i * alpha_j."""
    upper = min(spec_i.b_bar, spec_j.b_bar)
    kinks = [spec_i.a, spec_j.a, spec_i.b_bar, spec_j.b_bar]

    def integrand(u: float) -> float:
        return alpha(u, spec_i, ch_i) * alpha(u, spec_j, ch_j)

    return integrate(integrand, 0.0, upper, points=kinks, rel_tol=_ALPHA_REL_TOL)


def sigma_mtm_kernel_form(
    spec_i: MomentSpec,
    spec_j: MomentSpec,
    ch_i: CompositeH,
    ch_j: CompositeH,
) -> float:
    """Double-integral kernel route, adaptive tensor-product quadrature."""
    if spec_i.mode is not Mode.MTM or spec_j.mode is not Mode.MTM:
        raise DomainError("kernel form applies to trimmed-moment specs only")
    return gamma_factor(spec_i, spec_j) * _kernel_v11(spec_i, spec_j, ch_i, ch_j)


def _kernel_v11(
    spec_i: MomentSpec,
    spec_j: MomentSpec,
    ch_i: CompositeH,
    ch_j: CompositeH,
) -> float:
    aj, bbj = spec_j.a, spec_j.b_bar

    def outer(w: float) -> float:
        inner = integrate(
            lambda v: kernel_K(v, w) * ch_j.deriv(v),
            aj,
            bbj,
            points=[w],
            rel_tol=_KERNEL_INNER_REL_TOL,
        )
        return ch_i.deriv(w) * inner

    return integrate(
        outer, spec_i.a, spec_i.b_bar, points=[aj, bbj], rel_tol=_KERNEL_REL_TOL
    )


def _scenario_i_holds(spec_i: MomentSpec, spec_j: MomentSpec) -> bool:
    """Left-nested ordering: a_i <= a_j < 1-b_i <= 1-b_j."""
    return (
        spec_i.a <= spec_j.a < spec_i.b_bar
        and spec_i.b_bar <= spec_j.b_bar
    )


def _v11_closed(
    spec_i: MomentSpec,
    spec_j: MomentSpec,
    ch_i: CompositeH,
    ch_j: CompositeH,
) -> float:
    """Closed-form kernel double integral under the left-nested ordering.

    The tail cross term multiplies the bracket
    ``(1-b_i) H_i(1-b_i) - a_j H_i(a_j) - int H_i`` by ``int H_j`` over
    the non-overlap strip; the H_i(a_j) factor there follows from the
    integration-by-parts identity for int w H_i'(w) dw (a widespread
    transcription writes H_j(a_j) instead, which breaks the identity
    whenever the two transforms differ; see the regression tests).
    """
    ai, aj = spec_i.a, spec_j.a
    bbi, bbj = spec_i.b_bar, spec_j.b_bar
    bi, bj = spec_i.b, spec_j.b

    c_i = _int_H(ch_i, aj, bbi)
    c_j = _int_H(ch_j, aj, bbi)

    value = int_I(ai, aj, ch_i) * int_Ibar(aj, bbj, ch_j) if ai != aj else 0.0
    if bj != 0.0:
        value += bj * ch_j.value(bbj) * int_I(aj, bbi, ch_i)
    if aj != 0.0:
        value -= aj * ch_j.value(aj) * int_Ibar(aj, bbi, ch_i)
    if bi != 0.0:
        value -= bi * ch_i.value(bbi) * c_j
    value += integrate(lambda v: ch_i.value(v) * ch_j.value(v), aj, bbi)
    if aj != 0.0:
        value -= aj * ch_i.value(aj) * c_j
    value -= c_i * c_j
    if bbj != bbi:
        d_j = _int_H(ch_j, bbi, bbj)
        bracket = bbi * ch_i.value(bbi) - c_i
        if aj != 0.0:
            bracket -= aj * ch_i.value(aj)
        value += bracket * d_j
    return value


def _v11_any(
    spec_i: MomentSpec,
    spec_j: MomentSpec,
    ch_i: CompositeH,
    ch_j: CompositeH,
) -> float:
    """Kernel double integral by closed form where the ordering permits,
    quadrature otherwise.  Symmetric in the pair."""
    if _scenario_i_holds(spec_i, spec_j):
        return _v11_closed(spec_i, spec_j, ch_i, ch_j)
    if _scenario_i_holds(spec_j, spec_i):
        return _v11_closed(spec_j, spec_i, ch_j, ch_i)
    return _kernel_v11(spec_i, spec_j, ch_i, ch_j)


def sigma_mtm_closed(
    spec_i: MomentSpec,
    spec_j: MomentSpec,
    ch_i: CompositeH,
    ch_j: CompositeH,
) -> float:
    """Closed form under the left-nested trimming ordering (either
    orientation of the pair)."""
    if _scenario_i_holds(spec_i, spec_j):
        v11 = _v11_closed(spec_i, spec_j, ch_i, ch_j)
    elif _scenario_i_holds(spec_j, spec_i):
        v11 = _v11_closed(spec_j, spec_i, ch_j, ch_i)
    else:
        raise OrderingError(
            "closed form needs a_i <= a_j < 1-b_i <= 1-b_j (possibly after "
            "swapping the pair); use the kernel or alpha form instead"
        )
    return gamma_factor(spec_i, spec_j) * v11


def sigma_mtm_equal_props(
    spec_i: MomentSpec,
    spec_j: MomentSpec,
    ch_i: CompositeH,
    ch_j: CompositeH,
) -> float:
    """Fast path when both coordinates share the same proportions."""
    if spec_i.a != spec_j.a or spec_i.b != spec_j.b:
        raise OrderingError("equal-proportions form requires a_i=a_j and b_i=b_j")
    return gamma_factor(spec_i, spec_j) * _v11_equal_props(spec_i, ch_i, ch_j)


def _v11_equal_props(spec: MomentSpec, ch_i: CompositeH, ch_j: CompositeH) -> float:
    a, b, bb = spec.a, spec.b, spec.b_bar

    def winsor_functional(ch: CompositeH) -> float:
        value = _int_H(ch, a, bb)
        if a > 0.0:
            value += a * ch.value(a)
        if b > 0.0:
            value += b * ch.value(bb)
        return value

    value = integrate(lambda v: ch_i.value(v) * ch_j.value(v), a, bb)
    if a > 0.0:
        value += a * ch_i.value(a) * ch_j.value(a)
    if b > 0.0:
        value += b * ch_i.value(bb) * ch_j.value(bb)
    return value - winsor_functional(ch_i) * winsor_functional(ch_j)


def _winsor_tail(ch: CompositeH, a: float, bb: float, t_raw: float) -> float:
    """int_0^T (1-u)^{-2} * [int_{max(a,u)}^{bb} (1-v) H'(v) dv] du with the
    inner integral truncated to the window (it vanishes for u >= bb)."""
    if t_raw <= 0.0:
        return 0.0
    t = min(t_raw, bb)
    if t <= a:
        return t / (1.0 - t) * int_Ibar(a, bb, ch)
    value = int_I(a, t, ch)
    if t < bb:
        value += t / (1.0 - t) * int_Ibar(t, bb, ch)
    return value


def _ratio(m: float) -> float:
    return m / (1.0 - m)


def sigma_mwm_decomposition(
    spec_i: MomentSpec,
    spec_j: MomentSpec,
    ch_i: CompositeH,
    ch_j: CompositeH,
) -> float:
    """Winsorized covariance assembled from the nine closed pieces.

    The two pure-window x atom cross pieces use the same tail integral as
    their mirror images, truncated at the window end; the published
    general display of the upper-atom x window piece omits that
    truncation and is only exact for equal upper proportions.
    """
    if spec_i.mode is not Mode.MWM or spec_j.mode is not Mode.MWM:
        raise DomainError("winsorized decomposition requires MWM specs")
    ai, aj = spec_i.a, spec_j.a
    bi, bj = spec_i.b, spec_j.b
    bbi, bbj = spec_i.b_bar, spec_j.b_bar

    total = _v11_any(spec_i, spec_j, ch_i, ch_j)

    dh_ai = ch_i.deriv(ai) if ai > 0.0 else 0.0
    dh_aj = ch_j.deriv(aj) if aj > 0.0 else 0.0
    dh_bbi = ch_i.deriv(bbi) if bi > 0.0 else 0.0
    dh_bbj = ch_j.deriv(bbj) if bj > 0.0 else 0.0

    if aj > 0.0:  # V12: i-window x lower j-atom
        total += aj * (1.0 - aj) * dh_aj * _winsor_tail(ch_i, ai, bbi, aj)
    if bj > 0.0:  # V13: i-window x upper j-atom
        total += bj * bj * dh_bbj * _winsor_tail(ch_i, ai, bbi, bbj)
    if ai > 0.0:  # V21
        total += ai * (1.0 - ai) * dh_ai * _winsor_tail(ch_j, aj, bbj, ai)
    if bi > 0.0:  # V31
        total += bi * bi * dh_bbi * _winsor_tail(ch_j, aj, bbj, bbi)
    if ai > 0.0 and aj > 0.0:  # V22
        total += (
            ai * aj * (1.0 - ai) * (1.0 - aj) * dh_ai * dh_aj * _ratio(min(ai, aj))
        )
    if ai > 0.0 and bj > 0.0:  # V23
        total += ai * (1.0 - ai) * bj * bj * dh_ai * dh_bbj * _ratio(min(ai, bbj))
    if aj > 0.0 and bi > 0.0:  # V32
        total += aj * (1.0 - aj) * bi * bi * dh_aj * dh_bbi * _ratio(min(aj, bbi))
    if bi > 0.0 and bj > 0.0:  # V33
        total += bi * bi * bj * bj * dh_bbi * dh_bbj * _ratio(min(bbi, bbj))
    return total


def sigma_mwm_equal_props(
    spec_i: MomentSpec,
    spec_j: MomentSpec,
    ch_i: CompositeH,
    ch_j: CompositeH,
) -> float:
    """Winsorized covariance for equal proportions across the pair."""
    if spec_i.a != spec_j.a or spec_i.b != spec_j.b:
        raise OrderingError("equal-proportions form requires a_i=a_j and b_i=b_j")
    a, b, bb = spec_i.a, spec_i.b, spec_i.b_bar

    total = _v11_equal_props(spec_i, ch_i, ch_j)

    dh_a_i = ch_i.deriv(a) if a > 0.0 else 0.0
    dh_a_j = ch_j.deriv(a) if a > 0.0 else 0.0
    dh_b_i = ch_i.deriv(bb) if b > 0.0 else 0.0
    dh_b_j = ch_j.deriv(bb) if b > 0.0 else 0.0

    def lower_bracket(ch: CompositeH) -> float:
        value = _int_H(ch, a, bb) - (1.0 - a) * ch.value(a)
        if b > 0.0:
            value += b * ch.value(bb)
        return value

    def upper_bracket(ch: CompositeH) -> float:
        value = bb * ch.value(bb) - _int_H(ch, a, bb)
        if a > 0.0:
            value -= a * ch.value(a)
        return value

    if a > 0.0:
        total += a * a * (dh_a_j * lower_bracket(ch_i) + dh_a_i * lower_bracket(ch_j))
        total += a ** 3 * (1.0 - a) * dh_a_i * dh_a_j
    if b > 0.0:
        total += b * b * (dh_b_j * upper_bracket(ch_i) + dh_b_i * upper_bracket(ch_j))
        total += b ** 3 * (1.0 - b) * dh_b_i * dh_b_j
    if a > 0.0 and b > 0.0:
        total += a * a * b * b * (dh_a_i * dh_b_j + dh_a_j * dh_b_i)
    return total


@dataclass(frozen=True)
class CovMatrix:
    """Symmetric asymptotic variance-covariance matrix with the method
    used for each entry."""

    entries: np.ndarray
    methods: tuple[tuple[str, ...], ...]

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries).min())

    def __getitem__(self, idx):
        return self.entries[idx]


def sigma_pair(
    spec_i: MomentSpec,
    spec_j: MomentSpec,
    ch_i: CompositeH,
    ch_j: CompositeH,
    method: CovMethod = CovMethod.AUTO,
) -> tuple[float, str]:
    """One covariance entry plus the label of the route actually used."""
    if spec_i.mode is not spec_j.mode:
        raise DomainError("covariance entries require a single estimation mode")
    mode = spec_i.mode
    if method is CovMethod.AUTO:
        equal = spec_i.a == spec_j.a and spec_i.b == spec_j.b
        if mode is Mode.MTM:
            if equal:
                method = CovMethod.EQUAL_PROPS
            elif _scenario_i_holds(spec_i, spec_j) or _scenario_i_holds(
                spec_j, spec_i
            ):
                method = CovMethod.CLOSED
            else:
                method = CovMethod.KERNEL
        else:
            method = CovMethod.EQUAL_PROPS if equal else CovMethod.MWM_DECOMP

    if method is CovMethod.ALPHA:
        return sigma_alpha_form(spec_i, spec_j, ch_i, ch_j), method.value
    if mode is Mode.MTM:
        if method is CovMethod.KERNEL:
            return sigma_mtm_kernel_form(spec_i, spec_j, ch_i, ch_j), method.value
        if method is CovMethod.CLOSED:
            return sigma_mtm_closed(spec_i, spec_j, ch_i, ch_j), method.value
        if method is CovMethod.EQUAL_PROPS:
            return sigma_mtm_equal_props(spec_i, spec_j, ch_i, ch_j), method.value
        raise DomainError(f"method {method.value} not applicable to trimmed mode")
    if method is CovMethod.MWM_DECOMP:
        return sigma_mwm_decomposition(spec_i, spec_j, ch_i, ch_j), method.value
    if method is CovMethod.EQUAL_PROPS:
        return sigma_mwm_equal_props(spec_i, spec_j, ch_i, ch_j), method.value
    raise DomainError(f"method {method.value} not applicable to winsorized mode")


def cov_matrix(
    specs: list[MomentSpec],
    model: DistributionModel,
    method: CovMethod = CovMethod.AUTO,
) -> CovMatrix:
    """Full k x k matrix, symmetrized as (M + M^T)/2 after assembly."""
    k = len(specs)
    if k == 0:
        raise DomainError("at least one moment spec required")
    if any(s.mode is not specs[0].mode for s in specs):
        raise DomainError("all specs must share one mode")
    chs = [CompositeH(model, s.transform) for s in specs]
    entries = np.zeros((k, k))
    labels = [["" for _ in range(k)] for _ in range(k)]
    for i in range(k):
        for j in range(i, k):
            try:
                value, used = sigma_pair(specs[i], specs[j], chs[i], chs[j], method)
            except Exception as exc:
                raise type(exc)(f"entry ({i}, {j}): {exc}") from exc
            entries[i, j] = entries[j, i] = value
            labels[i][j] = labels[j][i] = used
    entries = 0.5 * (entries + entries.T)
    return CovMatrix(entries, tuple(tuple(row) for row in labels))

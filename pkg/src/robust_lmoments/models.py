"""Distribution families and h-transforms.

Everything downstream works with the composite function H(u) = h(F^-1(u))
on the unit interval and its derivative H'(u) = h'(F^-1(u)) * q(u), where
q(u) = d/du F^-1(u) is the quantile density.  Quantile densities are coded
analytically per family; finite differences are reserved for the tests.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

from scipy.special import ndtr, ndtri

from .errors import DomainError, SingularityError, UnboundedQuantileError

__all__ = [
    "DistributionModel",
    "Uniform",
    "Exponential",
    "Pareto",
    "Lognormal",
    "Normal",
    "ModelTemplate",
    "HTransform",
    "Identity",
    "Power",
    "Log",
    "Shifted",
    "CompositeH",
    "parse_model",
    "parse_model_template",
    "parse_transform",
    "register_transform",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _check_unit(u: float) -> None:
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {u}")


class DistributionModel:
    """Base class for parametric families.

    Subclasses are immutable dataclasses exposing the quantile function,
    its derivative, and the cdf.  ``params`` is the parameter vector in
    declaration order; ``bounds`` gives open-domain limits per parameter
    used by the fitting line search.
    """

    family: str = "abstract"

    @property
    def params(self) -> tuple[float, ...]:
        raise NotImplementedError

    def with_params(self, params: tuple[float, ...]) -> "DistributionModel":
        return type(self)(*params)

    @staticmethod
    def param_bounds() -> tuple[tuple[float, float], ...]:
        raise NotImplementedError

    def quantile(self, u: float) -> float:
        raise NotImplementedError

    def quantile_density(self, u: float) -> float:
        raise NotImplementedError

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    # (lower bounded, upper bounded) support flags
    bounded_below: bool = False
    bounded_above: bool = False

    def _check_endpoint(self, u: float) -> None:
        _check_unit(u)
        if u == 0.0 and not self.bounded_below:
            raise UnboundedQuantileError(
                f"{self.family}: quantile at 0 is -infinity"
            )
        if u == 1.0 and not self.bounded_above:
            raise UnboundedQuantileError(
                f"{self.family}: quantile at 1 is +infinity"
            )

    def __str__(self) -> str:
        inner = ",".join(f"{p:g}" for p in self.params)
        return f"{self.family}({inner})"


@dataclass(frozen=True)
class Uniform(DistributionModel):
    lo: float = 0.0
    hi: float = 1.0

    family = "uniform"
    bounded_below = True
    bounded_above = True

    def __post_init__(self):
        if not self.hi > self.lo:
            raise DomainError(f"uniform requires hi > lo, got ({self.lo}, {self.hi})")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.lo, self.hi)

    @staticmethod
    def param_bounds():
        return ((-math.inf, math.inf), (-math.inf, math.inf))

    def quantile(self, u: float) -> float:
        self._check_endpoint(u)
        return self.lo + (self.hi - self.lo) * u

    def quantile_density(self, u: float) -> float:
        _check_unit(u)
        return self.hi - self.lo

    def cdf(self, x: float) -> float:
        if x <= self.lo:
            return 0.0
        if x >= self.hi:
            return 1.0
        return (x - self.lo) / (self.hi - self.lo)


@dataclass(frozen=True)
class Exponential(DistributionModel):
    scale: float = 1.0

    family = "exponential"
    bounded_below = True

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"exponential scale must be > 0, got {self.scale}")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.scale,)

    @staticmethod
    def param_bounds():
        return ((0.0, math.inf),)

    def quantile(self, u: float) -> float:
        self._check_endpoint(u)
        return -self.scale * math.log1p(-u)

    def quantile_density(self, u: float) -> float:
        _check_unit(u)
        if u == 1.0:
            raise SingularityError("exponential quantile density diverges at u=1")
        return self.scale / (1.0 - u)

    def cdf(self, x: float) -> float:
        if x <= 0.0:
            return 0.0
        return -math.expm1(-x / self.scale)


@dataclass(frozen=True)
class Pareto(DistributionModel):
    """Classical Pareto: F(x) = 1 - (xm / x)^shape for x >= xm."""

    shape: float = 2.0
    xm: float = 1.0

    family = "pareto"
    bounded_below = True

    def __post_init__(self):
        if not self.shape > 0 or not self.xm > 0:
            raise DomainError(
                f"pareto requires shape > 0 and xm > 0, got ({self.shape}, {self.xm})"
            )

    @property
    def params(self) -> tuple[float, ...]:
        return (self.shape, self.xm)

    @staticmethod
    def param_bounds():
        return ((0.0, math.inf), (0.0, math.inf))

    def quantile(self, u: float) -> float:
        self._check_endpoint(u)
        return self.xm * (1.0 - u) ** (-1.0 / self.shape)

    def quantile_density(self, u: float) -> float:
        _check_unit(u)
        if u == 1.0:
            raise SingularityError("pareto quantile density diverges at u=1")
        return (self.xm / self.shape) * (1.0 - u) ** (-1.0 / self.shape - 1.0)

    def cdf(self, x: float) -> float:
        if x <= self.xm:
            return 0.0
        return 1.0 - (self.xm / x) ** self.shape


@dataclass(frozen=True)
class Lognormal(DistributionModel):
    mu: float = 0.0
    sigma: float = 1.0

    family = "lognormal"
    bounded_below = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"lognormal sigma must be > 0, got {self.sigma}")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.mu, self.sigma)

    @staticmethod
    def param_bounds():
        return ((-math.inf, math.inf), (0.0, math.inf))

    def quantile(self, u: float) -> float:
        self._check_endpoint(u)
        if u == 0.0:
            return 0.0
        return math.exp(self.mu + self.sigma * float(ndtri(u)))

    def quantile_density(self, u: float) -> float:
        _check_unit(u)
        if u in (0.0, 1.0):
            raise SingularityError("lognormal quantile density diverges at u in {0,1}")
        z = float(ndtri(u))
        phi = math.exp(-0.5 * z * z) / _SQRT_2PI
        return self.sigma * math.exp(self.mu + self.sigma * z) / phi

    def cdf(self, x: float) -> float:
        if x <= 0.0:
            return 0.0
        return float(ndtr((math.log(x) - self.mu) / self.sigma))


@dataclass(frozen=True)
class Normal(DistributionModel):
    mu: float = 0.0
    sigma: float = 1.0

    family = "normal"

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"normal sigma must be > 0, got {self.sigma}")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.mu, self.sigma)

    @staticmethod
    def param_bounds():
        return ((-math.inf, math.inf), (0.0, math.inf))

    def quantile(self, u: float) -> float:
        self._check_endpoint(u)
        return self.mu + self.sigma * float(ndtri(u))

    def quantile_density(self, u: float) -> float:
        _check_unit(u)
        if u in (0.0, 1.0):
            raise SingularityError("normal quantile density diverges at u in {0,1}")
        z = float(ndtri(u))
        phi = math.exp(-0.5 * z * z) / _SQRT_2PI
        return self.sigma / phi

    def cdf(self, x: float) -> float:
        return float(ndtr((x - self.mu) / self.sigma))


_FAMILIES: dict[str, type[DistributionModel]] = {
    "uniform": Uniform,
    "exponential": Exponential,
    "pareto": Pareto,
    "lognormal": Lognormal,
    "normal": Normal,
}

_SPEC_RE = re.compile(r"^\s*([a-zA-Z_]+)\s*\(\s*([^)]*)\s*\)\s*$")


def _parse_call(text: str) -> tuple[str, list[str]]:
    m = _SPEC_RE.match(text)
    if m is None:
        raise DomainError(f"malformed specification string: {text!r}")
    name = m.group(1).lower()
    args = [a.strip() for a in m.group(2).split(",")] if m.group(2).strip() else []
    return name, args


def parse_model(text: str) -> DistributionModel:
    """Parse ``"family(p1,p2)"`` into a distribution, case-insensitive."""
    name, args = _parse_call(text)
    cls = _FAMILIES.get(name)
    if cls is None:
        raise DomainError(
            f"unknown family {name!r}; known: {sorted(_FAMILIES)}"
        )
    try:
        values = [float(a) for a in args]
    except ValueError as exc:
        raise DomainError(f"non-numeric parameter in {text!r}") from exc
    return cls(*values)


@dataclass(frozen=True)
class ModelTemplate:
    """A family with some parameters fixed and the rest free for fitting.

    ``values[i]`` is None for a free parameter.  ``bind`` fills the free
    slots from a flat vector in declaration order.
    """

    cls: type[DistributionModel]
    values: tuple[float | None, ...]

    @property
    def free_count(self) -> int:
        return sum(v is None for v in self.values)

    @property
    def free_indices(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.values) if v is None)

    def free_bounds(self) -> tuple[tuple[float, float], ...]:
        all_bounds = self.cls.param_bounds()
        return tuple(all_bounds[i] for i in self.free_indices)

    def bind(self, theta) -> DistributionModel:
        theta = list(theta)
        if len(theta) != self.free_count:
            raise DomainError(
                f"expected {self.free_count} free parameters, got {len(theta)}"
            )
        filled = [t if v is None else v for v, t in _zip_fill(self.values, theta)]
        return self.cls(*filled)


def _zip_fill(values, theta):
    it = iter(theta)
    for v in values:
        yield v, (next(it) if v is None else None)


def parse_model_template(text: str) -> ModelTemplate:
    """Parse ``"family(p1,?)"`` where ``?`` marks a free parameter.

    A plain numeric spec yields a template with every parameter free's
    complement: all-numeric means all parameters are treated as initial
    values but still fixed; use ``?`` to mark what the fit should solve
    for.  ``"exponential(?)"`` frees the scale.
    """
    name, args = _parse_call(text)
    cls = _FAMILIES.get(name)
    if cls is None:
        raise DomainError(f"unknown family {name!r}; known: {sorted(_FAMILIES)}")
    values: list[float | None] = []
    for a in args:
        if a == "?":
            values.append(None)
        else:
            try:
                values.append(float(a))
            except ValueError as exc:
                raise DomainError(f"non-numeric parameter in {text!r}") from exc
    return ModelTemplate(cls, tuple(values))


class HTransform:
    """Base class for the per-coordinate transform h with derivative."""

    kind: str = "abstract"

    def value(self, x: float) -> float:
        raise NotImplementedError

    def deriv(self, x: float) -> float:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.kind


@dataclass(frozen=True)
class Identity(HTransform):
    kind = "identity"

    def value(self, x: float) -> float:
        return x

    def deriv(self, x: float) -> float:
        return 1.0


@dataclass(frozen=True)
class Power(HTransform):
    exponent: float = 2.0

    kind = "power"

    def __post_init__(self):
        if self.exponent < 1:
            raise DomainError(f"power exponent must be >= 1, got {self.exponent}")

    def value(self, x: float) -> float:
        if x < 0 and self.exponent != int(self.exponent):
            raise DomainError(f"power({self.exponent}) undefined for x={x} < 0")
        return x ** self.exponent

    def deriv(self, x: float) -> float:
        if x < 0 and self.exponent != int(self.exponent):
            raise DomainError(f"power({self.exponent}) undefined for x={x} < 0")
        return self.exponent * x ** (self.exponent - 1.0)

    def __str__(self) -> str:
        return f"power({self.exponent:g})"


@dataclass(frozen=True)
class Log(HTransform):
    kind = "log"

    def value(self, x: float) -> float:
        if x <= 0:
            if x == 0:
                return -math.inf
            raise DomainError(f"log transform undefined for x={x} < 0")
        return math.log(x)

    def deriv(self, x: float) -> float:
        if x <= 0:
            raise DomainError(f"log derivative undefined for x={x} <= 0")
        return 1.0 / x


@dataclass(frozen=True)
class Shifted(HTransform):
    offset: float = 0.0

    kind = "shifted"

    def value(self, x: float) -> float:
        return x + self.offset

    def deriv(self, x: float) -> float:
        return 1.0

    def __str__(self) -> str:
        return f"shifted({self.offset:g})"


@dataclass(frozen=True)
class CustomTransform(HTransform):
    """Transform registered at runtime from paired value/derivative callbacks."""

    name: str
    value_fn: Callable[[float], float]
    deriv_fn: Callable[[float], float]

    kind = "custom"

    def value(self, x: float) -> float:
        return self.value_fn(x)

    def deriv(self, x: float) -> float:
        return self.deriv_fn(x)

    def __str__(self) -> str:
        return self.name


_CUSTOM_TRANSFORMS: dict[str, CustomTransform] = {}


def register_transform(
    name: str,
    value: Callable[[float], float],
    deriv: Callable[[float], float],
) -> CustomTransform:
    """Register a custom h-transform addressable by name in parse_transform."""
    t = CustomTransform(name.lower(), value, deriv)
    _CUSTOM_TRANSFORMS[t.name] = t
    return t


def parse_transform(text: str) -> HTransform:
    """Parse ``"identity"``, ``"power(2)"``, ``"log"``, ``"shifted(1.5)"``
    or a registered custom name; case-insensitive."""
    text = text.strip()
    lowered = text.lower()
    if lowered in _CUSTOM_TRANSFORMS:
        return _CUSTOM_TRANSFORMS[lowered]
    if "(" not in lowered:
        if lowered == "identity":
            return Identity()
        if lowered == "log":
            return Log()
        raise DomainError(f"unknown transform {text!r}")
    name, args = _parse_call(lowered)
    try:
        values = [float(a) for a in args]
    except ValueError as exc:
        raise DomainError(f"non-numeric argument in transform {text!r}") from exc
    if name == "power":
        return Power(*values)
    if name == "shifted":
        return Shifted(*values)
    if name == "identity" and not values:
        return Identity()
    if name == "log" and not values:
        return Log()
    raise DomainError(f"unknown transform {text!r}")


@dataclass(frozen=True)
class CompositeH:
    """The composite H(u) = h(F^-1(u)) with chain-rule derivative."""

    model: DistributionModel
    transform: HTransform

    def value(self, u: float) -> float:
        return self.transform.value(self.model.quantile(u))

    def deriv(self, u: float) -> float:
        x = self.model.quantile(u)
        return self.transform.deriv(x) * self.model.quantile_density(u)

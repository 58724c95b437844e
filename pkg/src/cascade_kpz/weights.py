"""Laws of the mean-one cascade weight W.

Two families are supported: a log-normal ``W = exp(sigma Z - sigma^2/2)``
and a two-point law taking value ``a`` with probability ``p`` and ``b``
otherwise.  Each exposes its moments ``E[W^s]``, ``E[W log W]`` and a
deterministic map from a pair of uniforms to a draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigError, DomainError
from .grammar import number, parse_call

LN2 = math.log(2.0)
MEAN_TOL = 1e-12
PHI_GRID_POINTS = 1001


@dataclass(frozen=True)
class LogNormal:
    sigma2: float
    d: int = 1

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise DomainError(f"sigma2 must be positive and finite, got {self.sigma2}")
        if self.d < 1:
            raise DomainError(f"dimension must be >= 1, got {self.d}")

    needs_pair = True

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def log2_moment(self, s):
        return self.sigma2 * np.multiply(s, np.subtract(s, 1.0)) / (2.0 * LN2)

    def moment(self, s):
        return np.exp(self.sigma2 * np.multiply(s, np.subtract(s, 1.0)) / 2.0)

    def entropy_mean(self) -> float:
        return self.sigma2 / 2.0

    def log2_sample(self, u1, u2):
        # Box-Muller on the pair, then log2 of exp(sigma z - sigma^2/2).
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        return (self.sigma * z - 0.5 * self.sigma2) / LN2

    def spec(self) -> str:
        return f"lognormal(sigma2={self.sigma2!r})"


@dataclass(frozen=True)
class TwoPoint:
    a: float
    b: float
    p: float
    d: int = 1

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"two-point values must be positive, got a={self.a}, b={self.b}")
        if not 0 < self.p < 1:
            raise DomainError(f"p must lie in (0, 1), got {self.p}")
        if abs(self.p * self.a + (1 - self.p) * self.b - 1.0) > MEAN_TOL:
            raise DomainError(
                f"two-point law must have mean 1: p*a + (1-p)*b = {self.p * self.a + (1 - self.p) * self.b!r}"
            )
        if self.d < 1:
            raise DomainError(f"dimension must be >= 1, got {self.d}")

    needs_pair = False

    def moment(self, s):
        return self.p * np.power(self.a, s) + (1 - self.p) * np.power(self.b, s)

    def log2_moment(self, s):
        return np.log2(self.moment(s))

    def entropy_mean(self) -> float:
        return self.p * self.a * math.log(self.a) + (1 - self.p) * self.b * math.log(self.b)

    def log2_sample(self, u1, u2=None):
        return np.where(np.asarray(u1) < self.p, math.log2(self.a), math.log2(self.b))

    def spec(self) -> str:
        return f"twopoint(a={self.a!r},b={self.b!r},p={self.p!r})"


WeightModel = Union[LogNormal, TwoPoint]


@dataclass
class ValidityReport:
    mean_ok: bool
    nondegenerate: bool
    phi_monotone: bool
    neg_moments_ok: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.mean_ok and self.nondegenerate and self.phi_monotone and self.neg_moments_ok

    def failures(self) -> list[str]:
        names = ("mean_ok", "nondegenerate", "phi_monotone", "neg_moments_ok")
        return [n for n in names if not getattr(self, n)]

    def to_dict(self) -> dict:
        return {
            "mean_ok": self.mean_ok,
            "nondegenerate": self.nondegenerate,
            "phi_monotone": self.phi_monotone,
            "neg_moments_ok": self.neg_moments_ok,
            "diagnostics": dict(self.diagnostics),
        }


def moment(model: WeightModel, s):
    """E[W^s]."""
    out = model.moment(s)
    return float(out) if np.ndim(out) == 0 else out


def entropy_mean(model: WeightModel) -> float:
    """E[W log W] (natural logarithm)."""
    return model.entropy_mean()


def validate(model: WeightModel) -> ValidityReport:
    """Check the hypotheses a cascade experiment relies on.

    The report carries failures instead of raising; callers that need a
    valid model reject on any false flag.
    """
    mean = moment(model, 1.0)
    ewlogw = entropy_mean(model)
    grid = np.linspace(0.0, 1.0, PHI_GRID_POINTS)
    phi = grid - model.log2_moment(grid)
    steps = np.diff(phi)
    neg = [moment(model, -s) for s in (0.5, 0.999)]
    diagnostics = {
        "mean": mean,
        "E[W log W]": ewlogw,
        "d": model.d,
        "min_phi_step": float(steps.min()),
        "phi(0)": float(phi[0]),
        "phi(1)": float(phi[-1]),
        "E[W^-0.5]": neg[0],
        "E[W^-0.999]": neg[1],
    }
    if isinstance(model, LogNormal):
        diagnostics["sigma2_max_nondegenerate"] = 2.0 * model.d
        diagnostics["sigma2_max_monotone"] = 2.0 * LN2
    return ValidityReport(
        mean_ok=abs(mean - 1.0) <= MEAN_TOL,
        nondegenerate=ewlogw < model.d,
        phi_monotone=bool(np.all(steps > 0)),
        # Both families have strictly positive support bounded away from 0.
        neg_moments_ok=all(math.isfinite(v) for v in neg),
        diagnostics=diagnostics,
    )


def sample(model: WeightModel, u) -> float:
    """Map a pair of uniforms in (0, 1) to one draw of W."""
    u1, u2 = (float(v) for v in u)
    for v in (u1, u2):
        if not 0.0 < v < 1.0:
            raise DomainError(f"uniform {v!r} must lie strictly inside (0, 1)")
    return float(np.exp2(model.log2_sample(u1, u2)))


def with_dimension(model: WeightModel, d: int) -> WeightModel:
    if isinstance(model, LogNormal):
        return LogNormal(model.sigma2, d)
    return TwoPoint(model.a, model.b, model.p, d)


def parse_weight(text: str, d: int, field: str | None = "weight") -> WeightModel:
    """Parse ``lognormal(sigma2=..)`` or ``twopoint(a=..,b=..,p=..)``."""
    call = parse_call(text, field)
    expected = {"lognormal": ("sigma2",), "twopoint": ("a", "b", "p")}.get(call.name)
    if expected is None:
        raise ConfigError(f"unknown weight law {call.name!r}", field=field)
    if call.args or set(call.kwargs) != set(expected):
        raise ConfigError(f"{call.name} takes exactly the keywords {', '.join(expected)}", field=field)
    values = {k: number(call.kwargs[k], k, field) for k in expected}
    try:
        if call.name == "lognormal":
            return LogNormal(values["sigma2"], d)
        return TwoPoint(values["a"], values["b"], values["p"], d)
    except DomainError as exc:
        raise ConfigError(str(exc), field=field) from exc

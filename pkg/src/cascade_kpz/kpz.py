"""Structure exponent, the KPZ map between Lebesgue and cascade dimensions,
the moment bound for cube masses and the end-to-end experiment.

With ``phi(s) = s - log2 E[W^s]`` a set of Lebesgue dimension ``zeta0``
has cascade dimension ``zeta`` solving ``phi(zeta) = zeta0``, that is
``2^zeta0 = 2^zeta / E[W^zeta]``.

Under ``refinement="cube"`` a depth-n cube carries n weights instead of
n*d, so the log-moment term is scaled by ``1/d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cascade import REFINEMENTS, CascadeMeasure, batch_log2_mass, truncated_log2_moment
from .dimension import CascadeFamily, DimensionConfig, DimensionEstimate, LebesgueMeasure, estimate_dimension
from .dyadic import DyadicAddress
from .errors import DomainError, PreconditionError
from .hashing import HASH_VERSION, derive_seeds
from .weights import PHI_GRID_POINTS, ValidityReport, WeightModel, validate

INVERSE_TOL = 1e-10


def _fraction(model: WeightModel, refinement: str) -> float:
    if refinement not in REFINEMENTS:
        raise DomainError(f"refinement must be one of {REFINEMENTS}, got {refinement!r}")
    return 1.0 if refinement == "axis" else 1.0 / model.d


def phi(model: WeightModel, s, refinement: str = "axis"):
    """s - log2 E[W^s] (log-moment scaled by 1/d for the cube refinement)."""
    out = np.asarray(s, dtype=np.float64) - _fraction(model, refinement) * model.log2_moment(s)
    return float(out) if np.ndim(out) == 0 else out


def phi_is_monotone(model: WeightModel, refinement: str = "axis") -> bool:
    grid = np.linspace(0.0, 1.0, PHI_GRID_POINTS)
    return bool(np.all(np.diff(phi(model, grid, refinement)) > 0))


def phi_inverse(model: WeightModel, zeta0: float, refinement: str = "axis",
                tol: float = INVERSE_TOL) -> float:
    """The zeta in [0, 1] with phi(zeta) = zeta0, by bisection."""
    zeta0 = float(zeta0)
    if not 0.0 <= zeta0 <= 1.0:
        raise DomainError(f"zeta0 must lie in [0, 1], got {zeta0}")
    if not phi_is_monotone(model, refinement):
        raise PreconditionError(f"phi is not increasing on [0, 1] for {model.spec()}")
    if zeta0 in (0.0, 1.0):
        return zeta0
    if not np.any(model.log2_moment(np.linspace(0.0, 1.0, PHI_GRID_POINTS))):
        return zeta0  # W = 1: phi is the identity
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        value = phi(model, mid, refinement)
        if value == zeta0:
            return mid
        if value < zeta0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- moment bound -------------------------------------------------------------

@dataclass
class BoundCheck:
    s: float
    mean: float
    stderr: float
    bound: float
    expected: float
    passed: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def verify_mass_bound(c: CascadeMeasure, depth: int, s_list, trials: int,
                      address: DyadicAddress | None = None, tail_extra: int = 0) -> list[BoundCheck]:
    """Monte Carlo E[mu(A)^s] over ``trials`` seeds against |A|^phi(s).

    ``A`` defaults to the depth-``depth`` cube at the origin; cubes at one
    depth are exchangeable.  The mass is resolved ``tail_extra`` levels
    below ``A``.  ``expected`` is the exact mean for ``tail_extra=0`` and
    an upper bound otherwise.
    """
    model = c.model
    d = model.d
    report = validate(model)
    if not report.ok:
        raise PreconditionError(f"weight model {model.spec()} fails validation: {report.failures()}")
    s_list = [float(s) for s in s_list]
    for s in s_list:
        if not 0.0 <= s <= 1.0:
            raise DomainError(f"s must lie in [0, 1], got {s}")
    if address is None:
        address = DyadicAddress.from_coords(d, depth, [0] * d)
    elif address.depth != depth or address.dim != d:
        raise DomainError(f"address {address} is not a depth-{depth} cube of dimension {d}")
    seeds = derive_seeds(c.seed, trials)
    log2m = batch_log2_mass(model, seeds, address, depth + tail_extra, c.refinement)
    out = []
    for s in s_list:
        values = np.exp2(s * log2m)
        mean = float(values.mean())
        se = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
        bound = 2.0 ** (-depth * d * phi(model, s, c.refinement))
        expected = 2.0 ** truncated_log2_moment(model, depth, s, c.refinement)
        passed = mean <= bound * (1.0 + 3.0 * se / mean)
        out.append(BoundCheck(s, mean, se, bound, expected, bool(passed)))
    return out


# -- end-to-end experiment ----------------------------------------------------

@dataclass
class KpzReport:
    model: WeightModel
    set_label: str
    zeta0: float
    zeta0_source: str
    zeta_predicted: float
    zeta_measured: float
    stderr: float
    validity: ValidityReport
    tolerance: float
    provenance: dict = field(default_factory=dict)
    estimate: DimensionEstimate | None = field(default=None, repr=False)
    lebesgue: DimensionEstimate | None = field(default=None, repr=False)

    @property
    def discrepancy(self) -> float:
        return abs(self.zeta_measured - self.zeta_predicted)

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.tolerance

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"zeta0={self.zeta0:.5f} predicted={self.zeta_predicted:.5f} "
                f"measured={self.zeta_measured:.5f}±{self.stderr:.5f} {verdict}({self.tolerance:g})")

    def to_json(self) -> dict:
        return {
            "model": self.model.spec(),
            "set": self.set_label,
            "zeta0": self.zeta0,
            "zeta_predicted": self.zeta_predicted,
            "zeta_measured": self.zeta_measured,
            "stderr": self.stderr,
            "discrepancy": self.discrepancy,
            "validity": self.validity.to_dict(),
            "provenance": dict(self.provenance, zeta0_source=self.zeta0_source),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def kpz_experiment(model: WeightModel, o, cfg: DimensionConfig | None = None,
                   tolerance: float = 0.05, refinement: str = "axis",
                   tail_extra: int = 0, use_analytic: bool = True) -> KpzReport:
    """Predict the cascade dimension of ``o`` from its Lebesgue dimension and measure it.

    ``zeta0`` is the set's analytic dimension when it has one (and
    ``use_analytic``), otherwise a Lebesgue estimate with the same ``cfg``.
    """
    cfg = cfg or DimensionConfig()
    validity = validate(model)
    if not validity.ok:
        raise PreconditionError(f"weight model {model.spec()} fails validation: {validity.failures()}")
    if model.d != o.dim:
        raise DomainError(f"model dimension {model.d} does not match set dimension {o.dim}")
    lebesgue = None
    if use_analytic and o.analytic_zeta0 is not None:
        zeta0, source = float(o.analytic_zeta0), "analytic"
    else:
        lebesgue = estimate_dimension(LebesgueMeasure(o.dim), o, cfg)
        zeta0, source = lebesgue.zeta_hat, "lebesgue_estimate"
    predicted = phi_inverse(model, zeta0, refinement)
    family = CascadeFamily(model, refinement, tail_extra)
    measured = estimate_dimension(family, o, cfg)
    provenance = {
        "measure": family.label(),
        "refinement": refinement,
        "tail_extra": tail_extra,
        "n_min": cfg.n_min,
        "n_max": cfg.n_max,
        "s_grid": list(cfg.s_grid),
        "master_seed": cfg.master_seed,
        "seeds": [s for s, _ in measured.per_seed],
        "hash_version": HASH_VERSION,
    }
    return KpzReport(
        model=model,
        set_label=o.spec(),
        zeta0=zeta0,
        zeta0_source=source,
        zeta_predicted=predicted,
        zeta_measured=measured.zeta_hat,
        stderr=measured.stderr,
        validity=validity,
        tolerance=tolerance,
        provenance=provenance,
        estimate=measured,
        lebesgue=lebesgue,
    )

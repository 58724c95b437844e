"""Multiplicative cascade measures on dyadic cubes and the KPZ dimension relation."""

__version__ = "0.1.0"

from .cascade import CascadeMeasure, MassEstimate, mass, node_weight, slab_mass, total_mass
from .dimension import (
    CascadeFamily,
    CascadeOracle,
    DimensionConfig,
    DimensionEstimate,
    LebesgueMeasure,
    estimate_dimension,
    partition_sum,
)
from .dyadic import DyadicAddress, address_of, children, dyadic_ball
from .energy import EnergyEstimate, energy_growth_profile, s_energy, sample_natural_measure
from .errors import (
    CascadeError,
    ConfigError,
    ContractError,
    DomainError,
    EstimationError,
    PreconditionError,
    ReplayError,
    ResourceError,
)
from .hashing import HASH_VERSION
from .kpz import KpzReport, kpz_experiment, phi, phi_inverse, verify_mass_bound
from .sets import AxisSlice, Cover, DyadicCantor, FiniteUnion, FullCube, Singleton, parse_set
from .weights import LogNormal, TwoPoint, ValidityReport, parse_weight, validate

__all__ = [
    "__version__",
    "CascadeMeasure",
    "MassEstimate",
    "mass",
    "node_weight",
    "slab_mass",
    "total_mass",
    "CascadeFamily",
    "CascadeOracle",
    "DimensionConfig",
    "DimensionEstimate",
    "LebesgueMeasure",
    "estimate_dimension",
    "partition_sum",
    "DyadicAddress",
    "address_of",
    "children",
    "dyadic_ball",
    "EnergyEstimate",
    "energy_growth_profile",
    "s_energy",
    "sample_natural_measure",
    "CascadeError",
    "ConfigError",
    "ContractError",
    "DomainError",
    "EstimationError",
    "PreconditionError",
    "ReplayError",
    "ResourceError",
    "HASH_VERSION",
    "KpzReport",
    "kpz_experiment",
    "phi",
    "phi_inverse",
    "verify_mass_bound",
    "AxisSlice",
    "Cover",
    "DyadicCantor",
    "FiniteUnion",
    "FullCube",
    "Singleton",
    "parse_set",
    "LogNormal",
    "TwoPoint",
    "ValidityReport",
    "parse_weight",
    "validate",
]

"""
Co-simulation units: the stepping contract and the reference office buildings.
"""
from flexhub.units.buildings import UNIT_FACTORIES, make_medium_office, make_small_office
from flexhub.units.contract import CoSimUnit, UnitMetadata, VariableSpec, validate_metadata

__all__ = [
    "CoSimUnit",
    "UnitMetadata",
    "VariableSpec",
    "UNIT_FACTORIES",
    "make_small_office",
    "make_medium_office",
    "validate_metadata",
]

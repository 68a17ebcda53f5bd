"""Local maximal operators, Whitney-type coverings and local weight classes on proper open sets of R^n."""
__version__ = "0.1.0"

from .geometry import (
    Cube,
    Domain,
    DomainError,
    FamilyParams,
    box_annulus,
    distance_to_complement,
    half_space_clip,
    in_family,
    mask_domain,
    open_box,
    punctured_square,
    rasterize,
)
from .fields import ScalarField, constant_field, dual_weight, power_weight
from .maximal import MaximalRequest, evaluate, maximal, pointwise_compare
from .coverings import build_whitney, check_whitney, cloud, cz_select, whitney_neighbors

__all__ = [
    "Cube",
    "Domain",
    "DomainError",
    "FamilyParams",
    "box_annulus",
    "distance_to_complement",
    "half_space_clip",
    "in_family",
    "mask_domain",
    "open_box",
    "punctured_square",
    "rasterize",
    "ScalarField",
    "constant_field",
    "dual_weight",
    "power_weight",
    "MaximalRequest",
    "evaluate",
    "maximal",
    "pointwise_compare",
    "build_whitney",
    "check_whitney",
    "cloud",
    "cz_select",
    "whitney_neighbors",
]

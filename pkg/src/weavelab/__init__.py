"""Weaving knots, determinant density and hyperbolic volume bounds.

Submodules:

* ``diagrams``: link diagrams, braid and grid closures, Tait graphs;
* ``spanning``: spanning-tree counts and knot determinants;
* ``hypgeom``: Lobachevsky function, polyhedral volumes, volume bounds;
* ``anglestruct``: angle structures on the weaving-knot-plus-axis triangulation;
* ``density``: batch experiments and their output writers;
* ``cli``: the ``weavelab`` command.
"""

from .errors import ConstructionError, DomainError, NumericError, ParameterError, RefusalError, WeaveError
from .hypgeom import CATALAN, V3, V8, lobachevsky

__version__ = "0.1.0"

__all__ = [
    "WeaveError",
    "ParameterError",
    "RefusalError",
    "DomainError",
    "NumericError",
    "ConstructionError",
    "lobachevsky",
    "V3",
    "V8",
    "CATALAN",
    "__version__",
]

"""Spectral triples on twisted crossed products by discrete abelian groups.

Submodules are imported on demand; importing the package itself stays
free of numerical dependencies.
"""

__version__ = "0.1.0"

__all__ = [
    "groups",
    "twist",
    "algebra",
    "length",
    "triple",
    "order",
    "regularity",
    "coverings",
    "torus",
    "cli",
]

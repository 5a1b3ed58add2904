"""qsov: exact verification of separated-variable operator constructions
for quantum integrable lattice models built from trigonometric R-matrices."""

__version__ = "0.1.0"

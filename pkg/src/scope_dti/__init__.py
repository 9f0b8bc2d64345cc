"""scope-dti: curation, balancing, semi-inductive splits, 3D-structure-aware
drug-target interaction modeling, interpretation, and serving."""

__version__ = "0.1.0"

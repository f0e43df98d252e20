"""Split Knockoffs: directional FDR control for variable selection under linear transformations."""

__version__ = "0.1.0"

SCHEMA_VERSION = "splitknock/1"

"""Central values of Dirichlet twists of a level-1 Hecke eigenform and their second moment."""

__version__ = "0.1.0"

"""Mass-moment parameters of deforming continua and numerical checks of their conservation."""

__version__ = "0.1.0"

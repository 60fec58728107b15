"""Figure rendering for chiralnet experiment CSV outputs."""

from .render import FIGURE_KINDS, FigureJob, SchemaError, render

__version__ = "0.1.0"

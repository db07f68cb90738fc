"""Renders apskshape CSV artifacts to figure images from recipe files."""

__version__ = "0.1.0"

from .render import render, load_recipe, SCHEMAS

__all__ = ["render", "load_recipe", "SCHEMAS", "__version__"]

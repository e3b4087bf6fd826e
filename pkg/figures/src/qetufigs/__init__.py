"""Offline figure rendering for the toolkit's CSV outputs."""

from .recipes import FigureRecipe, RecipeError, bundled_recipes, render, render_available  # noqa: F401

__version__ = "0.1.0"

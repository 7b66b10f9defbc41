"""Monolithic ALE fluid-structure interaction with Radau IIA time stepping and a Galerkin reduced model."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402

"""Optimal investment, liability ratio and dividend strategies for an insurer
facing jump-diffusion insurance risk, with Monte Carlo and sensitivity tooling."""

__version__ = "0.1.0"

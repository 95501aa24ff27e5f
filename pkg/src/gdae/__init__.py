"""Denoising auto-encoder conditionals, their pseudo-Gibbs chains and exact finite-state oracles."""
__version__ = "0.1.0"

"""Finite-volume Potts/Ising laboratory."""

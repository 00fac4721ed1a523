"""Hybrid trapped-ion spin-motion simulator: two-tone drives, their effective
nonlinear Hamiltonians, laser-free sidebands and commutator-gadget gates."""

__version__ = "0.1.0"

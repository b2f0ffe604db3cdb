"""Pure-state simulation of partial measurements, their reversal, and the
EPR, teleportation, swapping, tomography and hidden-variable experiments
built on them."""

__version__ = "0.1.0"

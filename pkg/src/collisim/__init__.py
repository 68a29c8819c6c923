"""Random-unitary collision models: purity relaxation and entanglement with a qudit chain."""

__version__ = "0.1.0"

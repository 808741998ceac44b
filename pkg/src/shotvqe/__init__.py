"""Shot-budget VQE simulator and experiment harness for frustrated Heisenberg lattices."""

__version__ = "0.1.0"

"""Wall-and-chamber structure, Morse complexes and wall-crossing maps for gradient families on the plane."""

__version__ = "0.1.0"

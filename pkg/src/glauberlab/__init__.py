"""Glauber birth-and-death dynamics: potentials, identities, spectral gaps, simulation."""

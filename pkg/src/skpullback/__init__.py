"""Exact arithmetic for Saito-Kurokawa lifts and their diagonal pullbacks.

Subpackages roughly follow the pipeline: core q-series arithmetic, elliptic
eigenforms (gl2), the half-integral plus space (kohnen), Jacobi forms
(jacobi), the lift itself (sklift), symplectic coset families (sp4coset),
spectral decomposition of pullbacks (spectral), L-functions and Petersson
norms (lfun), L^2-mass and main terms (mass), non-vanishing tests
(nonvanish), and the data/CLI layer (shell).
"""

__version__ = "0.1.0"

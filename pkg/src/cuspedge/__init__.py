"""Executable spectral geometry for collapsing cusp-edge models.

Subpackages cover exact Clifford/supertrace algebra, polyhomogeneous index-set
arithmetic, blow-up charts with verified vector-field lifts, closed-form model
heat kernels, characteristic forms and eta invariants, discretized model
operators, and finite-part extraction of heat-trace expansion coefficients.
"""

__version__ = "0.1.0"

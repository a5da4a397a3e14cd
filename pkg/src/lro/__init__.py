"""Learning the shape and size of uncertainty sets in robust optimization.

The package is organized around a small pipeline:

- :mod:`lro.cones` -- cone projections and their Jacobians;
- :mod:`lro.solver` -- an operator-splitting conic solver on the homogeneous
  self-dual embedding, exposing the embedding point used for differentiation;
- :mod:`lro.diff` -- implicit differentiation of conic solutions through the
  normalized residual map, forward and adjoint;
- :mod:`lro.uncertainty` -- uncertainty-set data model and canonicalization of
  robust problems into standard-form cone programs plus affine parameter maps;
- :mod:`lro.risk` -- empirical CVaR / violation-rate estimators and the
  finite-sample confidence bound;
- :mod:`lro.trainer` -- the safeguarded stochastic augmented Lagrangian loop;
- :mod:`lro.experiments` -- data generators, baselines, trade-off curves and
  the command line entry point.
"""

from lro.cones import ConeSpec, dual, project, project_jacobian
from lro.solver import ConeProgram, ConicSolution, SolverSettings, residuals, solve

__all__ = [
    "ConeSpec",
    "project",
    "project_jacobian",
    "dual",
    "ConeProgram",
    "ConicSolution",
    "SolverSettings",
    "solve",
    "residuals",
]

__version__ = "0.1.0"

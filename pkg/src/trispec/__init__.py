"""Dirichlet eigenfunctions of right triangles and their Neumann boundary data.

The package solves ``-Laplace u = lambda u`` on the triangle with vertices
``(0, 0)``, ``(a, 0)``, ``(0, 1)``, either in closed form (``a = 1``) or by
P1/P2 finite elements, and measures how the eigenfunction mass and its
normal derivative distribute over the domain and its sides.
"""

from .analytic import (
    AnalyticEigenvalue,
    ModeIndex,
    asymptotic_Il_limit,
    enumerate_modes,
    exact_Il,
    exact_Ir,
)
from .convergence import ConvergenceReport, convergence_study
from .domain import Mesh, Region, RightTriangle, SideTag, StripSpec, generate_mesh, make_triangle, refine
from .errors import (
    AssemblyError,
    FormatError,
    InvalidModeError,
    InvalidParameterError,
    MeshMismatchError,
    SolverError,
    TrispecError,
)
from .fem import EigenPair, EigenRun, assemble, solve_eigs, solve_run
from .handles import AnalyticEigenfunction, FemEigenfunction, SquareMode
from .metrics import (
    CutoffSpec,
    EigenMetrics,
    compute_metrics,
    partial_neumann,
    prop_left,
    rellich_cutoff_check,
    side_neumann,
    volume_energy,
    weighted_boundary,
)
from .stats import running_average, running_percentage, summarize

__version__ = "0.1.0"

"""Numerical tolerances and fixed defaults shared across the package."""

# Relative tolerance for comparing banded and dense spline solves.
SOLVER_RTOL = 1e-8

# Null-space (linear data) reproduction tolerance.
NULL_SPACE_ATOL = 1e-9

# Composite Simpson grid size; must be odd.
QUADRATURE_POINTS = 4097

# Central-difference step used when a FunctionHandle lacks analytic derivatives.
FD_STEP = 1e-5

# Grid size for sup-norm sweeps over kernels and weight functions.
KERNEL_GRID = 201

# Bandwidth constant in the n * lambda**(1/4) > C0 precondition.
BANDWIDTH_C0 = 1.0

# Norm-equivalence band on (0, 1) with a small quadrature slack.
NORM_EQUIV_LOW = 1.0 / 5.0
NORM_EQUIV_HIGH = 7.0
NORM_EQUIV_SLACK = 1e-3

INTERP_INEQ_SLACK = 1e-6

DOMAIN = (0.0, 1.0)

"""Fitted-mesh upwind solver for a 2-D singularly perturbed
convection-diffusion problem whose source jumps across two interior lines.

Typical library use::

    from cd2d import builtin_problem, build_tensor_mesh, assemble_system
    from cd2d import solve_direct, Variant

    spec = builtin_problem("Example1").with_epsilon(1e-4)
    tm = build_tensor_mesh(spec, 64)
    system = assemble_system(spec, tm, Variant.TRANSFORMED)
    u = solve_direct(system)
"""
from .analysis import (ConvergenceTable, DoubleMeshMode, SweepResult,
                       double_mesh_error, double_mesh_error_bilinear,
                       manufactured_problem, manufactured_solution_study,
                       mms_exact, order_estimate, run_cell, run_sweep,
                       write_table_csv)
from .assembly import (LinearSystem, MMatrixReport, RowKind, StencilRow,
                       Variant, assemble_interface_x_row,
                       assemble_interface_x_row_raw, assemble_interface_y_row,
                       assemble_interior_row, assemble_row, assemble_system,
                       m_matrix_check)
from .errors import (BadN, CD2DError, DimensionMismatch, GeometryError,
                     MalformedSpec, MeshMismatch, NonFiniteSolution,
                     NonPositiveError, OnDiscontinuityWithoutSide, OutOfDomain,
                     SingularMatrix, SingularStructure, WrongKind)
from .mesh import (Axis, Mesh1D, PointKind, TensorMesh, TransitionParams,
                   bisect, bisect_1d, build_mesh_x, build_mesh_y,
                   build_tensor_mesh, compute_transition_points)
from .problems import (ProblemSpec, QuadrantId, Side, ValidationReport,
                       builtin_problem, check_mesh_parameter, jump_f_across_x,
                       jump_f_across_y, problem_names, quadrant_of,
                       register_problem, sample_field, source_at, validate)
from .solve import GridFunction, residual_norm, solve_direct, write_grid_dump

__version__ = "0.1.0"

"""Resonance zone coverings, simple-resonance graphs, and secular data
for convex nearly-integrable models."""

from .covering import (MeasureReport, ZoneLabel, analytic_r2_bound, classify,
                       classify_batch, estimate_measures, scan2d)
from .errors import (BracketError, CertificationError, DomainError,
                     InvariantViolation, ModelAssumptionError, ParameterError,
                     ResokamError, UnsupportedPlotError)
from .lattice import (ResonanceVector, UnimodularFrame, enumerate_generators,
                      unimodular_completion, weighted_norm)
from .model import (Ball, Box, ConvexModel, CoveringParams, build_model,
                    build_model_external, covering_params, k_from_eps,
                    load_model, load_params, validate_constants)
from .resgraph import (CubeGrid, NonresReport, ResonanceGraph, RotatedModel,
                       build_graph, build_rotated, check_nonresonance,
                       contraction_certificate, cube_decomposition, solve_eta,
                       validate_rotated)
from .secular import (StandardFormData, TrigPotential, curvature_at,
                      fast_angle_average, standard_form, trig_eval)

__version__ = "0.1.0"

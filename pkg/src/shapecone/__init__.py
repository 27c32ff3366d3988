"""Type cones, mixed-volume forms and hyperbolic shape spaces of polytopes
with fixed facet normals."""

from .config import (Circuit, GaleDiagram, VectorConfiguration, affine_gale, enumerate_circuits,
                     gale_dual, is_positively_spanning)
from .cones import (BoundaryClir, ChamberComplex, Flip, arrangement_chambers, chamber_of, domains,
                    enumerate_type_cones, explore_chambers, interior_membership, irredundancy_domain,
                    is_polytopal, k_core, seed_chamber, span_equations, wall_cross)
from .errors import ShapeconeError
from .forms import (BodySpec, QuadraticForm, af_check, area_form_from_angles, mixed_volume, q_form,
                    tetra_face_areas)
from .hyperbolic import (HyperbolicCell, MinkowskiSpace, ShapeComplex, boundary_right_angle_check,
                         build_cell, build_shape_complex, hyperbolic_distance, interior_cone_angle,
                         orthoscheme_angles)
from .polyhedral import AbstractFan, PolyCone, TypeCone
from .polytope import (ConcretePolytope, christoffel_reconstruct, edge_weights, normal_fan, solve_polytope,
                       type_cone_inequalities)

__version__ = "0.1.0"

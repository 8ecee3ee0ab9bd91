"""Preferential fluid-flow direction analysis for crack surfaces in fissured media."""

from .surface import Heightmap, SurfaceSpec, load_heightmap_csv, unit_square
from .mesh import (AcutenessUnachievable, DomainTooSmall, Mesh2D, MeshError,
                   Violation, build_mesh, generate_mesh, load_mesh,
                   mesh_from_json, mesh_to_json, save_mesh, validate_mesh)
from .lifting import InvalidMesh, LiftedTriangulation, lift
from .flow import (ElementField, FluidParams, InvalidNormal, NotUnit, apply_G,
                   apply_V, average, element_matrix, gravity_speeds,
                   mean_velocity_matrix)
from .curvature import (BoundaryEdge, DirectionDistribution, EdgeStrain,
                        EnergyForm, assemble_form_curv, dissipation_curv,
                        edge_strain, preferential_curv)
from .gravity import (GravityAnalysis, assemble_form_grav, dissipation_grav,
                      entropy_choice, external_energy, preferential_grav)
from .friction import (ChordFunction, DegenerateTriangle, FrictionMinimum,
                       chord_function, friction_functional, max_chord,
                       minimize_friction, preferential_friction)
from .superposition import (CellOverlap, GlobalDirectionSpace, NotNormalized,
                            SuperpositionWeights, UncoveredSample,
                            compute_weights, geometric_entropy,
                            partition_entropy, superpose)
from .network import (FissureGrid, NoNeighbors, StationaryResult,
                      TransmissionMatrix, build_matrix, cell_transmission,
                      grid_from_json, stationary)
from .cli import ConfigError, RunConfig, parse_config, run

__version__ = "0.1.0"

"""Macroscopic phase profiles, surface energies and energy barriers."""

from .barrier import (
    BarrierCrossCheck,
    Candidate,
    ConstrainedResult,
    ContinuousFamily,
    DiscretePath,
    EvolutionResult,
    ExponentResult,
    MinimaxResult,
    barrier_disk,
    barrier_grid_minimax,
    barrier_square,
    constrained_barrier_square,
    dilution_cost,
    disk_barrier_crosscheck,
    disk_chord_family,
    evaluate_evolution,
    exponent_xlambda,
    flat_front_family,
    grid_state_energies,
    kappa,
    profile_costs,
    square_barrier_crosscheck,
)
from .decompose import (
    DropletDecomposition,
    SymmetricDecomposition,
    anti_aligned_contact,
    decompose_droplets,
    decompose_symmetric,
)
from .energy import (
    AngularPatches,
    ReducedTension,
    energy_split,
    l1_distance,
    surface_energy_quenched,
    surface_energy_reduced,
    surface_energy_signed,
)
from .profiles import (
    Disk,
    DiskCap,
    GridProfile,
    PlusProfile,
    Polygon,
    Profile,
    Rect,
    common_grids,
    profile_from_dict,
    square_minus_slab,
)
from .tension_fn import SurfaceTensionFn
from .wulff import IsoperimetricCheck, WulffShape, isoperimetric_check, wulff_area, wulff_shape

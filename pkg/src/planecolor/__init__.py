"""Nearest-neighbor coloring of the plane and coalescing partitions.

Simulation and estimation toolkit: Poisson rain coloring forests,
backward ancestor chains over excluded regions, coupled-chain
coalescence, reversed-time cell merging, and the statistical estimators
used to verify their distributional identities.
"""

__version__ = "0.1.0"

from .rng import RngStream
from .windows import Window, unit_square, unit_torus
from .geometry import (
    Disc,
    DiscUnion,
    Point2,
    distance,
    isodiametric_holds,
    merged_diameter_bound,
    union_area_mc,
    union_diameter,
)
from .sampling import reverse_lifetimes, sample_ppp, sample_spacetime_ppp
from .grid import GridIndex, brute_force_nearest
from .forest import DiscreteMeasure, Forest, Particle, grow_elementary, grow_spacetime
from .raster import (
    PartitionRaster,
    boundary_length,
    boundary_mask,
    rasterize_voronoi,
    read_ppm,
    write_ppm,
)
from .excluded_area import (
    ChainState,
    TraceRow,
    chain_init,
    chain_step,
    envelope_tail,
    nearest_in_complement,
    occupation_bad_fraction,
    run_until_time,
    sample_displacement_envelope,
    sample_displacement_envelope_batch,
    scaled_increments,
    shot_noise_run,
)
from .coupled import (
    CoalescenceRecord,
    CoupledState,
    coupled_init,
    coupled_run,
    coupled_step,
    shared_nearest_lower_bound,
    shared_nearest_prob_mc,
)
from .merging import CellMap, MergeEvent, cell_area_profile, init_cells, merge_step, reverse_run
from .stats import (
    BoxCountResult,
    TailFit,
    bl_distance,
    box_count_dimension,
    exp_tail_fit,
    poisson_gof,
    power_tail_fit,
    tail_fit_stability,
)

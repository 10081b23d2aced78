"""Williams path decomposition for self-similar Markov processes via Markov additive processes."""
from .core import (Angle, DomainError, GlueError, MapPath, MapState, PocrSample, SsmpPath, concat_paths,
                   from_polar, read_path_csv, to_polar, write_map_csv, write_ssmp_csv)
from .sampling import SeedSpec, as_seed, isotropic_stable_increment, make_rng
from .lamperti_kiu import TimeChange, build_clock, map_from_ssmp, phi, ssmp_from_map
from .map_fluct import MapModel, bm_pocr_ensemble, pocr_from_path, simulate_map
from .stable_cond import Down, Patch, Point, StableParams, Up, h_down, h_up, sample_pocr, simulate_conditioned
from .cone import ConeParams, ladder_density_cone, pocr_law_cone, survival_ladder
from .stats import TestReport, ks_one_sample, ks_two_sample
from .williams import (ClassicalBM, DecompositionSpec, SmcSettings, Stable, construct_classical,
                       construct_stable, verify_decomposition)

__version__ = "0.1.0"

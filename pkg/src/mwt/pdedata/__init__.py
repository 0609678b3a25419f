"""Random input samplers, reference PDE solvers and dataset files."""
from mwt.pdedata.beam import solve_beam, solve_beam_dense
from mwt.pdedata.darcy import solve_darcy, threshold_coefficient
from mwt.pdedata.dataset import GenerationConfig, PdeDataset, generate_dataset, subsample
from mwt.pdedata.samplers import (
    BURGERS_GRF,
    DARCY_GRF,
    KDV_GRF,
    GrfSpec,
    sample_grf,
    sample_smooth_random,
    sample_sqexp_periodic,
)
from mwt.pdedata.spectral import solve_burgers, solve_kdv

__all__ = [
    "BURGERS_GRF", "DARCY_GRF", "KDV_GRF", "GenerationConfig", "GrfSpec", "PdeDataset",
    "generate_dataset", "sample_grf", "sample_smooth_random", "sample_sqexp_periodic",
    "solve_beam", "solve_beam_dense", "solve_burgers", "solve_darcy", "solve_kdv",
    "subsample", "threshold_coefficient",
]

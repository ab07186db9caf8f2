"""Anderson-accelerated fixed-point solver for stiff flux-coupled
transport, with an experiment harness (sweeps, tuning, reports)."""

from .accel import (AccelConfig, SolveReport, TraceEntry, adapt_damping,
                    adapt_depth, fixed_point_step, gain, solve)
from .flux import (NoiseModel, ShestakovFlux, sample_noise, shestakov_flux,
                   source_profile, steady_state_oracle)
from .problem import (ExperimentConfig, ProblemConfig, build_map,
                      initial_profile, run_experiment, with_accel_overrides,
                      with_noise_seed)
from .qrls import QrFactor, RankDeficiencyError
from .transport import (Grid, LodestroMap, StepParams, assemble_system,
                        split_flux, thomas_solve)
from .tune import (ParamDim, ParamSpace, TrialRecord, TuneResult,
                   default_space, evaluate_objective, run_sweep, tune)

__version__ = "0.1.0"

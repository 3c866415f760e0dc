"""Starting velocity models from one gained Laplace-domain gradient update."""

from .data import LaplaceField, ShotGather, SurveyDataset
from .errors import (ConfigError, CorruptionError, DataError, DegenerateError, DomainError, FormatError,
                     GainInitError, SingularityError, StabilityError)
from .geometry import AcquisitionGeometry, VelocityModel, bilinear_resample, water_mask_from_bathymetry
from .greens import field_s_derivative, greens, modeled_field
from .laplace import (TransformSpec, exponential_gain_transform, gained_transform, laplace_transform_trace,
                      observed_derivative, stability_check, transform_survey)
from .objective import (GradientField, ResidualPolicy, assemble, estimate_source, gradient, objective,
                        precondition, pseudo_hessian_diag)
from .pipeline import PipelineConfig, RunReport, build_initial_model, weighted_sum
from .sensitivity import born_kernel, born_kernel_s_derivative
from .synthetics import Scatterer, synth_born_observed, synth_time_traces
from .trace_io import export_grid, read_grid, read_survey, write_grid, write_survey

__version__ = "0.1.0"

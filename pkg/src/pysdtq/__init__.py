from .errors import (SDTError, InvalidArgumentError, InvalidInputError, EmptySetError,
                     EmptyBandError, FormatError, NumericalFailureError)
from .grid import (GridSpec, ScalarField, BinaryField, ShapeParams, sample_sphere_sdf,
                   sample_sphere_gradient, sample_sphere_hessian, rasterize, binarize)
from .fieldio import encode_field, decode_field, save_field, load_field, export_csv, export_pgm
from .dt import Metric, distance_transform, feature_transform, signed_distance_transform
from .stencil import (StencilSpec, diff, gradient, second_diff, mixed_diff, gradient_magnitude,
                      laplacian, curvature_2d, mean_curvature_3d, weno5, godunov_gradmag)
from .quant import (LevelSet, enumerate_levels, enumerate_differences, quantization_residual,
                    voronoi_edges, regression_pairs, flat_gradient_census)
from .reinit import (DitherParams, ReinitParams, ErrorReport, Reinitializer, dither, smoothed_sign,
                     reinit_rhs, reinitialize, error_metrics, curvature_band_histogram)
from .live_data import LiveData, run_streams
from .live_reinit import LiveReinit, ReinitPacket
from .config import ExperimentConfig, default_config

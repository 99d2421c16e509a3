"""Gaussian-smoothed optimizers, layers and benchmarks backed by a C++ core."""

import json

from ._core import (
    AnalyticSource,
    AnalyticTestFunction,
    ConfigError,
    ConvNetGeometry,
    ConvNetLambdas,
    DatasetError,
    DenseCoefficient,
    ExperimentConfig,
    GradientSource,
    GSmoothAdam,
    GSmoothSgd,
    GSmoothSvrg,
    LayerSpec,
    MCEstimate,
    MonteCarloError,
    NetworkOptions,
    NumericError,
    OptimizerError,
    RegularizerSign,
    ShapeError,
    SigmaSchedule,
    SmoothedNetwork,
    TestSet,
    TrainSet,
    add_pixel_noise,
    check_composition,
    check_grad_bounds,
    check_value_bound,
    flip_labels,
    heatmap,
    lemma_check,
    linspace_points,
    load_mnist,
    mc_smooth_grad,
    mc_smooth_value,
    quadratic_test_function,
    quartic_test_function,
    run_experiment,
    shifted_quadratic_source,
    smooth_demo,
    smooth_relu,
    smooth_relu_derivative,
    smooth_relu_sq,
    smooth_relu_sq_derivative,
    smooth_sq_norm,
    split_validation,
)


def config_from_dict(data):
    """Build an ExperimentConfig from a dict with the config-file layout."""
    return ExperimentConfig.from_json(json.dumps(data))


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]

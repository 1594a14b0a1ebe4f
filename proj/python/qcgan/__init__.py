"""Hybrid quantum-classical GAN lab.

Thin wrapper over the compiled core: an N-qubit simulator with noise
channels, the SUDAI variational generator with parameter-shift gradients,
distribution metrics, IDS surrogate classifiers and the WGAN-GP training
loop.
"""

from qcgan._core import (  # noqa: F401
    CircuitConfig,
    ConfigError,
    DataError,
    QuantumState,
    RandomForest,
    UsageError,
    __version__,
    bimodal_spec_json,
    classical_generator_parameter_count,
    critic_parameter_count,
    generate,
    generate_from_checkpoint,
    generate_synthetic,
    init_ground,
    kl_histogram,
    mmd,
    mse_quantile_paired,
    parameter_shift_grad,
    post_processor_parameter_count,
    quantile_fit_apply,
    selftest,
    separable_spec_json,
    train_gan,
    wasserstein_per_feature,
)

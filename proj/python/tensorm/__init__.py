"""Boolean tensor factorisation by Gibbs sampling."""

from ._core import (
    ArgumentError,
    BoundsError,
    ChainResult,
    IoError,
    ParseError,
    SamplerConfig,
    StateError,
    TensormError,
    __version__,
    cv_select,
    density_for_target,
    expected_density,
    load_tensor,
    mask_holdout,
    occam_select,
    relational_encode,
    run_chain,
    save_dense,
    save_sparse,
    simulate,
)


def fit(tensor, rank, seed=0, **options):
    """Run one chain with the given rank; keyword options set SamplerConfig fields."""
    cfg = SamplerConfig()
    cfg.rank = rank
    cfg.seed = seed
    for name, value in options.items():
        if not hasattr(cfg, name):
            raise TypeError(f"unknown sampler option {name!r}")
        setattr(cfg, name, value)
    return run_chain(tensor, cfg)


__all__ = [
    "ArgumentError",
    "BoundsError",
    "ChainResult",
    "IoError",
    "ParseError",
    "SamplerConfig",
    "StateError",
    "TensormError",
    "cv_select",
    "density_for_target",
    "expected_density",
    "fit",
    "load_tensor",
    "mask_holdout",
    "occam_select",
    "relational_encode",
    "run_chain",
    "save_dense",
    "save_sparse",
    "simulate",
]

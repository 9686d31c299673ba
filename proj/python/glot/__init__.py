from ._glot import (
    DataError,
    NumericError,
    __version__,
    accuracy,
    bench,
    boundary_pool,
    default_train_options,
    f1,
    gen_diagnostic,
    glot_pool,
    max_pool,
    mcc,
    mean_pool,
    read_cache,
    spearman,
    symmetric_infonce,
    token_graph,
    train,
    write_cache,
)

__all__ = [
    "DataError",
    "NumericError",
    "__version__",
    "accuracy",
    "bench",
    "boundary_pool",
    "default_train_options",
    "f1",
    "gen_diagnostic",
    "glot_pool",
    "max_pool",
    "mcc",
    "mean_pool",
    "read_cache",
    "spearman",
    "symmetric_infonce",
    "token_graph",
    "train",
    "write_cache",
]

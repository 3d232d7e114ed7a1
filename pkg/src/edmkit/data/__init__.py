from edmkit.data.data_io import (
    TimeSeriesDataset,
    default_timestamps,
    load_ucr_tsv,
    make_synthetic,
    stratified_kfold,
    write_ucr_tsv,
    z_normalize,
    z_normalize_rows,
)

__all__ = [
    "TimeSeriesDataset",
    "default_timestamps",
    "load_ucr_tsv",
    "make_synthetic",
    "stratified_kfold",
    "write_ucr_tsv",
    "z_normalize",
    "z_normalize_rows",
]

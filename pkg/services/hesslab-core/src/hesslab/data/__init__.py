from .datasets import (
    Dataset,
    gaussian_synthetic,
    load_idx,
    randomize_labels,
    relabel_mnist2,
    subset,
    write_idx,
)

__all__ = [
    "Dataset",
    "gaussian_synthetic",
    "load_idx",
    "randomize_labels",
    "relabel_mnist2",
    "subset",
    "write_idx",
]

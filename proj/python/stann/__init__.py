"""Graph-smoothed preprocessing and hybrid attention networks.

The heavy lifting lives in the compiled ``_stann`` extension; this package
just re-exports it. Installed wheels place the extension inside the package;
in-tree test runs load it from the build directory via PYTHONPATH.
"""

try:
    from ._stann import *  # noqa: F401,F403
    from ._stann import __doc__ as _doc
except ImportError:
    from _stann import *  # noqa: F401,F403
    from _stann import __doc__ as _doc

__doc__ = _doc if _doc else __doc__

__all__ = [
    "ring_montage",
    "knn_graph",
    "lowpass_smooth",
    "bandpass",
    "generate_synthetic",
    "make_windows",
    "fit_cv",
    "train_full",
    "evaluate",
    "finetune",
    "parameter_table",
    "ArgumentError",
    "DataError",
    "NumericError",
]

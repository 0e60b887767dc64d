"""Figures from simulation output directories.

The simulation CLI writes plain CSV series and snapshot files plus a JSON
manifest; this package turns one or more such directories into publication
style images.  It reads only those documented files, never the simulation
library, so the two packages stay independently installable.
"""

__version__ = "0.1.0"

from .figures import clustering_figure, counts_figure, msd_figure
from .readers import (PlotDataError, Snapshot, read_manifest, read_snapshot,
                      read_table, snapshot_series)

__all__ = [
    "__version__",
    "PlotDataError", "Snapshot",
    "clustering_figure", "counts_figure", "msd_figure",
    "read_manifest", "read_snapshot", "read_table", "snapshot_series",
]

"""Render publication-style figures from foraging-evolution run directories.

The renderers consume only the files a run directory already contains
(JSONL generation logs, heat-capacity and regime CSVs, analysis outputs);
no simulation code is imported. Every figure id maps to one function in
`plotkit.figures`.
"""

from importlib.resources import files
from pathlib import Path

__version__ = "0.1.0"

FIGURE_IDS = ("heatcap", "fitness", "delta", "generalize", "perturb",
              "operators")


def sample_run_dir() -> Path:
    """Path of the bundled miniature run directory used in docs and tests."""
    return Path(files("plotkit") / "sample_run")

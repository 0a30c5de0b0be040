"""Command line, configuration and file formats."""
from .io import (DatasetError, DatasetManifest, convert_tutorial, load_dataset, load_sigmas,
                 save_dataset, save_decomposition)

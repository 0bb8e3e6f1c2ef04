# =============================================================================
# hesslab - Command-Line Interface
# =============================================================================

from .app import app
from .commands import (
    cmd_correspondence,
    cmd_overlap,
    cmd_pacbayes,
    cmd_spectra,
    cmd_train,
    cmd_verify_theorem,
    load_datasets,
)
from .io import error_document, write_csv, write_json, write_manifest
from .run_config import (
    AnalysisConfig,
    CorrespondenceConfig,
    DataConfig,
    OverlapConfig,
    PacBayesConfig,
    RunConfig,
    SpectraConfig,
    TheoremConfig,
    TrainConfig,
    load_config,
)

__all__ = [
    "app",
    "cmd_train",
    "cmd_spectra",
    "cmd_overlap",
    "cmd_correspondence",
    "cmd_verify_theorem",
    "cmd_pacbayes",
    "load_datasets",
    "error_document",
    "write_csv",
    "write_json",
    "write_manifest",
    "RunConfig",
    "DataConfig",
    "TrainConfig",
    "AnalysisConfig",
    "SpectraConfig",
    "OverlapConfig",
    "CorrespondenceConfig",
    "TheoremConfig",
    "PacBayesConfig",
    "load_config",
]

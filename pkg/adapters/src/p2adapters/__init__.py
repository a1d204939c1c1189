"""Expert vision-tool adapters exporting percept ingestion files."""

from .blink import convert_blink
from .depth import export_depth
from .detect import export_detections
from .errors import AdapterError, ExportValidationFailure, ModelLoadFailure
from .flow import export_flow
from .io_formats import AdapterManifest
from .matching import export_matches
from .similarity import export_similarities

__all__ = [
    "AdapterError", "AdapterManifest", "ExportValidationFailure",
    "ModelLoadFailure", "convert_blink", "export_depth", "export_detections",
    "export_flow", "export_matches", "export_similarities",
]

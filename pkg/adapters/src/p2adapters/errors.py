class AdapterError(Exception):
    """Base class for adapter failures."""


class ModelLoadFailure(AdapterError):
    """Neural backend unavailable: missing package or missing weights."""


class ExportValidationFailure(AdapterError):
    """Produced data would violate the ingestion contract."""

"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` so the CLI can emit
structured error JSON.
"""


class SimvsError(Exception):
    code = "ERROR"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def to_json_dict(self):
        d = {"error_code": self.code, "message": str(self)}
        extra = getattr(self, "extra", None)
        if extra:
            d.update(extra)
        return d


class InvalidPoseError(SimvsError):
    code = "INVALID_POSE"


class DegenerateViewError(SimvsError):
    code = "DEGENERATE_VIEW"


class InvalidSceneError(SimvsError):
    code = "INVALID_SCENE"


class ConfigValidationError(SimvsError):
    code = "CONFIG_INVALID"

    def __init__(self, violations):
        self.violations = list(violations)
        self.extra = {"violations": self.violations}
        super().__init__(
            "config validation failed with %d violation(s): %s"
            % (len(self.violations), "; ".join(self.violations))
        )


class DatasetNotFoundError(SimvsError):
    code = "DATASET_NOT_FOUND"


class CheckpointNotFoundError(SimvsError):
    code = "CHECKPOINT_NOT_FOUND"


class TrainingDivergedError(SimvsError):
    code = "TRAINING_DIVERGED"

    def __init__(self, message, diagnostics=None):
        self.extra = {"diagnostics": diagnostics or {}}
        super().__init__(message)


class PluginError(SimvsError):
    code = "PLUGIN_FAILED"


class RecordSkipped(SimvsError):
    """A record could not be processed and is dropped from the job (never
    silently replaced by fallback data)."""

    code = "RECORD_SKIPPED"

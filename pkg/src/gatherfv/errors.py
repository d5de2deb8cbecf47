"""Exception hierarchy. Every error raised on purpose derives from GatherFVError."""


class GatherFVError(Exception):
    pass


class ParseError(GatherFVError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class MeshValidationError(GatherFVError, ValueError):
    def __init__(self, invariant, detail):
        self.invariant = invariant
        super().__init__(f"mesh invariant '{invariant}' violated: {detail}")


class GeometryError(GatherFVError, ValueError):
    pass


class ConfigError(GatherFVError, ValueError):
    pass


class SolverError(GatherFVError, RuntimeError):
    """Linear solve failed to converge inside a time loop."""

    def __init__(self, message, step=None, residual=None):
        self.step = step
        self.residual = residual
        super().__init__(message)

"""
Error taxonomy for the Euler-Boltzmann laboratory.

Every error carries a stable ``code`` so that the CLI can report it in a
machine-readable body, the same way a request handler turns a service error
into a status code and an ``error`` message.
"""


class EulerBoltzmannError(Exception):
    """Base class for every error raised by the package."""

    code = 'error'

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        body = {'error': self.message, 'code': self.code}
        body.update({k: v for k, v in self.details.items() if v is not None})
        return body


class InvalidArgument(EulerBoltzmannError):
    code = 'invalid-argument'


class InvalidModel(EulerBoltzmannError):
    code = 'invalid-model'


class DimensionError(EulerBoltzmannError):
    code = 'dimension-error'


class StepRejected(EulerBoltzmannError):
    """A time step violated its stability condition."""

    code = 'step-rejected'

    def __init__(self, message, required_dt):
        super().__init__(message, required_dt=float(required_dt))
        self.required_dt = float(required_dt)


class SolverDiverged(EulerBoltzmannError):
    code = 'solver-diverged'


class NearSingularity(EulerBoltzmannError):
    """The vacuum Burgers fixed point failed to converge."""

    code = 'near-singularity'


class UnsupportedOrder(EulerBoltzmannError):
    code = 'unsupported-order'


class InvalidInput(EulerBoltzmannError):
    code = 'invalid-input'


class InconsistentData(EulerBoltzmannError):
    code = 'inconsistent-data'


class NoVacuumRegion(EulerBoltzmannError):
    code = 'no-vacuum-region'


class NotFound(EulerBoltzmannError):
    code = 'not-found'


class InvalidConfig(EulerBoltzmannError):
    code = 'invalid-config'


class NoData(EulerBoltzmannError):
    code = 'no-data'

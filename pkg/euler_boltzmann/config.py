import os
from dataclasses import dataclass, field
from typing import Optional

from euler_boltzmann.errors import InvalidConfig

# Get environment variables with defaults for local runs
OUTPUT_DIR = os.environ.get('EB_OUTPUT_DIR', 'runs')
NUM_THREADS = int(os.environ.get('EB_NUM_THREADS', '1'))
LOG_LEVEL = os.environ.get('EB_LOG_LEVEL', 'INFO')
DEFAULT_SEED = int(os.environ.get('EB_DEFAULT_SEED', '0'))

MODES = ('simulate', 'certify', 'picard', 'validate')
BACKENDS = ('characteristic', 'sweep')
SPLITS = ('strang', 'lie')


@dataclass(frozen=True)
class RunConfig:
    """
    One invocation of the laboratory.

    ``scenario`` is a built-in scenario name or a path to a scenario file.
    Every override left as ``None`` falls back to the scenario's own value.
    """

    scenario: str
    mode: str = 'simulate'
    output_dir: str = field(default_factory=lambda: OUTPUT_DIR)
    cells: Optional[int] = None
    ordinates: Optional[int] = None
    groups: Optional[int] = None
    dt: Optional[float] = None
    cfl: Optional[float] = None
    horizon: Optional[float] = None
    backend: Optional[str] = None
    cadence: Optional[int] = None
    seed: Optional[int] = None
    split: Optional[str] = None
    plots: bool = False

    def __post_init__(self):
        if not self.scenario:
            raise InvalidConfig('A scenario name or file path is required')
        if self.mode not in MODES:
            raise InvalidConfig(f'Unknown mode {self.mode!r}; expected one of {", ".join(MODES)}')
        if self.cfl is not None and not 0.0 < self.cfl <= 1.0:
            raise InvalidConfig(f'CFL number must lie in (0, 1], got {self.cfl}')
        if self.horizon is not None and not self.horizon > 0.0:
            raise InvalidConfig(f'Horizon must be positive, got {self.horizon}')
        if self.cadence is not None and self.cadence < 1:
            raise InvalidConfig(f'Output cadence must be at least 1, got {self.cadence}')
        if self.dt is not None and not self.dt > 0.0:
            raise InvalidConfig(f'Time step must be positive, got {self.dt}')
        if self.cells is not None and self.cells < 4:
            raise InvalidConfig(f'At least 4 cells per axis are required, got {self.cells}')
        if self.ordinates is not None and self.ordinates < 2:
            raise InvalidConfig(f'Ordinate order must be at least 2, got {self.ordinates}')
        if self.groups is not None and self.groups < 1:
            raise InvalidConfig(f'At least one frequency group is required, got {self.groups}')
        if self.backend is not None and self.backend not in BACKENDS:
            raise InvalidConfig(f'Unknown backend {self.backend!r}; expected one of {", ".join(BACKENDS)}')
        if self.split is not None and self.split not in SPLITS:
            raise InvalidConfig(f'Unknown splitting {self.split!r}; expected one of {", ".join(SPLITS)}')

    def overrides(self):
        """Return the run-section overrides that were actually given."""
        names = ('cells', 'ordinates', 'groups', 'dt', 'cfl', 'horizon',
                 'backend', 'cadence', 'seed', 'split')
        return {name: getattr(self, name) for name in names if getattr(self, name) is not None}

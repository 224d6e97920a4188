import sys

from euler_boltzmann.cli import main

sys.exit(main())

"""This package contains test classes to test the boundary-condition laboratory's main functionalities using pytest.

The test classes include classes to test the laboratory's main functionalities provided by
    - the boundary-condition algebra (test_bc_core.py)
    - the exact and finite-difference spectra (test_spectral.py)
    - the heat kernels, path sums and wave packets (test_propagator.py)
    - the classical bounce dynamics (test_classical_sim.py)
    - the analysis and storage modules (test_analyze.py)
    - the command line interface (test_cli.py)
"""

from .test_analyze import *
from .test_bc_core import *
from .test_spectral import *
from .test_propagator import *
from .test_classical_sim import *
from .test_cli import *

"""Exponential tail decay of distributions from the poles of their transforms.

Subpackages of note:

* ``transforms``  transform / generating-function specs and the catalog
* ``spectral``    abscissa, pole order, Laurent data, strip certificates
* ``extremal``    majorant / minorant pair of exponential type and its checks
* ``bounds``      decay-rate reports with sandwich constants
* ``empirical``   simulation, closed-form tails, slope estimates, counterexample
* ``cli``         command-line front end
"""
from .errors import TailSpectraError

__version__ = "0.1.0"

__all__ = ["TailSpectraError", "__version__"]

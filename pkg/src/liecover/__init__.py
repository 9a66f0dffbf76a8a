"""Covering numbers of RKHS unit balls on compact Lie groups (T^1, T^2, SU(2)).

Modules:

- :mod:`liecover.groups`: dual enumeration, irreducible representations, Haar quadrature.
- :mod:`liecover.symbols`: matrix-valued symbols, certification, order classification.
- :mod:`liecover.kernel`: truncated kernels, RKHS coefficients, the operator Q.
- :mod:`liecover.counting`: weighted counting sums and Weyl-type constants.
- :mod:`liecover.bounds`: analytic upper and lower entropy bounds.
- :mod:`liecover.covering`: empirical sup-norm covering brackets and a small exact oracle.
- :mod:`liecover.config`, :mod:`liecover.cli`: run configuration and command line.
"""

__version__ = "0.1.0"

from .groups import Group, IrrepLabel, enumerate_dual, haar_grid, sample_haar  # noqa: E402
from .symbols import SymbolField, custom_symbol, make_symbol, trace_norm  # noqa: E402
from .kernel import TruncatedKernel, make_kernel  # noqa: E402

__all__ = [
    "__version__", "Group", "IrrepLabel", "enumerate_dual", "haar_grid", "sample_haar",
    "SymbolField", "custom_symbol", "make_symbol", "trace_norm", "TruncatedKernel", "make_kernel",
]

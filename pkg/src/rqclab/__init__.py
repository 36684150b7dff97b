"""Numerical laboratory for moment bounds of random quantum circuits.

Subpackages map to the moving parts of the construction:

* :mod:`rqclab.fourier`   -- signed-delta functions of bitstring tuples and their Fourier support
* :mod:`rqclab.phasewalk` -- the phase/CNOT auxiliary walk and the ideal diagonal walk
* :mod:`rqclab.f2walk`    -- the CNOT-generated group GL(n, 2) and its random walk
* :mod:`rqclab.densesim`  -- statevector simulation and two-qubit moment operators
* :mod:`rqclab.bounds`    -- closed-form complexity and moment bound formulas
* :mod:`rqclab.cli`       -- experiment runner
"""

__version__ = "0.1.0"

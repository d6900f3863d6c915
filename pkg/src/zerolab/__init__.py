"""Simulation laboratory for zeros of random holomorphic sections.

Modules:

* :mod:`zerolab.geometry` -- weight models, base metrics, regions, test forms
* :mod:`zerolab.spaces` -- orthonormalized section spaces and random sections
* :mod:`zerolab.cuspforms` -- theta series, Petersson products, cusp bases
* :mod:`zerolab.zeros` -- polynomial roots and argument-principle counting
* :mod:`zerolab.bergman` -- Bergman kernel diagonal diagnostics
* :mod:`zerolab.stats` -- equidistribution statistics and rate fits
* :mod:`zerolab.harness` -- experiment configuration, caching, persistence
* :mod:`zerolab.cli` -- command-line entry point
"""

__version__ = "0.1.0"

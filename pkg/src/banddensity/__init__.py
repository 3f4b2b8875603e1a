"""
BandDensity: density criteria, explicit witnesses and brute-force verification
for band-diagonal biorthogonal systems.

Modules:
    family    coefficient families and the expression DSL front end
    systems   tridiagonal and pentadiagonal vector systems f_t, f*_t
    xi        sparse/factored operators and the Xi-sequence
    classify  criterion sequences and density verdicts
    witness   explicit non-density witnesses
    verify    residual checks and summability monitors
    export    witness bundles and their JSON round trip
    cli       command-line front end

Submodules are imported explicitly (``from banddensity.family import ...``);
the package itself only exposes the error base class.
"""
from banddensity.errors import BandDensityError

__version__ = "1.0.0"

__all__ = ["BandDensityError", "__version__"]

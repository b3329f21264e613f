"""Multibracket dynamics on su(n): cocycles, enveloping algebra, star products and brane flows."""
import os as _os

# cap BLAS threads before numpy is first imported
_threads = _os.environ.get("LIEBRANE_THREADS")
if _threads and _threads.isdigit() and int(_threads) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .lie_core import (  # noqa: E402
    DomainError,
    LieAlgebraData,
    RootSystemData,
    build_root_system,
    build_su,
    decompose,
    jacobi_residual,
    structure_constants,
)
from .cohomology import (  # noqa: E402
    Cocycle,
    MultibracketTensor,
    build_cocycle,
    gji_residual,
    lie_multibracket,
    multibracket_tensor,
)
from .enveloping import (  # noqa: E402
    DegreeOverflowError,
    PolyMatrix,
    Polynomial,
    UEAElement,
    gutt_star,
    kirillov_bracket,
    moyal_star,
    normal_form,
    poly_matrix_multiply,
    realize,
    symmetrize,
    uea_multiply,
    unsymmetrize,
)
from .dynamics import (  # noqa: E402
    FlowState,
    HamiltonianSlot,
    IntegrationAborted,
    binary_bracket_matrix,
    evolve_classical,
    evolve_quantum,
    leibniz_multibracket,
    multibracket_matrix,
)
from .branes import (  # noqa: E402
    BraneStack,
    HamiltonianFamily,
    build_hamiltonians,
    orientation_flows,
    separate_brane,
    string_spectrum,
    transverse_lagrangian,
)

__version__ = "0.1.0"

DEFAULT_TOL = 1e-12
DEFAULT_SOLVER_TOL = 1e-10
DEFAULT_MAX_ITERS = 1_000_000
DEFAULT_SEED = 0
DEFAULT_TRIALS = 1000
DEFAULT_VERIFY_TOL = 1e-9
MAX_ROOT_ITERATIONS = 500

# Denominators below this are treated as degenerate when estimating d from a probe.
D_ESTIMATE_THRESHOLD = 1e-8

NAMED_POLYTOPES = (
    "icosahedron",
    "dodecahedron",
    "cell24",
    "cell600",
    "cell120",
)

SCHEME_GEOMETRIES = ("ball", "sphere")

SWEEPS = ("jacobi", "gauss_seidel")

SUBCOMMANDS = (
    "compute",
    "gamma-median",
    "verify-set",
    "amvp",
    "solve",
    "verify-walsh",
    "verify-trig",
    "quintic-check",
)

# Exit statuses of the command line.
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

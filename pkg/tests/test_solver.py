import numpy as np
import pytest
from pydantic import ValidationError

from pavg.services.fields import get_field
from pavg.services.operators import game_p_laplacian
from pavg.services.solver import (
    BOUNDARY_STRIP,
    INTERIOR,
    Domain,
    TabulatedBoundary,
    build_d4_lattice,
    build_triangular_lattice,
    error_report,
    jacobi_step,
    scheme_residual,
    solve_dirichlet,
    write_solution_csv,
)

LINEAR = get_field("linear_x1").value
RE_Z2 = get_field("re_z2").value


@pytest.fixture(scope="module")
def small_disk():
    return build_triangular_lattice(Domain.ball([0.0, 0.0], 0.3), 0.05)


@pytest.fixture(scope="module")
def small_d4():
    return build_d4_lattice(Domain.ball([0.0, 0.0, 0.0, 0.0], 1.0), 0.25)


def _neighbors(lattice, row):
    return lattice.nodes[lattice.adjacency[row]] - lattice.nodes[lattice.interior_index[row]]


# --- domains ----------------------------------------------------------------


def test_domain_validation():
    with pytest.raises(ValidationError):
        Domain.box([0.0, 1.0], [1.0, 0.5])
    with pytest.raises(ValidationError):
        Domain.ball([0.0, 0.0], -1.0)
    with pytest.raises(ValidationError):
        Domain.model_validate(
            {"regions": [{"kind": "ball", "center": [0, 0], "radius": 1}, {"kind": "box", "lower": [0], "upper": [1]}]}
        )
    union = Domain.model_validate(
        {"regions": [{"kind": "ball", "center": [0, 0], "radius": 1}, {"kind": "box", "lower": [1, 0], "upper": [3, 1]}]}
    )
    assert union.contains(np.array([[2.5, 0.5], [0.0, -0.9], [2.5, -0.5]])).tolist() == [True, True, False]


# --- triangular lattice -----------------------------------------------------


def test_triangular_lattice_on_the_unit_disk():
    lattice = build_triangular_lattice(Domain.ball([0.0, 0.0], 1.0), 0.05)
    assert lattice.adjacency.shape[1] == 6
    for row in range(0, lattice.interior_index.size, 97):
        distances = np.linalg.norm(_neighbors(lattice, row), axis=1)
        np.testing.assert_allclose(distances, 0.05, atol=1e-12)
    assert lattice.neighbor_distance == pytest.approx(0.05)
    inside = Domain.ball([0.0, 0.0], 1.0).contains(lattice.nodes)
    assert np.array_equal(inside, lattice.interior)


def test_square_has_strip_nodes_on_every_side():
    lattice = build_triangular_lattice(Domain.box([0.0, 0.0], [1.0, 1.0]), 0.1)
    strip = lattice.nodes[lattice.strip_index]
    assert np.any(strip[:, 0] < 0) and np.any(strip[:, 0] > 1)
    assert np.any(strip[:, 1] < 0) and np.any(strip[:, 1] > 1)
    assert set(lattice.node_class) == {INTERIOR, BOUNDARY_STRIP}


def test_strip_nodes_stay_near_the_domain(small_disk):
    strip = small_disk.nodes[small_disk.strip_index]
    distance_to_disk = np.linalg.norm(strip, axis=1) - 0.3
    assert np.all(distance_to_disk > 0)
    assert np.all(distance_to_disk <= 2 * 0.05)


def test_lattice_rejects_tiny_domains_and_bad_stencils():
    with pytest.raises(ValueError, match="domain too small"):
        build_triangular_lattice(Domain.ball([0.3, 0.3], 0.01), 0.05)
    with pytest.raises(ValueError, match="domain too small"):
        build_triangular_lattice(Domain.ball([0.0, 0.0], 0.01), 0.05)
    with pytest.raises(ValueError, match="domain too small"):
        build_d4_lattice(Domain.box([0.0] * 4, [0.1] * 4), 0.25)
    with pytest.raises(ValueError, match="tessellate"):
        build_triangular_lattice(Domain.ball([0.0, 0.0], 1.0), 0.05, k=3)
    with pytest.raises(ValueError):
        build_triangular_lattice(Domain.ball([0.0, 0.0, 0.0], 1.0), 0.05)
    with pytest.raises(ValueError):
        build_triangular_lattice(Domain.ball([0.0, 0.0], 1.0), 0.0)


def test_colors_separate_stencil_neighbors(small_disk):
    interior_row = {int(i): r for r, i in enumerate(small_disk.interior_index)}
    for row, neighbors in enumerate(small_disk.adjacency):
        for j in neighbors:
            if int(j) in interior_row:
                assert small_disk.colors[row] != small_disk.colors[interior_row[int(j)]]


# --- D4 lattice -------------------------------------------------------------


def test_d4_lattice_geometry(small_d4):
    assert small_d4.adjacency.shape[1] == 24
    for row in range(small_d4.interior_index.size):
        np.testing.assert_allclose(np.linalg.norm(_neighbors(small_d4, row), axis=1), np.sqrt(2) * 0.25, atol=1e-12)
    coords = np.rint(small_d4.nodes / 0.25).astype(int)
    assert np.all(coords.sum(axis=1) % 2 == 0)
    assert small_d4.neighbor_distance == pytest.approx(np.sqrt(2) * 0.25)
    with pytest.raises(ValueError):
        build_d4_lattice(Domain.ball([0.0, 0.0], 1.0), 0.25)


# --- scheme residual --------------------------------------------------------


def test_scheme_residual_examples(small_disk):
    u_const = np.full(small_disk.nodes.shape[0], 3.0)
    constant = get_field("constant:3").value
    for node in (int(small_disk.interior_index[0]), int(small_disk.strip_index[0])):
        assert scheme_residual(small_disk, u_const, node, 4, constant) == pytest.approx(0.0, abs=1e-12)

    u_linear = LINEAR(small_disk.nodes)
    node = int(small_disk.interior_index[5])
    assert scheme_residual(small_disk, u_linear, node, 4, LINEAR) == pytest.approx(0.0, abs=1e-9)

    u_sq = np.sum(small_disk.nodes**2, axis=1)
    assert scheme_residual(small_disk, u_sq, node, 2, LINEAR) == pytest.approx(-2.0, abs=1e-9)


def test_scheme_residual_in_four_dimensions(small_d4):
    u_sq = np.sum(small_d4.nodes**2, axis=1)
    node = int(small_d4.interior_index[0])
    assert scheme_residual(small_d4, u_sq, node, 2, LINEAR) == pytest.approx(-4.0, abs=1e-9)


def test_scheme_residual_approximates_the_game_laplacian():
    field = get_field("sin_x1_plus_x2_sq")
    lattice = build_triangular_lattice(Domain.ball([0.3, 0.4], 0.02), 0.002)
    u = field.value(lattice.nodes)
    rows = lattice.interior_index
    node = int(rows[np.argmin(np.linalg.norm(lattice.nodes[rows] - [0.3, 0.4], axis=1))])
    point = lattice.nodes[node]
    expected = -game_p_laplacian(field.gradient(point), field.hessian(point), 4)
    assert scheme_residual(lattice, u, node, 4, field.value) == pytest.approx(expected, abs=1e-2)


# --- Dirichlet solves -------------------------------------------------------


def test_linear_boundary_on_the_unit_disk():
    lattice = build_triangular_lattice(Domain.ball([0.0, 0.0], 1.0), 0.05)
    report = solve_dirichlet(lattice, LINEAR, 4, tol=1e-12, sweep="gauss_seidel", reference=LINEAR)
    assert report.converged is True
    assert report.comparison_held is True
    assert report.final_update_norm <= 1e-12
    assert report.sup_error_vs_reference <= 1e-8


def test_linear_boundary_with_jacobi(small_disk):
    report = solve_dirichlet(small_disk, LINEAR, 3.5, tol=1e-12, reference=LINEAR)
    assert report.converged and report.comparison_held
    assert report.sup_error_vs_reference <= 1e-9


def test_re_z2_is_reproduced_with_p2(small_disk):
    report = solve_dirichlet(small_disk, RE_Z2, 2, tol=1e-12, reference=RE_Z2)
    assert report.converged and report.comparison_held
    assert report.sup_error_vs_reference <= 1e-7


def test_constant_boundary_converges_at_once(small_disk):
    report = solve_dirichlet(small_disk, get_field("constant:5").value, 4)
    assert report.iterations == 1
    np.testing.assert_allclose(report.solution, 5.0, atol=1e-14)


@pytest.mark.parametrize("p", [2.0, 4.0, 7.0, np.inf])
def test_comparison_principle_holds_every_run(small_disk, p):
    report = solve_dirichlet(small_disk, get_field("step_tanh").value, p, tol=1e-9)
    interior = report.solution[small_disk.interior_index]
    strip = report.solution[small_disk.strip_index]
    assert report.comparison_held is True
    assert strip.min() - 1e-12 <= interior.min() and interior.max() <= strip.max() + 1e-12


def test_four_dimensional_solve(small_d4):
    report = solve_dirichlet(small_d4, LINEAR, 4, tol=1e-12, reference=LINEAR)
    assert report.converged and report.comparison_held
    assert report.sup_error_vs_reference <= 1e-9


def test_non_convergence_is_reported_not_raised(small_disk):
    report = solve_dirichlet(small_disk, RE_Z2, 4, tol=1e-14, max_iters=3)
    assert report.converged is False
    assert report.iterations == 3
    assert report.final_update_norm > 1e-14


def test_solver_rejects_bad_arguments(small_disk):
    with pytest.raises(ValueError):
        solve_dirichlet(small_disk, LINEAR, 4, tol=0)
    with pytest.raises(ValueError):
        solve_dirichlet(small_disk, LINEAR, 4, sweep="sor")
    with pytest.raises(ValueError):
        solve_dirichlet(small_disk, lambda x: np.full(len(x), np.nan), 4)


def test_monotone_in_boundary_data(small_disk):
    rng = np.random.default_rng(41)
    base = get_field("sin_x1_plus_x2_sq").value
    first = solve_dirichlet(small_disk, base, 4, tol=1e-11).solution
    for _ in range(5):
        centre = rng.uniform(-0.4, 0.4, 2)
        height = float(rng.uniform(0.1, 1.0))

        def raised(points, centre=centre, height=height):
            return base(points) + height * np.exp(-np.sum((points - centre) ** 2, axis=1) / 0.01)

        second = solve_dirichlet(small_disk, raised, 4, tol=1e-11).solution
        interior = small_disk.interior_index
        assert np.all(second[interior] >= first[interior] - 1e-9)


def test_jacobi_step_is_sup_norm_nonexpansive(small_disk):
    rng = np.random.default_rng(42)
    size = small_disk.nodes.shape[0]
    for _ in range(500):
        p = float(rng.choice([1.5, 2.0, 3.0, 4.0, 6.0, np.inf]))
        u = rng.uniform(-1, 1, size)
        v = u + rng.uniform(-0.3, 0.3, size)
        gap = np.max(np.abs(jacobi_step(small_disk, u, p) - jacobi_step(small_disk, v, p)))
        assert gap <= np.max(np.abs(u - v)) + 1e-10


def test_jacobi_is_deterministic(small_disk):
    first = solve_dirichlet(small_disk, RE_Z2, 4, tol=1e-10).solution
    second = solve_dirichlet(small_disk, RE_Z2, 4, tol=1e-10).solution
    assert np.array_equal(first, second)


# --- reports and artifacts --------------------------------------------------


def test_error_report(small_disk):
    exact = RE_Z2(small_disk.nodes)
    assert error_report(small_disk, exact, RE_Z2).to_dict() == {"sup_error": 0.0, "l2_error": 0.0}
    shifted = error_report(small_disk, exact + 0.25, RE_Z2)
    assert shifted.sup_error == pytest.approx(0.25)
    assert shifted.l2_error == pytest.approx(0.25)


def test_tabulated_boundary_uses_nearest_point():
    table = TabulatedBoundary([[0.0, 0.0], [1.0, 0.0]], [2.0, 7.0])
    assert table(np.array([[0.2, 0.1], [0.9, -0.3]])).tolist() == [2.0, 7.0]
    with pytest.raises(ValueError):
        TabulatedBoundary([[0.0, 0.0]], [1.0, 2.0])


def test_write_solution_csv(tmp_path, small_disk):
    report = solve_dirichlet(small_disk, LINEAR, 4, tol=1e-10)
    path = tmp_path / "solution.csv"
    write_solution_csv(small_disk, report, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,value,node_class"
    assert len(lines) == 1 + small_disk.nodes.shape[0]
    assert {line.rsplit(",", 1)[1] for line in lines[1:]} == {INTERIOR, BOUNDARY_STRIP}

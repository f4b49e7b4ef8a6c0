import logging
import math
from typing import Any, Dict, Optional

from pavg.enums.constants import DEFAULT_VERIFY_TOL
from pavg.services import algebra
from pavg.services.helpers.artifacts import write_csv_atomic
from pavg.services.operators import amvp_sweep, scheme_constant
from pavg.services.paverage import (
    WeightedSample,
    four_average_closed_form,
    gamma_median,
    p_average,
    p_limit_to_gamma_median,
    read_sample_csv,
)
from pavg.services.polytopes import (
    export_vectors_csv,
    parse_set_spec,
    verify_averaging_set,
    verify_averaging_set_exact,
)
from pavg.services.run_config import ProblemConfig, RunConfig, load_probe, load_problem
from pavg.services.solver import (
    build_d4_lattice,
    build_triangular_lattice,
    solve_dirichlet,
    write_solution_csv,
)

logger = logging.getLogger("pavg.run")

DEFAULT_AMVP_TOL = 1e-6


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    return None if value is None or not math.isfinite(value) else value


class RunService:
    """Routes a validated RunConfig to the module that owns the subcommand."""

    def dispatch(self, config: RunConfig) -> Dict[str, Any]:
        handlers = {
            "compute": self.compute,
            "gamma-median": self.gamma_median,
            "verify-set": self.verify_set,
            "amvp": self.amvp,
            "solve": self.solve,
            "verify-walsh": self.verify_walsh,
            "verify-trig": self.verify_trig,
            "quintic-check": self.quintic_check,
        }
        handler = handlers.get(config.subcommand)
        if handler is None:
            return {"error": "Unhandled subcommand"}
        logger.info("dispatching %s", config.subcommand)
        try:
            report = handler(config)
        except ValueError as exc:
            logger.warning("%s failed: %s", config.subcommand, exc)
            return {"error": str(exc)}
        return {"subcommand": config.subcommand, **report}

    def _sample(self, config: RunConfig) -> WeightedSample:
        if config.values_path is not None:
            return read_sample_csv(config.values_path)
        if config.values:
            return WeightedSample.of(config.values, config.weights)
        raise ValueError("values: provide a values file or an inline list")

    def compute(self, config: RunConfig) -> Dict[str, Any]:
        """p-average, dispersion y residuo de una muestra ponderada."""
        sample = self._sample(config)
        p = config.p if config.p is not None else 2.0
        kwargs = {} if config.tol is None else {"tol": config.tol}
        result = p_average(sample, p, **kwargs)
        report: Dict[str, Any] = {"p": "inf" if math.isinf(p) else p, "size": int(sample.values.size), **result.to_dict()}
        if p == 4.0:
            report["closed_form"] = four_average_closed_form(sample)
            report["closed_form_gap"] = abs(report["closed_form"] - result.value)
        report["pass"] = True
        return report

    def gamma_median(self, config: RunConfig) -> Dict[str, Any]:
        """Mediana gamma y, opcionalmente, la sucesion de p-averages hacia ella."""
        values = config.values
        if values is None and config.values_path is not None:
            values = read_sample_csv(config.values_path).values.tolist()
        if not values:
            raise ValueError("values: gamma-median needs an even, sorted list of values")
        median = gamma_median(values)
        report: Dict[str, Any] = {"values": list(values), "gamma_median": median, "pass": True}
        if config.p_sequence:
            averages = p_limit_to_gamma_median(values, config.p_sequence)
            report["p_sequence"] = list(config.p_sequence)
            report["p_averages"] = averages
            report["final_gap"] = abs(averages[-1] - median)
        return report

    def verify_set(self, config: RunConfig) -> Dict[str, Any]:
        """Verifica la identidad de conjunto p-promediador con sondas aleatorias."""
        if not config.set:
            raise ValueError("set: a set specification is required")
        directions = parse_set_spec(config.set)
        if config.normalize:
            directions = directions.normalized()
        p = config.p
        tol = DEFAULT_VERIFY_TOL if config.tol is None else config.tol
        report = verify_averaging_set(directions, p, config.trials, tol, config.seed)
        report["set_summary"] = directions.summary()
        if config.normalize and report["p"] == directions.exponent:
            n = directions.dimension
            report["implied_scheme_constant"] = report["d_estimate"] / 2.0
            report["sphere_scheme_constant"] = float(scheme_constant(report["p"], n, "sphere"))
        if config.exact:
            exact = verify_averaging_set_exact(directions, p, seed=config.seed)
            report["exact"] = exact
            report["pass"] = report["pass"] and exact["pass"]
        if config.export_path:
            export_vectors_csv(directions, config.export_path)
        return report

    def amvp(self, config: RunConfig) -> Dict[str, Any]:
        """Barrido en epsilon de la estimacion discreta del p-Laplaciano de juego."""
        if not config.set:
            raise ValueError("set: a set specification is required")
        probe_config = config.probe or (load_probe(config.probe_path) if config.probe_path else None)
        if probe_config is None:
            raise ValueError("probe: provide a probe file or an inline probe")
        directions = parse_set_spec(config.set)
        if config.normalize:
            directions = directions.normalized()
        eps_list = [config.eps * 2.0**-i for i in range(config.halvings)]
        sweep = amvp_sweep(probe_config.to_probe(), directions, eps_list, config.p)
        tol = DEFAULT_AMVP_TOL if config.tol is None else config.tol
        report = sweep.to_dict()
        report["set"] = directions.label
        report["p"] = directions.exponent if config.p is None else config.p
        report["tol"] = tol
        report["pass"] = sweep.extrapolation_error is None or sweep.extrapolation_error <= tol
        if config.out_path:
            write_csv_atomic(config.out_path, ["epsilon", "estimate"], zip(sweep.epsilons, sweep.estimates))
        return report

    def solve(self, config: RunConfig) -> Dict[str, Any]:
        """Resuelve el problema de Dirichlet descrito en el fichero de problema."""
        problem: Optional[ProblemConfig] = config.problem
        if problem is None and config.config_path:
            problem = load_problem(config.config_path)
        if problem is None:
            raise ValueError("config: a problem file is required")
        if problem.dimension == 2:
            lattice = build_triangular_lattice(problem.domain, problem.epsilon, problem.k)
        else:
            lattice = build_d4_lattice(problem.domain, problem.epsilon)

        result = solve_dirichlet(
            lattice,
            problem.boundary_fn(),
            problem.p,
            tol=problem.tol,
            max_iters=problem.max_iters,
            sweep=problem.sweep,
            reference=problem.reference_fn(),
        )
        if config.out_path:
            write_solution_csv(lattice, result, config.out_path)
        interior = result.solution[lattice.interior_index]
        report = result.to_dict()
        report.update(
            {
                "lattice": lattice.summary(),
                "epsilon_convention": "common neighbor distance",
                "scheme_epsilon": lattice.neighbor_distance,
                "scheme_constant": str(scheme_constant(problem.p, lattice.dimension, "sphere")),
                "interior_min": float(interior.min()),
                "interior_max": float(interior.max()),
                "final_update_norm": _finite_or_none(result.final_update_norm),
                "pass": result.converged and result.comparison_held,
            }
        )
        return report

    def verify_walsh(self, config: RunConfig) -> Dict[str, Any]:
        return algebra.verify_walsh(config.degree, config.trials, config.seed)

    def verify_trig(self, config: RunConfig) -> Dict[str, Any]:
        return algebra.verify_trig(config.kmax, seed=config.seed)

    def quintic_check(self, config: RunConfig) -> Dict[str, Any]:
        if config.values:
            if any(not float(v).is_integer() for v in config.values):
                raise ValueError("values: quintic-check takes integer values")
            return algebra.quintic_check([int(v) for v in config.values])
        return algebra.quintic_check()

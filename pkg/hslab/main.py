#!/usr/bin/env python3
# Copyright 2025 R5 Labs
# This file is part of the hslab toolkit.
#
# This software is provided "as is", without warranty of any kind,
# express or implied, including but not limited to the warranties
# of merchantability, fitness for a particular purpose and
# noninfringement. In no event shall the authors or copyright
# holders be liable for any claim, damages, or other liability,
# whether in an action of contract, tort or otherwise, arising
# from, out of or in connection with the software or the use or
# other dealings in the software.
"""
hslab - command-line driver.

Subcommands:
  constants    sharp constants, thresholds and their extended-precision error
  integrals    I(alpha, beta): quadrature, closed form and both recurrences
  bubble       profile, PDE residual, energies and sharp quotient of a bubble
  expansion    energy of glued test functions as eps -> 0, fitted and checked
  solve        Nehari-constrained minimisation with multistart
  decompose    synthetic bubble sequences: energy identity and extraction
  sweep        constants table over a lambda grid
  init-config  write the default hslab.ini

Exit status: 0 on success, 1 on computational diagnostics (the reports are
still written), 2 on usage and parameter errors.
"""

import functools
import logging
import math
import os
import sys

import numpy as np

from hslab.bubbles import BubbleKind, BubbleProfile, Functional
from hslab.bubbles import energy as bubble_energy
from hslab.bubbles import evaluate, residual, residual_fd, sharp_quotient
from hslab.config import DEFAULT_INI, RunConfig, parse_config, solver_settings
from hslab.constants import (ProblemParams, compute_constants, compute_constants_mp,
                             sobolev_constant_variants, threshold_beta_star, threshold_variants)
from hslab.decomposition import GlueSpec, decompose, default_scales
from hslab.errors import LabError
from hslab.expansion import (ExpansionVerdict, default_delta, default_eps_grid,
                             existence_conditions, params_for, run_expansion, seed_fields)
from hslab.grid import DEFAULT_FIRST_NODE, RadialGrid
from hslab.manifold import PotentialField, SphereModel
from hslab.quadrature import (IntegralSpec, closed_form_I, compute_I, recurrence_alpha,
                              recurrence_beta, sample_specs)
from hslab.report import emit, read_columns, value_with_error
from hslab.solver import (Classification, SolverConfig, coercivity_check, discrete_energy,
                          multistart, nehari_project, relative_spread, residual_norm)
from hslab.workers import ordered_map

logger = logging.getLogger("hslab")

RECURRENCE_TOL = 1e-9

CONSTANTS_COLUMNS = ["n", "lambda", "k_sobolev", "k_hardy", "a", "omega", "q_sharp",
                     "d_star", "D_star", "beta_star"]
INTEGRALS_COLUMNS = ["alpha", "beta", "a", "direct", "closed_form", "recurrence_alpha",
                     "rel_err_alpha", "recurrence_beta", "direct_beta", "rel_err_beta"]
BUBBLE_COLUMNS = ["r", "U", "residual"]
EXPANSION_COLUMNS = ["eps", "grad_integral", "hardy_integral", "crit_integral", "energy"]
SOLUTION_COLUMNS = ["r", "u"]
DECOMPOSITION_COLUMNS = ["scale", "total_energy", "background_energy", "sum_bubble_energies",
                         "interaction_energy", "remainder_energy_norm", "brezis_lieb_defect"]
SWEEP_COLUMNS = ["n", "lambda", "a", "d_star", "D_star", "q_sharp", "beta_star",
                 "quotient_measured", "quotient_rel_err"]


def handle_error(msg, code=1):
    print(f"Error: {msg}", file=sys.stderr)
    sys.exit(code)


def setup_logging(level):
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(message)s",
        datefmt="%d-%m|%H:%M:%S",
        force=True,
    )


def _rel_err(value, reference):
    if value is None or reference is None:
        return None
    return abs(value - reference) / abs(reference)


def _model_and_potential(p):
    model = SphereModel(p["n"], p["sphere_radius"])
    pot = PotentialField(p["n"], p["h0"], p["h2"], p["delta_cap"])
    return model, pot


# ----- constants -----

def cmd_constants(config):
    p = config.parameters
    params = ProblemParams(p["n"], p["lambda"])
    consts = compute_constants(params)
    beta = threshold_beta_star(params)
    mp = compute_constants_mp(params)
    errors = {key: abs(value - float(mp[key])) for key, value in consts.as_dict().items()}
    row = [params.n, params.lam, *consts.as_dict().values(), beta]
    payload = {
        **consts.as_dict(),
        "beta_star": beta,
        "sign_changing_bound": consts.sign_changing_bound,
        "extended_precision_error": errors,
        "threshold_variants": threshold_variants(params),
        "sobolev_constant_variants": sobolev_constant_variants(params.n),
    }
    emit(config, "constants", CONSTANTS_COLUMNS, [row], payload)
    logger.info("constants: n=%d lambda=%.6g D*=%.12g d*=%.12g", params.n, params.lam,
                consts.D_star, consts.d_star)
    return 0


# ----- integrals -----

def _integral_row(spec, rel_tol):
    direct = compute_I(spec, rel_tol)
    closed = closed_form_I(spec)
    rec_a = rec_b = direct_b = None
    if spec.alpha > 2.0 * spec.a - 1.0:
        rec_a = recurrence_alpha(spec, rel_tol)
        if spec.beta > 1.0:
            rec_b = recurrence_beta(spec, rel_tol)
            direct_b = compute_I(IntegralSpec(spec.alpha - 2.0 * spec.a, spec.beta - 1.0, spec.a),
                                 rel_tol)
    return [spec.alpha, spec.beta, spec.a, direct, closed, rec_a, _rel_err(rec_a, direct),
            rec_b, direct_b, _rel_err(rec_b, direct_b)]


def cmd_integrals(config):
    p = config.parameters
    specs = [IntegralSpec(p["alpha"], p["beta"], p["a"])] + sample_specs(p["samples"], p["seed"])
    rows = ordered_map(functools.partial(_integral_row, rel_tol=p["rel_tol"]), specs,
                       config.workers)
    errs = [e for row in rows for e in (row[6], row[9]) if e is not None]
    closed_errs = [_rel_err(row[3], row[4]) for row in rows]
    worst = max(errs, default=0.0)
    payload = {
        "rows": [dict(zip(INTEGRALS_COLUMNS, row)) for row in rows],
        "max_recurrence_rel_err": worst,
        "max_closed_form_rel_err": max(closed_errs),
        "tolerance": RECURRENCE_TOL,
    }
    emit(config, "integrals", INTEGRALS_COLUMNS, rows, payload)
    if worst > RECURRENCE_TOL:
        handle_error(f"recurrence mismatch {worst:.3g} exceeds {RECURRENCE_TOL:g}", 1)
    return 0


# ----- bubble -----

def cmd_bubble(config):
    p = config.parameters
    params = ProblemParams(p["n"], p["lambda"])
    profile = BubbleProfile(params, p["mu"], p["kind"])
    consts = compute_constants(params)
    r = np.geomspace(p["r_min"], p["r_max"], p["points"])
    values = np.asarray(evaluate(profile, r))
    res = np.asarray(residual(profile, r))
    res_fd = np.asarray(residual_fd(profile, r))
    quotient = sharp_quotient(profile, p["rel_tol"])
    energies = {Functional.J_INFINITY.value: bubble_energy(profile, Functional.J_INFINITY,
                                                           p["rel_tol"]).as_dict()}
    if profile.kind is BubbleKind.STANDARD:
        energies[Functional.J.value] = bubble_energy(profile, Functional.J, p["rel_tol"]).as_dict()
    payload = {
        "amplitude": profile.amplitude,
        "a": profile.a,
        "residual_sup": float(np.max(np.abs(res))),
        "residual_fd_relative_sup": float(np.max(np.abs(res_fd))),
        "energies": energies,
        "quotient": quotient,
        "q_sharp": consts.q_sharp,
        "quotient_rel_err": _rel_err(quotient, consts.q_sharp),
        "energy_from_quotient": quotient ** (params.n / 2.0) / params.n,
        "D_star": consts.D_star,
        "k_from_quotient": 1.0 / math.sqrt(quotient) if params.lam == 0.0 else None,
    }
    emit(config, "bubble", BUBBLE_COLUMNS, zip(r.tolist(), values.tolist(), res.tolist()), payload)
    logger.info("bubble: residual sup %.3g, quotient rel err %.3g", payload["residual_sup"],
                payload["quotient_rel_err"])
    return 0


# ----- expansion -----

def cmd_expansion(config):
    p = config.parameters
    model, pot = _model_and_potential(p)
    delta = default_delta(model) if p["delta"] is None else p["delta"]
    report = run_expansion(model, pot, delta, p["eps_count"], p["fit_points"], p["rel_tol"],
                           config.workers)
    verdict = existence_conditions(model, pot)
    rows = [[pt.eps, pt.grad, pt.hardy, pt.crit, pt.energy] for pt in report.points]
    payload = {
        "delta": delta,
        "expansion": report.as_dict(),
        "existence": verdict.as_dict(),
        "fit_residual": report.fit.rms_residual,
    }
    emit(config, "expansion", EXPANSION_COLUMNS, rows, payload)
    if report.verdict is not ExpansionVerdict.BELOW_D_STAR:
        handle_error(f"expansion inconclusive: fitted slope {report.fit.slope:.6g}, "
                     f"fit residual {report.fit.rms_residual:.3g}, "
                     f"fit quality {report.fit.quality:.3g}", 1)
    return 0


# ----- solve -----

BACKGROUND_SEEDS = 3


def _first_node(p, eps_min):
    return p["first_node"] if p["first_node"] is not None else min(DEFAULT_FIRST_NODE,
                                                                   eps_min / 100.0)


def _solve_on(grid, pot, delta, count, solver_config, workers):
    params = params_for(pot)
    seeds = seed_fields(grid, params, delta, count)
    best, results = multistart(seeds, pot, params, solver_config, workers)
    return seeds, best, results


def _acceptance_failures(best, results, solver_config):
    failures = []
    if not best.coercive or best.classification is Classification.NONPOSITIVE:
        failures.append(f"no minimiser: coercive={best.coercive}, "
                        f"classification={best.classification.value}")
    if not best.residual_norm <= solver_config.residual_tol:
        failures.append(f"residual {best.residual_norm:.3g} above {solver_config.residual_tol:.3g}")
    spread = relative_spread(results)
    if len(results) > 1 and not spread <= solver_config.agreement_tol:
        failures.append(f"multistart relative spread {spread:.3g} above "
                        f"{solver_config.agreement_tol:.3g}")
    return failures


def cmd_solve(config):
    p = config.parameters
    model, pot = _model_and_potential(p)
    params = params_for(pot)
    delta = default_delta(model) if p["delta"] is None else p["delta"]
    eps_min = default_eps_grid(delta, p["seeds"])[-1] / model.radius
    grid = RadialGrid.build(model, p["nodes"], _first_node(p, eps_min))
    solver_config = solver_settings(p)
    seeds, best, results = _solve_on(grid, pot, delta, p["seeds"], solver_config, config.workers)
    seed_energies = [discrete_energy(nehari_project(s, pot), pot).total for s in seeds]
    failures = _acceptance_failures(best, results, solver_config)
    payload = {
        "result": best.as_dict(),
        "energy": value_with_error(best.energy, best.residual_norm),
        "D_star": compute_constants(params).D_star,
        "grid": grid.grading,
        "coercivity": coercivity_check(grid, pot),
        "seed_energies": seed_energies,
        "below_every_seed": all(best.energy <= e for e in seed_energies),
        "multistart": {
            "energies": [r.energy for r in results],
            "residuals": [r.residual_norm for r in results],
            "diagnostics": [r.diagnostic for r in results],
            "relative_spread": relative_spread(results),
        },
        "acceptance": {
            "residual_tol": solver_config.residual_tol,
            "agreement_tol": solver_config.agreement_tol,
            "failures": failures,
        },
        "existence": existence_conditions(model, pot, best.energy).as_dict(),
    }
    emit(config, "solution", SOLUTION_COLUMNS, best.minimizer.rows(), payload)
    if failures:
        handle_error("solve not accepted: " + "; ".join(failures), 1)
    return 0


# ----- decompose -----

def _background(p, grid, model, pot, workers):
    """(field, summary) for the decompose background source, (None, None) for none."""
    source = p["background"]
    if source == "none":
        return None, None
    if source == "solve":
        solver_config = SolverConfig()
        _, best, results = _solve_on(grid, pot, default_delta(model), BACKGROUND_SEEDS,
                                     solver_config, workers)
        failures = _acceptance_failures(best, results, solver_config)
        if failures:
            handle_error("background solve not accepted: " + "; ".join(failures), 1)
        field = best.minimizer
    else:
        try:
            r, u = read_columns(source, SOLUTION_COLUMNS)
            field = grid.interpolate(r, u)
        except (OSError, ValueError) as e:
            handle_error(f"cannot load background {source}: {e}", 2)
    return field, {
        "source": source,
        "energy": discrete_energy(field, pot).total,
        "residual_norm": residual_norm(field, pot),
    }


def cmd_decompose(config):
    p = config.parameters
    model, pot = _model_and_potential(p)
    scales = default_scales(p["scale_first"], p["scale_last"])
    specs = [GlueSpec(scale=scales[0] ** s.get("scale_power", 1.0), **s) for s in p["bubbles"]]
    powers = [s.scale_power for s in specs] or [1.0]
    eps_min = min(scales[-1] ** q for q in powers) / model.radius
    grid = RadialGrid.build(model, p["nodes"], _first_node(p, eps_min))
    background, summary = _background(p, grid, model, pot, config.workers)
    report = decompose(grid, pot, specs, scales, background, p["gamma"], p["n_angles"],
                       p["extract"], config.workers)
    payload = {
        "decomposition": report.as_dict(),
        "background": summary,
        "D_star": compute_constants(ProblemParams(pot.n, pot.h0)).D_star,
        "grid": grid.grading,
    }
    emit(config, "decomposition", DECOMPOSITION_COLUMNS, [r.csv_row() for r in report.rows],
         payload)
    if not report.remainder_decreasing:
        handle_error("remainder energy does not decrease along the scale sequence", 1)
    return 0


# ----- sweep -----

def _sweep_row(point, measure, rel_tol):
    n, ratio = point
    params = ProblemParams.from_ratio(n, ratio)
    consts = compute_constants(params)
    quotient = err = None
    if measure:
        kind = BubbleKind.STANDARD if params.lam == 0.0 else BubbleKind.SINGULAR
        quotient = sharp_quotient(BubbleProfile(params, 1.0, kind), rel_tol)
        err = _rel_err(quotient, consts.q_sharp)
    return [n, params.lam, consts.a, consts.d_star, consts.D_star, consts.q_sharp,
            threshold_beta_star(params), quotient, err]


def cmd_sweep(config):
    p = config.parameters
    ratios = np.linspace(0.0, p["ratio_max"], p["lambda_points"]).tolist()
    points = [(n, t) for n in p["n"] for t in ratios]
    task = functools.partial(_sweep_row, measure=p["measure_quotient"], rel_tol=p["rel_tol"])
    rows = ordered_map(task, points, config.workers)

    failures = []
    for n in p["n"]:
        block = [row for row in rows if row[0] == n]
        d_stars = [row[4] for row in block]
        if any(b >= a for a, b in zip(d_stars, d_stars[1:])):
            failures.append(f"n={n}: D* not strictly decreasing in lambda")
        if any(row[3] <= row[4] for row in block if row[1] > 0.0):
            failures.append(f"n={n}: d* > D* fails for some lambda > 0")
    errs = [row[8] for row in rows if row[8] is not None]
    payload = {
        "rows": [dict(zip(SWEEP_COLUMNS, row)) for row in rows],
        "max_quotient_rel_err": max(errs) if errs else None,
        "ordering_ok": not failures,
        "failures": failures,
    }
    emit(config, "sweep", SWEEP_COLUMNS, rows, payload)
    if failures:
        handle_error("; ".join(failures), 1)
    return 0


# ----- init-config -----

def cmd_init_config(config):
    path = config.parameters["path"]
    if os.path.exists(path) and not config.parameters["force"]:
        handle_error(f"{path} already exists; use --force to overwrite it", 2)
    with open(path, "w") as f:
        f.write(DEFAULT_INI)
    print(f"Wrote default configuration to {path}.")
    return 0


COMMANDS = {
    "constants": cmd_constants,
    "integrals": cmd_integrals,
    "bubble": cmd_bubble,
    "expansion": cmd_expansion,
    "solve": cmd_solve,
    "decompose": cmd_decompose,
    "sweep": cmd_sweep,
    "init-config": cmd_init_config,
}


def run(config: RunConfig) -> int:
    """Execute one resolved configuration; returns the exit status."""
    return COMMANDS[config.subcommand](config)


def parse_args(argv=None) -> RunConfig:
    return parse_config(argv)


def main(argv=None):
    try:
        config = parse_args(argv)
    except LabError as e:
        handle_error(str(e), e.exit_code)
    setup_logging(config.log_level)
    try:
        status = run(config)
    except LabError as e:
        handle_error(str(e), e.exit_code)
    except OSError as e:
        handle_error(f"cannot write reports: {e}", 1)
    sys.exit(status)


if __name__ == "__main__":
    main()

"""Command-line front end.

Exit codes: 0 converged, 2 not converged, 3 invalid input, 4 divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .baselines import train_dvqe, train_vqe
from .config import (
    ISING2,
    PRESETS,
    TASKS,
    ExperimentConfig,
    config_from_dict,
    parse_config,
    preset_configs,
    serialize,
    validate,
)
from .errors import ConfigError, DimensionError, PreconditionError
from .estimation import (
    hadamard_test,
    sample_plan,
    strategy1_expectation,
    strategy2_expectation,
)
from .gates import AnsatzSpec
from .io import model_from_dict, reference_system_dict, system_from_dict, write_json_atomic, write_text_atomic
from .lcu import complexity_report, run_algorithm, verify_lcu
from .lindblad import build_gradient_operator, liouvillian_square, vectorize
from .linsys import solve_system
from .ness import max_entangled_state, solve_ness
from .pauli import PauliSum, StateVector, apply_to_state

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_INVALID, EXIT_DIVERGED = 0, 2, 3, 4


def _cplx(z) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def emit_summary(cfg: ExperimentConfig, extra: dict, wall_time: float) -> dict:
    params = serialize(cfg)
    doc = {
        "task": cfg.task,
        "params": params,
        "final_objective": extra.pop("final_objective", None),
        "fidelity": extra.pop("fidelity", None),
        "iterations": extra.pop("iterations", None),
        "seed": cfg.rng_seed,
        "wall_time": wall_time,
        "backend": kernels.BACKEND,
    }
    doc.update(extra)
    return doc


def _run_status(run) -> int:
    if run.diverged:
        return EXIT_DIVERGED
    return EXIT_OK if run.converged else EXIT_NOT_CONVERGED


def _task_ness(cfg, out: Path, stem: str):
    model = model_from_dict(cfg.model)
    res = solve_ness(model, cfg.gamma, cfg.qgd_config(), convention=cfg.convention)
    run = res.run
    csv_path = out / f"{stem}.csv"
    write_text_atomic(csv_path, run.trace.to_csv())
    table = {o: _cplx(res.observable(PauliSum.from_string(o.upper())).value)
             for o in cfg.observables}
    diag = dataclasses.asdict(res.diagnostics) if res.diagnostics else None
    extra = {
        "final_objective": run.final_objective,
        "fidelity": run.final_fidelity,
        "iterations": run.iterations_used,
        "converged": run.converged,
        "diverged": run.diverged,
        "divergence_step": run.divergence_step,
        "trace_csv": csv_path.name,
        "diagnostics": diag,
        "degenerate_warning": res.degenerate_warning,
        "trace_of_rho": _cplx(res.trace_of_rho),
        "raw_overlap": _cplx(res.raw_overlap),
        "observables": table,
        "final_state": run.final_state.to_json(),
    }
    return _run_status(run), extra, run.trace.objectives


def _task_linsolve(cfg, out: Path, stem: str):
    system = system_from_dict(cfg.system)
    if cfg.task == "matvec" and system.form != "matvec":
        system = dataclasses.replace(system, form="matvec")
    if cfg.task == "linsolve" and system.form == "matvec":
        raise ConfigError("linsolve needs an extended or projector system")
    ham = system.hamiltonian()
    rep = solve_system(ham, cfg.gamma, cfg.qgd_config(), truth=system.truth(), system=system)
    csv_path = out / f"{stem}.csv"
    write_text_atomic(csv_path, rep.run.trace.to_csv())
    extra = {
        "final_objective": rep.run.final_objective,
        "fidelity": rep.fidelity_to_truth,
        "iterations": rep.run.iterations_used,
        "converged": rep.converged,
        "diverged": rep.run.diverged,
        "residual": rep.residual,
        "trace_csv": csv_path.name,
        "solution": rep.solution.to_json(),
    }
    if rep.run.diverged:
        status = EXIT_DIVERGED
    else:
        status = EXIT_OK if rep.converged else EXIT_NOT_CONVERGED
    return status, extra, rep.run.trace.objectives


def _gradient_operator(cfg):
    model = model_from_dict(cfg.model)
    return model, build_gradient_operator(vectorize(model, cfg.convention), cfg.gamma)


def _task_verify(cfg, out: Path, stem: str):
    model, D = _gradient_operator(cfg)
    init = StateVector.plus(2 * model.n_sites)
    report = verify_lcu(D, init, cfg.lcu_steps)
    res = complexity_report(D, model.n_sites)
    report.update({"qubit_count": res.qubit_count, "gate_estimate": res.gate_estimate,
                   "controlled_pauli_cost": res.controlled_pauli_cost})
    write_json_atomic(out / f"{stem}_report.json", report)
    ok = report["max_state_error"] < 1e-10
    return (EXIT_OK if ok else EXIT_NOT_CONVERGED), report, None


def _task_estimate(cfg, out: Path, stem: str):
    model, D = _gradient_operator(cfg)
    res = solve_ness(model, cfg.gamma, cfg.qgd_config(), convention=cfg.convention)
    rho = res.state
    plan = sample_plan(cfg.epsilon, cfg.delta)
    observables = cfg.observables or ["I" * model.n_sites]
    reports = []
    for k, o in enumerate(observables):
        M = PauliSum.from_string(o.upper())
        for t in range(cfg.trials):
            seed = cfg.rng_seed + 1000 * k + t
            if cfg.protocol == "hadamard":
                left = max_entangled_state(model.n_sites)
                right = apply_to_state(M.tensor(PauliSum.identity(model.n_sites)), rho)
                scale = right.norm()
                est = hadamard_test(cfg.zeta, left, right.normalized(), plan.samples, seed)
                rep = est.to_dict()
                rep.update({"estimate": rep["estimate"] * scale, "exact": rep["exact"] * scale,
                            "error": rep["error"] * scale})
            elif cfg.protocol == "strategy1":
                rep = strategy1_expectation(M, rho, cfg.zeta, plan.samples, seed).to_dict()
            else:
                alg = run_algorithm(D, rho, cfg.lcu_steps)
                rep = strategy2_expectation(M, alg.psi_final, cfg.lcu_steps, D.norm_sq,
                                            D.padded_terms, cfg.zeta, plan.samples, seed).to_dict()
            rep["observable"] = o
            reports.append(rep)
    write_json_atomic(out / f"{stem}_estimates.json", reports)
    extra = {"final_objective": res.run.final_objective, "fidelity": res.run.final_fidelity,
             "iterations": res.run.iterations_used, "samples": plan.samples,
             "estimates": reports}
    return EXIT_OK, extra, None


def _task_baseline(cfg, out: Path, stem: str):
    if cfg.baseline == "dvqe":
        model = model_from_dict(cfg.model)
        if model.n_sites != 2:
            raise ConfigError("the dissipative VQE circuit is defined for 2 sites")
        objective = liouvillian_square(vectorize(model, cfg.convention)).as_hermitian()
        trace = train_dvqe(objective, StateVector.plus(4), cfg.eta, cfg.baseline_steps,
                           cfg.rng_seed)
    else:
        system = system_from_dict(cfg.system)
        ham = system.hamiltonian()
        spec = AnsatzSpec(ham.n_qubits, layers=2, rotations=("ry",), eta=cfg.eta)
        trace = train_vqe(ham, spec, StateVector.plus(ham.n_qubits), cfg.baseline_steps,
                          cfg.rng_seed)
    csv_path = out / f"{stem}.csv"
    write_text_atomic(csv_path, trace.to_csv())
    extra = {"final_objective": trace.losses[-1] if trace.losses else trace.initial_loss,
             "iterations": len(trace), "min_loss": trace.min_loss,
             "argmin_step": trace.argmin_step, "trace_csv": csv_path.name}
    return EXIT_OK, extra, np.array(trace.losses)


HANDLERS = {
    "ness": _task_ness,
    "linsolve": _task_linsolve,
    "matvec": _task_linsolve,
    "verify-lcu": _task_verify,
    "estimate": _task_estimate,
    "baseline": _task_baseline,
}


def run_task(cfg: ExperimentConfig, out: Path, stem: str = None):
    stem = stem or cfg.task.replace("-", "_")
    t0 = time.perf_counter()
    status, extra, series = HANDLERS[cfg.task](cfg, out, stem)
    summary = emit_summary(cfg, dict(extra), time.perf_counter() - t0)
    write_json_atomic(out / f"{stem}_summary.json", summary)
    return status, summary, series


def _case_stem(name: str, cfg: ExperimentConfig) -> str:
    if cfg.task == "baseline":
        return f"{name}_{cfg.baseline}"
    if name == "fig3a":
        return f"{name}_ideal" if cfg.noise_v0 == 0 else f"{name}_v0_{cfg.noise_v0:g}"
    if name == "fig3b":
        return f"{name}_gamma_{cfg.gamma:g}"
    return f"{name}_{cfg.task}"


def run_experiment(name: str, out: Path, seed: int = None) -> int:
    """Run every sub-case of a preset; writes CSVs, summaries and a gnuplot file."""
    cases = preset_configs(name, seed)
    out.mkdir(parents=True, exist_ok=True)
    worst = EXIT_OK
    columns, summaries = [], {}
    probe = None
    for cfg in cases:
        stem = _case_stem(name, cfg)
        status, summary, series = run_task(cfg, out, stem)
        summaries[stem] = {k: summary[k] for k in
                           ("final_objective", "fidelity", "iterations", "seed")}
        summaries[stem]["status"] = status
        is_probe = name == "fig3b" and cfg.gamma == 2.0
        if is_probe:
            probe = summary.get("diverged")
            summaries[stem]["divergence_flag"] = probe
        elif cfg.task != "baseline":
            worst = max(worst, status)
        if series is not None:
            columns.append((stem, series))
    _write_plot(out, name, columns)
    doc = {"preset": name, "cases": summaries}
    if probe is not None:
        doc["divergence_probe_flagged"] = bool(probe)
    write_json_atomic(out / f"{name}_summary.json", doc)
    return worst


def _write_plot(out: Path, name: str, columns):
    length = max((len(s) for _, s in columns), default=0)
    lines = ["# s " + " ".join(stem for stem, _ in columns)]
    for i in range(length):
        row = [str(i + 1)] + [format(float(s[i]), ".17g") if i < len(s) else "nan"
                              for _, s in columns]
        lines.append(" ".join(row))
    write_text_atomic(out / f"{name}.dat", "\n".join(lines) + "\n")
    plots = ", ".join(f"'{name}.dat' using 1:{k + 2} with lines title '{stem}'"
                      for k, (stem, _) in enumerate(columns))
    script = f"set logscale y\nset xlabel 's'\nset ylabel 'f'\nplot {plots}\n"
    write_text_atomic(out / f"{name}.gp", script)


def _default_doc(task: str) -> dict:
    if task in ("linsolve", "matvec"):
        sys_doc = reference_system_dict()
        if task == "matvec":
            sys_doc["form"] = "matvec"
        return {"task": task, "system": sys_doc, "gamma": 0.3, "tolerance": 1e-10}
    if task == "baseline":
        return {"task": task, "model": ISING2}
    return {"task": task, "model": ISING2, "gamma": 0.2, "observables": ["ZI", "XI", "ZZ"]}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgdsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", type=Path, default=None)
    for task in TASKS:
        p = sub.add_parser(task, parents=[common])
        p.add_argument("--config", type=Path, default=None)
        p.add_argument("--convention", choices=("standard", "paper-literal"), default=None)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--max-iters", type=int, default=None)
        p.add_argument("--tolerance", type=float, default=None)
        p.add_argument("--noise", type=float, default=None, dest="noise_v0")
    p = sub.add_parser("experiment", parents=[common])
    p.add_argument("preset", choices=PRESETS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "experiment":
            return run_experiment(args.preset, args.out or Path("out") / args.preset, args.seed)
        if args.config is not None:
            cfg = parse_config(args.config)
            if cfg.task != args.command:
                raise ConfigError(f"config task {cfg.task!r} does not match {args.command!r}")
        else:
            cfg = config_from_dict(_default_doc(args.command))
        overrides = {"rng_seed": args.seed, "convention": args.convention, "gamma": args.gamma,
                     "max_iters": args.max_iters, "tolerance": args.tolerance,
                     "noise_v0": args.noise_v0}
        for key, value in overrides.items():
            if value is not None:
                setattr(cfg, key, value.replace("-", "_") if key == "convention" else value)
        if args.out is not None:
            cfg.output = str(args.out)
        validate(cfg)
        status, summary, _ = run_task(cfg, Path(cfg.output))
        print(f"{cfg.task}: status={status} final_objective={summary['final_objective']}"
              f" iterations={summary['iterations']}")
        return status
    except (ConfigError, PreconditionError, DimensionError) as exc:
        print(f"qgdsim: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``bcw spectrum|simulate|verify-bounds|decay-report``.

Exit codes: 0 when every check passes, 1 when a check was carried out and
failed, 2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .energy import verify_decay
from .errors import BCWError, ConfigError
from .generator import mode_eigenvalues, spectral_bound, triggiani_constant, verify_resolvent_bounds
from .io import load_config, write_energies_csv
from .nonlinear import DEFAULT_SMALLNESS_THRESHOLD, SimConfig, run_simulation, smallness_check

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


@dataclass(frozen=True)
class Verdict:
    value: float
    limit: float
    relation: str  # "<=", ">=", "<", ">" or "=="
    passed: bool


@dataclass
class RunReport:
    command: str
    config: dict
    numbers: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    text: list = field(default_factory=list)

    def check(self, name, value, relation, limit):
        ops = {"<=": np.less_equal, ">=": np.greater_equal, "<": np.less, ">": np.greater, "==": np.equal}
        ok = bool(ops[relation](value, limit))
        self.verdicts[name] = Verdict(float(value), float(limit), relation, ok)
        return ok

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts.values())

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.passed else EXIT_FAILED

    def render(self) -> str:
        lines = [f"bcw {self.command}", ""]
        lines += self.text
        if self.verdicts:
            lines += ["", "checks:"]
            for name, v in self.verdicts.items():
                lines.append(f"  {'PASS' if v.passed else 'FAIL'}  {name}: {v.value:.12g} {v.relation} {v.limit:.12g}")
        lines += ["", "[values]"]
        for k, v in self.config.items():
            lines.append(f"config.{k} = {_fmt(v)}")
        for k, v in self.numbers.items():
            lines.append(f"{k} = {_fmt(v)}")
        for name, v in self.verdicts.items():
            lines.append(f"check.{name}.value = {_fmt(v.value)}")
            lines.append(f"check.{name}.limit = {_fmt(v.limit)}")
            lines.append(f"check.{name}.passed = {str(v.passed).lower()}")
        lines.append(f"passed = {str(self.passed).lower()}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Path) -> Path:
        path = Path(out_dir) / f"{self.command}_report.txt"
        path.write_text(self.render(), encoding="utf-8")
        return path


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.15e}"
    return str(v)


def config_echo(cfg: SimConfig) -> dict:
    m = cfg.medium
    return {"domain.lengths": list(cfg.domain.lengths), "domain.modes": list(cfg.domain.modes_per_dim),
            "medium.a": m.a, "medium.b": m.b, "medium.c": m.c, "medium.sigma": m.sigma,
            "time.t_end": cfg.t_end, "time.dt": cfg.dt, "solver.nonlinear": cfg.nonlinear_enabled,
            "solver.picard_tol": cfg.picard_tol, "solver.picard_max_iter": cfg.picard_max_iter,
            "solver.dealias": cfg.dealias, "output.stride": cfg.stride}


def _base_report(command, cfg):
    report = RunReport(command, config_echo(cfg))
    mu_min = cfg.domain.mu_min
    report.numbers["mu_min"] = mu_min
    report.numbers["spectral_bound"] = spectral_bound(cfg.medium, mu_min)
    report.numbers["triggiani_constant"] = triggiani_constant(cfg.medium, mu_min)
    return report


def cmd_spectrum(cfg: SimConfig, out_dir: Path, checks=None) -> RunReport:
    """Per-mode eigenvalues of the generator blocks and the spectral bound."""
    report = _base_report("spectrum", cfg)
    rows = ["index,mu,kappa1,kappa2_re,kappa2_im,kappa3_re,kappa3_im,defective"]
    worst = -np.inf
    for k, mu in zip(cfg.domain.mode_indices, cfg.domain.eigenvalues):
        ev = mode_eigenvalues(cfg.medium, mu)
        worst = max(worst, ev.max_real)
        rows.append(",".join([":".join(str(int(i)) for i in k), f"{mu:.15e}", f"{ev.kappa1:.15e}",
                              f"{ev.kappa2.real:.15e}", f"{ev.kappa2.imag:.15e}",
                              f"{ev.kappa3.real:.15e}", f"{ev.kappa3.imag:.15e}", str(ev.defective).lower()]))
    sA = report.numbers["spectral_bound"]
    rows.append(f"# s(A) = {sA:.15e}")
    (Path(out_dir) / "spectrum.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    report.numbers["max_real_retained"] = worst
    report.text += rows[:4] + (["..."] if len(rows) > 5 else []) + [rows[-1]]
    report.check("retained_modes_within_bound", worst, "<=", sA + 1e-9 * max(1.0, abs(sA)))
    report.check("spectral_bound_negative", sA, "<", 0.0)
    return report


def cmd_simulate(cfg: SimConfig, out_dir: Path, checks=None) -> RunReport:
    """Run the configured simulation, write ``energies.csv`` and a report."""
    checks = checks or {}
    report = _base_report("simulate", cfg)
    threshold = checks.get("smallness_threshold") or DEFAULT_SMALLNESS_THRESHOLD
    small = smallness_check(*cfg.initial_fields(), cfg.medium, threshold)
    report.numbers.update({"smallness.norm_sum": small.norm_sum, "smallness.lambda0": small.lambda0,
                           "smallness.threshold": small.threshold, "smallness.passed": small.passed})
    result = run_simulation(cfg.replace(output_path=None))
    write_energies_csv(result.energies, Path(out_dir) / "energies.csv")
    traj = result.trajectory
    report.numbers["steps_completed"] = len(traj) - 1
    report.numbers["t_reached"] = float(traj.times[-1])
    if result.diagnostics:
        its = [d.iterations for d in result.diagnostics]
        report.numbers["picard.max_iterations"] = max(its)
        report.numbers["picard.mean_iterations"] = float(np.mean(its))
        report.numbers["picard.max_residual"] = max(d.residual for d in result.diagnostics)
        report.numbers["picard.min_margin"] = min(d.margin for d in result.diagnostics)
    report.text.append(f"{len(result.energies)} energy samples written to energies.csv")
    if result.error is not None:
        report.text.append(f"run stopped early: {result.error}")
    report.check("completed", float(traj.times[-1]), ">=", cfg.n_steps * cfg.dt * (1 - 1e-12))
    if cfg.medium.sigma == 0 or not cfg.nonlinear_enabled:
        if cfg.forcing is None:
            efold = 1.0 / abs(report.numbers["spectral_bound"])
            e1 = np.array([s.E1 for s in result.energies])
            t = np.array([s.t for s in result.energies])
            late = e1[t >= efold]
            rise = float(np.max(np.diff(late))) if late.size > 1 else 0.0
            report.check("E1_max_increase_after_efold", rise, "<=", 0.0)
    return report


def cmd_verify_bounds(cfg: SimConfig, out_dir: Path, checks=None) -> RunReport:
    """Sample the resolvent ratios over the right half plane."""
    report = _base_report("verify-bounds", cfg)
    res = verify_resolvent_bounds(cfg.medium, cfg.domain.eigenvalues)
    report.numbers["samples"] = res.lambdas.size
    report.text.append(f"sampled {res.lambdas.size} values of lambda over {cfg.domain.size} modes")
    report.check("max_lambda2_ratio", res.max_ratio_lambda2, "<=", res.constant * (1 + res.tol))
    report.check("max_damping_ratio", res.max_ratio_damping, "<=", 1 + res.tol)
    return report


def cmd_decay_report(cfg: SimConfig, out_dir: Path, checks=None) -> RunReport:
    """Homogeneous linear run; fitted energy decay rates against ``2|s(A)|``."""
    checks = checks or {}
    rtol = checks.get("decay_rtol", 0.05)
    report = _base_report("decay-report", cfg)
    run_cfg = cfg.replace(nonlinear_enabled=False, forcing=None, output_path=None)
    result = run_simulation(run_cfg)
    write_energies_csv(result.energies, Path(out_dir) / "energies.csv")
    rep = verify_decay(result.trajectory, cfg.medium.replace(sigma=0.0), rtol=rtol, nonlinear=False)
    report.numbers.update(rep.summary())
    report.numbers.pop("passed", None)
    horizon = 5.0 / abs(rep.spectral_bound)
    if cfg.t_end < horizon:
        report.text.append(f"warning: t_end={cfg.t_end:g} is shorter than 5/|s(A)|={horizon:g}; "
                           "the slowest mode may not dominate yet")
    for name in ("E1", "E2"):
        report.check(f"{name}_rate_relative_error", rep.checks[f"{name}_rel_error"], "<=", rtol)
    return report


COMMANDS = {"spectrum": cmd_spectrum, "simulate": cmd_simulate,
            "verify-bounds": cmd_verify_bounds, "decay-report": cmd_decay_report}


def build_parser():
    parser = argparse.ArgumentParser(prog="bcw", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, type=Path, help="key = value configuration file")
    parser.add_argument("--out", type=Path, default=None,
                        help="output directory (default: output.path from the config, else the current directory)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg, checks = load_config(args.config)
    except OSError as exc:
        print(f"bcw: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"bcw: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or cfg.output_path or Path(".")
    try:
        out.mkdir(parents=True, exist_ok=True)
        report = COMMANDS[args.command](cfg, out, checks)
        report.write(out)
    except OSError as exc:
        print(f"bcw: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BCWError as exc:
        print(f"bcw: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    print(report.render(), end="")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())

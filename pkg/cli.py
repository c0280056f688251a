#!/usr/bin/env python3
"""
GB2D - Command Line Interface

Subcommands for every pipeline stage plus an interactive menu when started
without one:

    python cli.py gen --preset fig3a --seed 7
    python cli.py pipeline --preset fig2
    python cli.py sweep --preset fig4 --repetitions 10
    python cli.py certify gb2d_out/scenario.json gb2d_out/solution.json

Exit codes: 0 ok, 1 I/O or usage, 2 validation, 3 solver not optimal,
4 not certified.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import questionary
from questionary import Style
from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from config import (
    ExperimentConfig,
    build_experiment_config,
    build_run_options,
    load_config_file,
    load_env_overrides,
    resolve_preset,
)
from constants import Defaults, ExitCode, MessageMode, PRESETS, SensingMode
from core_model import DomainError, GenerationError, ScenarioParseError, SolverError, ValidationReport
from gb2d_pipeline import Gb2dPipeline, RunRecord, SweepSummary, json_safe, write_json
from localize import DualPolynomialSet, localize_all, write_curve_csv, write_support_csv
from logger_utils import get_logger, setup_logging
from operators import MeasurementModel
from recover import certify, recover_all
from scenario import load_scenario, save_scenario, synthesize_measurements
from sdp import assemble_dual_sdp, available_backends, load_solution, save_solution, solve


console = Console()
err_console = Console(stderr=True)
logger = get_logger(__name__)

custom_style = Style([
    ('qmark', 'fg:#00d9ff bold'),
    ('question', 'bold fg:#ffffff'),
    ('answer', 'fg:#00ff87 bold'),
    ('pointer', 'fg:#00d9ff bold'),
    ('highlighted', 'fg:#00d9ff bold'),
    ('selected', 'fg:#00ff87'),
    ('separator', 'fg:#6c6c6c'),
    ('instruction', 'fg:#858585'),
    ('text', 'fg:#ffffff'),
])

TOL_KEYS = ('eps_abs', 'eps_rel', 'cert_tol', 'feasibility_tol')


def print_banner():
    console.print()
    console.print(Panel(
        "[bold bright_cyan]GB2D[/bold bright_cyan]  gridless blind deconvolution and demixing\n\n"
        "[dim]synthesize -> solve dual SDP -> localize delays -> recover messages -> certify[/dim]",
        border_style="bright_blue",
        box=box.DOUBLE_EDGE,
        padding=(1, 2),
    ))
    console.print()


def print_error(message: str, title: str = "Error"):
    err_console.print(Panel(
        f"[bold red]❌ {message}[/bold red]",
        border_style="red",
        title=title,
    ))


# ========================================
# Argument parsing
# ========================================

def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.replace(' ', '').split(',') if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _tol_pair(text: str):
    key, sep, value = text.partition('=')
    if not sep or key not in TOL_KEYS:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE with KEY in {', '.join(TOL_KEYS)}, got {text!r}")
    try:
        return key, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {key} must be a number, got {value!r}")


def _common_flags() -> argparse.ArgumentParser:
    """Flags accepted before or after the subcommand (absent flags stay unset)"""
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    group = common.add_argument_group('configuration')
    group.add_argument('--config', help='JSON or YAML experiment config file')
    group.add_argument('--preset', choices=sorted(PRESETS), help='experiment preset')
    group.add_argument('--paper-scale', action='store_true', help='use the published problem sizes of the preset')
    group.add_argument('--seed', type=int, help='generation seed')
    group.add_argument('--out', help=f'output directory (default: {Defaults.OUTPUT_DIRECTORY})')
    group.add_argument('--tol', type=_tol_pair, action='append',
                       help=f'tolerance override KEY=VALUE, KEY in {", ".join(TOL_KEYS)} (repeatable)')
    group.add_argument('--verbose', '-v', action='store_true', help='debug logging and solver progress')

    scenario = common.add_argument_group('scenario')
    scenario.add_argument('--n', type=int, help='number of frequency samples N')
    scenario.add_argument('--k', type=int, help='number of users K (unlisted counts default to 1)')
    scenario.add_argument('--paths', type=_int_list, help='paths per user, e.g. 2,1 (one value is broadcast to K)')
    scenario.add_argument('--msg', type=_int_list, help='message size per user, e.g. 5,5 (one value is broadcast to K)')
    scenario.add_argument('--sensing-rows', type=int, help='subsample to M rows (uniform_subsample sensing)')
    scenario.add_argument('--message-mode', choices=[mode.value for mode in MessageMode])
    scenario.add_argument('--per-user-separation', action='store_true',
                          help='only separate delays of the same user')

    solver = common.add_argument_group('solver and localization')
    solver.add_argument('--backend', choices=available_backends(), help='dual SDP backend')
    solver.add_argument('--max-iters', type=int, help='solver iteration cap')
    solver.add_argument('--workers', type=int, help='worker threads (solver blocks and sweep repetitions)')
    solver.add_argument('--threshold', type=float, help='peak threshold of the dual polynomial norm')
    solver.add_argument('--expected-paths', type=_int_list, help='keep the strongest P_k peaks per user')

    sweep = common.add_argument_group('sweep')
    sweep.add_argument('--repetitions', type=int, help='repetitions per configuration point')
    sweep.add_argument('--n-values', type=_int_list, help='N values of a sweep, e.g. 16,32,64')
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog='gb2d',
        description='Gridless blind deconvolution and demixing of multi-user multipath signals',
        parents=[common],
    )
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')

    commands.add_parser('gen', parents=[common], help='generate a scenario file')
    solve_cmd = commands.add_parser('solve', parents=[common], help='solve the dual SDP of a scenario file')
    solve_cmd.add_argument('scenario', help='scenario JSON')
    for name, text in (
        ('localize', 'write dual-polynomial curves and estimated delays'),
        ('recover', 'recover messages and amplitudes'),
        ('certify', 'check the dual certificate (report on stdout)'),
    ):
        command = commands.add_parser(name, parents=[common], help=text)
        command.add_argument('scenario', help='scenario JSON')
        command.add_argument('solution', help='solution JSON')
    commands.add_parser('pipeline', parents=[common], help='run the whole pipeline on one scenario')
    commands.add_parser('sweep', parents=[common], help='sweep N over paired seeds')
    commands.add_parser('presets', parents=[common], help='list experiment presets')
    return parser


def _opt(args: argparse.Namespace, name: str, default=None):
    return getattr(args, name, default)


def _broadcast(values: List[int], users: Optional[int], flag: str) -> List[int]:
    if users is None or len(values) == users:
        return list(values)
    if len(values) == 1:
        return values * users
    raise ValueError(f"{flag} lists {len(values)} values for K={users} users")


def _tolerances(args: argparse.Namespace) -> Dict[str, float]:
    return dict(_opt(args, 'tol', None) or [])


def _file_values(args: argparse.Namespace) -> Dict[str, Any]:
    path = _opt(args, 'config')
    return load_config_file(path) if path else {}


def _gen_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    users = _opt(args, 'k')
    paths = _opt(args, 'paths')
    sizes = _opt(args, 'msg')
    overrides: Dict[str, Any] = {'n_samples': _opt(args, 'n'), 'message_mode': _opt(args, 'message_mode')}
    if paths is not None or users is not None:
        overrides['path_counts'] = _broadcast(paths or [1], users, '--paths')
    if sizes is not None or users is not None:
        overrides['message_sizes'] = _broadcast(sizes or [1], users, '--msg')
    if _opt(args, 'sensing_rows') is not None:
        overrides['sensing_mode'] = SensingMode.UNIFORM_SUBSAMPLE.value
        overrides['sensing_rows'] = args.sensing_rows
    if _opt(args, 'per_user_separation', False):
        overrides['cross_user_separation'] = False
    return overrides


def _solver_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    tolerances = _tolerances(args)
    return {
        'eps_abs': tolerances.get('eps_abs'),
        'eps_rel': tolerances.get('eps_rel'),
        'max_iters': _opt(args, 'max_iters'),
        'workers': _opt(args, 'workers'),
        'backend': _opt(args, 'backend'),
        'verbose': True if _opt(args, 'verbose', False) else None,
    }


def _localize_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        'threshold': _opt(args, 'threshold'),
        'expected_paths': _opt(args, 'expected_paths'),
        'feasibility_tol': _tolerances(args).get('feasibility_tol'),
    }


def experiment_config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Resolve every configuration layer for the commands that generate scenarios"""
    return build_experiment_config(
        file_values=_file_values(args),
        preset=_opt(args, 'preset'),
        paper_scale=_opt(args, 'paper_scale', False),
        seed=_opt(args, 'seed'),
        gen_overrides=_gen_overrides(args),
        solver_overrides=_solver_overrides(args),
        localize_overrides=_localize_overrides(args),
        experiment_overrides={
            'out_dir': _opt(args, 'out'),
            'repetitions': _opt(args, 'repetitions'),
            'n_values': _opt(args, 'n_values'),
            'cert_tol': _tolerances(args).get('cert_tol'),
        },
    )


class FileRun:
    """Options and header of a command working on saved scenario/solution files"""

    def __init__(self, args: argparse.Namespace):
        file_values = _file_values(args)
        env = load_env_overrides()
        self.solver, self.localize = build_run_options(
            file_values, _solver_overrides(args), _localize_overrides(args), env
        )
        self.cert_tol = float(_tolerances(args).get('cert_tol', file_values.get('cert_tol', Defaults.CERT_TOL)))
        self.out_dir = Path(_opt(args, 'out') or file_values.get('out_dir') or env.get('out_dir', Defaults.OUTPUT_DIRECTORY))
        self.command = args.command
        self.inputs = {name: _opt(args, name) for name in ('scenario', 'solution') if _opt(args, name)}

    def header(self, seed: int) -> Dict[str, Any]:
        return {
            'command': self.command,
            'inputs': self.inputs,
            'seed': seed,
            'solver': self.solver.to_dict(),
            'localize': self.localize.to_dict(),
            'cert_tol': self.cert_tol,
        }


# ========================================
# Console rendering
# ========================================

def show_validation(report: ValidationReport):
    table = Table(box=box.SIMPLE_HEAVY, title="Scenario Validation", header_style="bold bright_magenta")
    table.add_column("Check", style="bold bright_cyan")
    table.add_column("Result")
    separation = report.min_separation
    table.add_row("Minimum separation", "-" if separation == float('inf') else f"{separation:.6f}")
    for violation in report.violations:
        table.add_row("Violation", f"[red]{violation}[/red]")
    for warning in report.warnings:
        table.add_row("Warning", f"[yellow]{warning}[/yellow]")
    table.add_row("Status", "[green]✅ valid[/green]" if report.ok else "[red]❌ invalid[/red]")
    console.print(table)


def show_run_summary(record: RunRecord):
    table = Table(
        box=box.ROUNDED,
        title="✨ Delay Estimates ✨",
        header_style="bold bright_magenta",
        border_style="bright_blue",
    )
    table.add_column("User", style="bold bright_cyan", justify="center")
    table.add_column("True delays", style="bright_white")
    table.add_column("Estimated delays", style="bright_green")
    table.add_column("MSE", style="bright_yellow", justify="right")
    for user, (channel, recovered) in enumerate(zip(record.scenario.channels, record.recovery.users)):
        table.add_row(
            str(user + 1),
            ", ".join(f"{tau:.6f}" for tau in channel.delays),
            ", ".join(f"{tau:.6f}" for tau in record.estimates.delays(user)) or "-",
            "-" if recovered.mse is None else f"{recovered.mse:.3e}",
        )
    console.print(table)

    summary = Table.grid(padding=(0, 2))
    summary.add_column(style="bold bright_white")
    summary.add_column(style="bold", justify="right")
    solution = record.solution
    summary.add_row("🔧 Solver status:", f"[cyan]{solution.status.value}[/cyan] ({solution.iterations} iterations)")
    summary.add_row("📐 Max delay error:", f"{record.recovery.max_delay_error:.3e}")
    gap = record.recovery.duality_gap
    summary.add_row("⚖️  Duality gap:", "-" if gap is None else f"{gap:.3e}")
    summary.add_row("🔒 Certified:", "[green]yes[/green]" if record.certificate.certified else "[red]no[/red]")
    summary.add_row("⏱️  Wall time:", f"{record.wall_time:.2f} s")

    if record.recovery.success and record.certificate.certified:
        color, text = "green", "All delays recovered and certified"
    elif record.recovery.success:
        color, text = "yellow", "Delays recovered, certificate not confirmed"
    else:
        color, text = "red", "Recovery incomplete"
    console.print(Panel(
        summary,
        title="[bold bright_white]🎉 Pipeline Complete 🎉[/bold bright_white]",
        subtitle=f"[{color}]{text}[/{color}]",
        border_style="bright_magenta",
        box=box.DOUBLE_EDGE,
        padding=(1, 2),
    ))


def show_sweep(summaries: List[SweepSummary]):
    table = Table(box=box.ROUNDED, title="N Sweep", header_style="bold bright_magenta", border_style="bright_blue")
    for column in ("N", "MSE mean", "MSE median", "Success rate", "Delay error mean", "Failed"):
        table.add_column(column, justify="right")
    for summary in summaries:
        failed = sum(1 for row in summary.rows if row.error is not None)
        table.add_row(
            str(summary.n_samples),
            f"{summary.mse_mean:.3e}",
            f"{summary.mse_median:.3e}",
            f"{summary.success_rate:.2f}",
            f"{summary.delay_err_mean:.3e}",
            f"[red]{failed}[/red]" if failed else "0",
        )
    console.print(table)


# ========================================
# Commands
# ========================================

def cmd_gen(args: argparse.Namespace) -> int:
    config = experiment_config_from_args(args)
    pipeline = Gb2dPipeline(config)
    with console.status("[bold cyan]Generating scenario...", spinner="dots"):
        scenario, report = pipeline.generate()
    target = save_scenario(scenario, Path(config.out_dir) / Defaults.SCENARIO_FILE, pipeline.header())
    show_validation(report)
    console.print(f"[green]Scenario written to[/green] {target}  (K={scenario.user_count}, N={scenario.n_samples})")
    return ExitCode.OK if report.ok else ExitCode.VALIDATION


def cmd_solve(args: argparse.Namespace) -> int:
    run = FileRun(args)
    scenario, report = load_scenario(args.scenario)
    if not report.ok:
        show_validation(report)
        return ExitCode.VALIDATION

    model = MeasurementModel.from_scenario(scenario)
    y = synthesize_measurements(scenario)
    problem = assemble_dual_sdp(model, y, collapse=run.solver.collapse_common_codebook)
    with console.status(f"[bold cyan]Solving dual SDP ({run.solver.backend})...", spinner="dots"):
        solution = solve(problem, run.solver)
    target = save_solution(solution, run.out_dir / Defaults.SOLUTION_FILE, run.header(scenario.seed))

    color = "green" if solution.is_optimal else "yellow"
    console.print(
        f"[{color}]Status {solution.status.value}[/{color}] after {solution.iterations} iterations, "
        f"objective {solution.objective:.9f}; written to {target}"
    )
    return ExitCode.OK if solution.is_optimal else ExitCode.SOLVER_NON_OPTIMAL


def _load_pair(args: argparse.Namespace):
    scenario, report = load_scenario(args.scenario)
    for violation in report.violations:
        logger.warning(f"Scenario violation: {violation}")
    solution = load_solution(args.solution)
    if solution.Q.shape != (scenario.n_samples, scenario.n_samples):
        raise DomainError(
            f"solution {args.solution} is for N={solution.Q.shape[0]}, scenario has N={scenario.n_samples}"
        )
    return scenario, solution


def cmd_localize(args: argparse.Namespace) -> int:
    run = FileRun(args)
    scenario, solution = _load_pair(args)
    polys = DualPolynomialSet.from_solution(solution.lam, MeasurementModel.from_scenario(scenario))
    estimates = localize_all(polys, run.localize)

    header = run.header(scenario.seed)
    points = [tau for peaks in estimates.per_user for tau, _ in peaks]
    write_curve_csv(
        polys, run.out_dir / Defaults.CURVE_FILE,
        grid_size=run.localize.grid_factor * scenario.n_samples, extra_points=points, header=header,
    )
    write_support_csv(polys, estimates, run.out_dir / Defaults.SUPPORT_FILE, channels=scenario.channels, header=header)

    for user in range(estimates.user_count):
        delays = ", ".join(f"{tau:.6f}" for tau in estimates.delays(user)) or "-"
        console.print(f"[bold bright_cyan]User {user + 1}[/bold bright_cyan]: {delays}")
    console.print(f"[green]Curves and support written to[/green] {run.out_dir}")
    return ExitCode.OK


def cmd_recover(args: argparse.Namespace) -> int:
    run = FileRun(args)
    scenario, solution = _load_pair(args)
    model = MeasurementModel.from_scenario(scenario)
    polys = DualPolynomialSet.from_solution(solution.lam, model)
    estimates = localize_all(polys, run.localize)
    y = synthesize_measurements(scenario)
    recovery = recover_all(y, model, estimates, truth=scenario, dual_value=solution.objective)

    target = write_json(run.out_dir / Defaults.RECOVERY_FILE, {
        'config': run.header(scenario.seed),
        'estimates': estimates.to_dict(),
        **recovery.to_dict(),
    })
    console.print(
        f"Recovered {sum(estimates.counts)} path(s); mean MSE "
        f"{'-' if recovery.mse_mean is None else format(recovery.mse_mean, '.3e')}; written to {target}"
    )
    return ExitCode.OK


def cmd_certify(args: argparse.Namespace) -> int:
    run = FileRun(args)
    scenario, solution = _load_pair(args)
    report = certify(scenario, solution, run.cert_tol)

    document = {'config': run.header(scenario.seed), **report.to_dict()}
    print(json.dumps(json_safe(document), indent=2))
    if report.certified:
        err_console.print("[green]✅ Certified[/green]")
        return ExitCode.OK
    err_console.print("[red]❌ Not certified[/red]")
    return ExitCode.NOT_CERTIFIED


def cmd_pipeline(args: argparse.Namespace) -> int:
    pipeline = Gb2dPipeline(experiment_config_from_args(args))
    with console.status("[bold cyan]Running pipeline...", spinner="dots"):
        record = pipeline.run_pipeline()
    show_run_summary(record)
    console.print(f"[green]Results written to[/green] {pipeline.out_dir}")
    return ExitCode.OK if record.solution.is_optimal else ExitCode.SOLVER_NON_OPTIMAL


def cmd_sweep(args: argparse.Namespace) -> int:
    pipeline = Gb2dPipeline(experiment_config_from_args(args))
    with console.status("[bold cyan]Sweeping N...", spinner="dots"):
        summaries = pipeline.sweep()
    show_sweep(summaries)
    console.print(f"[green]Sweep written to[/green] {pipeline.out_dir / Defaults.SWEEP_FILE}")
    return ExitCode.OK


def cmd_presets(args: argparse.Namespace) -> int:
    table = Table(
        box=box.DOUBLE_EDGE,
        title="✨ Experiment Presets ✨",
        header_style="bold bright_magenta",
        border_style="bright_blue",
    )
    table.add_column("Preset", style="bold bright_cyan", no_wrap=True)
    table.add_column("Description", style="bright_white")
    table.add_column("N (desk / full)", justify="right")
    table.add_column("P_k", justify="center")
    table.add_column("M_k", justify="center")
    table.add_column("Sweep N (desk / full)")
    for name in PRESETS:
        desk = resolve_preset(name)
        full = resolve_preset(name, paper_scale=True)
        table.add_row(
            name,
            PRESETS[name]['description'],
            f"{desk['gen']['n_samples']} / {full['gen']['n_samples']}",
            ",".join(map(str, desk['gen']['path_counts'])),
            ",".join(map(str, desk['gen']['message_sizes'])),
            f"{desk['n_values']} / {full['n_values']}",
        )
    console.print(table)
    return ExitCode.OK


COMMANDS = {
    'gen': cmd_gen,
    'solve': cmd_solve,
    'localize': cmd_localize,
    'recover': cmd_recover,
    'certify': cmd_certify,
    'pipeline': cmd_pipeline,
    'sweep': cmd_sweep,
    'presets': cmd_presets,
}


def _configure_logging(args: argparse.Namespace) -> None:
    env = load_env_overrides()
    level_name = 'DEBUG' if _opt(args, 'verbose', False) else str(env.get('log_level', 'INFO')).upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        raise ValueError(f"unknown log level {level_name!r}")
    setup_logging(log_file=env.get('log_file', Defaults.LOG_FILE), level=level)


def run_command(args: argparse.Namespace) -> int:
    """Dispatch a parsed command and map failures onto exit codes"""
    try:
        _configure_logging(args)
        return int(COMMANDS[args.command](args))
    except GenerationError as error:
        logger.error(f"{args.command} failed: {error}")
        print_error(str(error), title="Generation failed")
        return ExitCode.VALIDATION
    except SolverError as error:
        logger.error(f"{args.command} failed: {error}")
        print_error(str(error), title="Solver failed")
        return ExitCode.SOLVER_NON_OPTIMAL
    except (ScenarioParseError, DomainError) as error:
        logger.error(f"{args.command} failed: {error}")
        print_error(str(error), title="Invalid input")
        return ExitCode.IO_OR_USAGE
    except (OSError, ValueError) as error:
        # Traceback only when debugging; usage errors stay one line
        logger.exception(f"{args.command} failed: {error}", exc_info=logger.is_enabled_for(logging.DEBUG))
        print_error(str(error))
        return ExitCode.IO_OR_USAGE


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        if sys.stdin.isatty():
            main_menu()
            return ExitCode.OK
        parser.print_help()
        return ExitCode.IO_OR_USAGE
    return run_command(args)


# ========================================
# Interactive menu
# ========================================

def _ask_run_flags(with_sweep: bool = False) -> List[str]:
    preset = questionary.select(
        "Select preset:",
        choices=list(PRESETS),
        style=custom_style
    ).ask()
    seed = questionary.text(
        "Seed:",
        default="0",
        validate=lambda text: text.strip().isdigit() or "Enter a non-negative integer",
        style=custom_style
    ).ask()
    out_dir = questionary.text(
        "Output directory:",
        default=Defaults.OUTPUT_DIRECTORY,
        style=custom_style
    ).ask()
    flags = ['--preset', preset, '--seed', seed.strip(), '--out', out_dir]
    if questionary.confirm("Use published problem sizes?", default=False, style=custom_style).ask():
        flags.append('--paper-scale')
    if with_sweep:
        repetitions = questionary.text(
            "Repetitions per N:",
            default="5",
            validate=lambda text: (text.strip().isdigit() and int(text) > 0) or "Enter a positive integer",
            style=custom_style
        ).ask()
        flags += ['--repetitions', repetitions.strip()]
    return flags


def main_menu():
    """Interactive menu forwarding to the subcommands"""
    print_banner()
    parser = build_parser()

    while True:
        console.print()
        choice = questionary.select(
            "What would you like to do?",
            choices=[
                "🎲 Generate Scenario",
                "🚀 Run Pipeline",
                "📈 Run N Sweep",
                "🔒 Certify Solution",
                "📋 List Presets",
                "─────────────────────────",
                "❌ Exit",
            ],
            style=custom_style
        ).ask()

        if choice is None or choice == "❌ Exit":
            console.print(Panel("[bold bright_cyan]👋 Goodbye![/bold bright_cyan]", border_style="cyan"))
            return
        if choice.startswith("───"):
            continue

        if choice == "🎲 Generate Scenario":
            argv = ['gen'] + _ask_run_flags()
        elif choice == "🚀 Run Pipeline":
            argv = ['pipeline'] + _ask_run_flags()
        elif choice == "📈 Run N Sweep":
            argv = ['sweep'] + _ask_run_flags(with_sweep=True)
        elif choice == "🔒 Certify Solution":
            scenario = questionary.path("Scenario file:", default=f"{Defaults.OUTPUT_DIRECTORY}/{Defaults.SCENARIO_FILE}", style=custom_style).ask()
            solution = questionary.path("Solution file:", default=f"{Defaults.OUTPUT_DIRECTORY}/{Defaults.SOLUTION_FILE}", style=custom_style).ask()
            argv = ['certify', scenario, solution]
        else:
            argv = ['presets']

        code = run_command(parser.parse_args(argv))
        color = "green" if code == ExitCode.OK else "yellow"
        console.print(f"[{color}]Exit code {code} ({ExitCode(code).name})[/{color}]")

        console.print()
        if not questionary.confirm("Continue?", default=True, style=custom_style).ask():
            console.print(Panel("[bold bright_cyan]👋 Goodbye![/bold bright_cyan]", border_style="cyan"))
            return


if __name__ == '__main__':
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        console.print("\n")
        console.print(Panel(
            "[bold yellow]⚠️  Interrupted by user[/bold yellow]",
            border_style="yellow",
            title="Interrupted"
        ))
        sys.exit(ExitCode.IO_OR_USAGE)

import argparse
import math
import sys
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from tqdm import tqdm

from config.config_handler import ConfigHandler
from core.ensembles import mehta_constant, selberg
from core.ermakov import (FrequencyProtocol, ScalingTrajectory, analytic_trajectory, protocol_from_spec,
                          solve_scaling)
from core.errors import DecayError, DomainError, UsageError
from core.ersak import decomposition_scan
from core.observables import (RegionSpec, integrated_density, integrated_density_asymptote, log_log_slope,
                              nonescape_asymptote, nonescape_probability)
from core.oracle import mehta_constant_numeric, selberg_quadrature, survival_monte_carlo, survival_quadrature
from core.survival import (SystemParams, alpha, crossover_time, log_survival, long_time_asymptote,
                           short_time_series, survival_probability)
from utils import logging
from utils.export import export_records, export_report, export_table, float_format
from utils.parallel import parallel_map, resolve_workers

# The four decomposition panels: (N, lambda)
PANELS = {
    'a': (1, 0.0),
    'b': (3, 1.0),
    'c': (3, 2.0),
    'd': (6, 2.0),
}


@dataclass
class RunConfig:
    command: str
    n: int
    lambdas: List[float]
    protocol: FrequencyProtocol
    grid: Optional[np.ndarray]
    output: str
    fmt: str = "csv"
    plot: bool = False
    seed: Optional[int] = None
    workers: int = 1
    region: Optional[RegionSpec] = None
    tolerance: Optional[float] = None
    samples: Optional[int] = None
    t_final: float = 15.0
    tau_count: int = 301
    gauge: bool = True

    @property
    def params(self) -> SystemParams:
        return SystemParams(self.n, self.lambdas[0])


def parse_grid(spec: str) -> np.ndarray:
    """'log:START:STOP:COUNT' or 'lin:START:STOP:COUNT'."""
    parts = spec.split(':')
    if len(parts) != 4 or parts[0] not in ('log', 'lin'):
        raise UsageError(f"Bad time grid '{spec}' (use log:START:STOP:COUNT or lin:START:STOP:COUNT)")
    try:
        start, stop, count = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise UsageError(f"Bad numbers in time grid '{spec}'")
    if count < 2 or not stop > start or not math.isfinite(stop):
        raise UsageError(f"Time grid '{spec}' needs COUNT >= 2 and STOP > START")
    if parts[0] == 'log':
        if not start > 0.0:
            raise UsageError(f"Logarithmic grid '{spec}' needs START > 0")
        return np.geomspace(start, stop, count)
    if start < 0.0:
        raise UsageError(f"Linear grid '{spec}' needs START >= 0")
    return np.linspace(start, stop, count)


def parse_lambdas(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise UsageError(f"Bad lambda list '{text}'")
    if not values:
        raise UsageError("At least one lambda is required")
    return values


def build_parser() -> argparse.ArgumentParser:
    cfg = ConfigHandler()
    parser = argparse.ArgumentParser(prog="csdecay", description="Exact quantum decay of the Calogero-Sutherland gas")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def common(sub, output):
        sub.add_argument("--output", default=output, help=f"Output file (default: {output})")
        sub.add_argument("--workers", type=int, default=None,
                         help="Worker processes (default: CSDECAY_WORKERS or all cores)")
        sub.add_argument("--seed", type=int, default=None, help="Random seed for Monte Carlo checks")

    def system(sub, n, lambdas):
        sub.add_argument("--n", type=int, default=n, help=f"Particle number (default: {n})")
        sub.add_argument("--lambda", dest="lambdas", default=lambdas,
                         help=f"Coupling, or comma-separated couplings for scan (default: {lambdas})")
        sub.add_argument("--protocol", default="sudden",
                         help="sudden, delayed:T0 or tabulated:PATH (default: sudden)")

    def output_format(sub):
        sub.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv", help="Output format")
        sub.add_argument("--plot", action="store_true", help="Also write a standalone plotting script")

    scan = subparsers.add_parser("scan", help="Survival probability over a time grid")
    system(scan, 2, "0,0.5,1,1.5,2")
    scan.add_argument("--t", dest="grid", default=cfg.get('cli', 'time_grid'), help="Time grid spec")
    output_format(scan)
    common(scan, "scan.csv")

    decompose = subparsers.add_parser("decompose", help="Classical, memory and interference terms over split times")
    system(decompose, 3, "1")
    decompose.add_argument("--panel", choices=sorted(PANELS), default=None,
                           help="Preset (N, lambda): a=(1,0) b=(3,1) c=(3,2) d=(6,2)")
    decompose.add_argument("--t-final", type=float, default=cfg.get('cli', 't_final'), help="Final time t")
    decompose.add_argument("--tau-count", type=int, default=cfg.get('cli', 'tau_count'),
                           help="Number of split times in [0, t]")
    decompose.add_argument("--no-gauge", action="store_true", help="Keep the dynamical phase exp(-i beta tau / 2)")
    output_format(decompose)
    common(decompose, "decompose.csv")

    verify = subparsers.add_parser("verify", help="Check the closed forms against brute-force integrals")
    verify.add_argument("--tolerance", type=float, default=None,
                        help="Absolute tolerance for Monte Carlo checks (default: 3 standard errors)")
    verify.add_argument("--samples", type=int, default=None, help="Monte Carlo samples per check")
    common(verify, "verify.json")

    observables = subparsers.add_parser("observables", help="Non-escape probability and integrated density")
    system(observables, 2, "1")
    observables.add_argument("--t", dest="grid", default=cfg.get('cli', 'time_grid'), help="Time grid spec")
    observables.add_argument("--a", "--region", dest="a", type=float, default=cfg.get('cli', 'region_width'),
                             help="Region width a; the region is [-a/2, a/2]")
    output_format(observables)
    common(observables, "observables.csv")
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    fmt = getattr(args, 'fmt', 'json')
    plot = getattr(args, 'plot', False)
    if plot and fmt != 'csv':
        raise UsageError("--plot needs --format csv")
    cfg = RunConfig(command=args.command, n=getattr(args, 'n', 1), lambdas=[0.0],
                    protocol=FrequencyProtocol.sudden_quench(), grid=None, output=args.output,
                    fmt=fmt, plot=plot, seed=args.seed, workers=resolve_workers(args.workers))
    if args.command == 'verify':
        cfg.tolerance = args.tolerance
        cfg.samples = args.samples
        return cfg

    cfg.lambdas = parse_lambdas(args.lambdas)
    cfg.protocol = protocol_from_spec(args.protocol)
    if args.command != 'scan' and len(cfg.lambdas) != 1:
        raise UsageError(f"{args.command} takes a single lambda, got {args.lambdas}")
    if args.command == 'decompose':
        if args.panel:
            cfg.n, lam = PANELS[args.panel]
            cfg.lambdas = [lam]
        if not args.t_final > 0.0:
            raise UsageError(f"--t-final must be > 0, got {args.t_final}")
        if args.tau_count < 2:
            raise UsageError(f"--tau-count must be >= 2, got {args.tau_count}")
        cfg.t_final = args.t_final
        cfg.tau_count = args.tau_count
        cfg.gauge = not args.no_gauge
    else:
        cfg.grid = parse_grid(args.grid)
    if args.command == 'observables':
        cfg.region = RegionSpec(args.a)
    for lam in cfg.lambdas:
        SystemParams(cfg.n, lam)
    return cfg


def trajectory_for(protocol: FrequencyProtocol, times: np.ndarray) -> ScalingTrajectory:
    grid = np.unique(np.concatenate([[0.0], times]))
    if protocol.is_analytic:
        return analytic_trajectory(protocol, grid)
    return solve_scaling(protocol, grid)


def _write_rows(cfg: RunConfig, rows: List[dict], columns: List[str], footer: List[str] = ()):
    if cfg.fmt == 'json':
        export_records(rows, cfg.output, dict(line.split('=', 1) for line in footer))
        return
    export_table(rows, columns, cfg.output, footer)
    if cfg.plot:
        from script.plot_decay import write_plot_script
        script = write_plot_script(cfg.output, cfg.command)
        logging.log_info(f"Plot script written to {script}")


def _scan_row(task) -> dict:
    state, n, lambdas = task
    row = {'t': state.t, 'b': state.b, 'b_dot': state.b_dot, 'tau': state.tau, 'alpha': alpha(state)}
    for lam in lambdas:
        params = SystemParams(n, lam)
        key = f"{lam:g}"
        row[f"survival[{key}]"] = survival_probability(params, state)
        row[f"log_survival[{key}]"] = log_survival(params, state)
        row[f"short_time[{key}]"] = short_time_series(params, state.t)
        row[f"long_time[{key}]"] = long_time_asymptote(params, state.t) if state.t > 0.0 else math.inf
    return row


def run_scan(cfg: RunConfig) -> int:
    traj = trajectory_for(cfg.protocol, cfg.grid)
    states = [traj.state_at(float(t)) for t in cfg.grid]
    tasks = [(state, cfg.n, cfg.lambdas) for state in states]
    logging.log_info(f"Scanning N={cfg.n} lambda={cfg.lambdas} on {len(tasks)} times "
                     f"({cfg.protocol.describe()}, {cfg.workers} workers)")
    rows = parallel_map(_scan_row, tasks, cfg.workers)
    columns = ['t', 'b', 'b_dot', 'tau', 'alpha']
    for lam in cfg.lambdas:
        key = f"{lam:g}"
        columns += [f"survival[{key}]", f"log_survival[{key}]", f"short_time[{key}]", f"long_time[{key}]"]
    _write_rows(cfg, rows, columns)
    return 0


def run_decompose(cfg: RunConfig) -> int:
    params = cfg.params
    taus = np.linspace(0.0, cfg.t_final, cfg.tau_count)
    traj = trajectory_for(cfg.protocol, taus)
    logging.log_info(f"Decomposing S({cfg.t_final:g}) for N={params.n} lambda={params.lam:g} "
                     f"over {cfg.tau_count} split times (gauge {'on' if cfg.gauge else 'off'}, {cfg.workers} workers)")
    scan = decomposition_scan(params, traj, cfg.t_final, taus, gauge=cfg.gauge, workers=cfg.workers)
    rows = [{'tau': tau, 'classical': terms.classical, 'memory': terms.memory,
             'interference': terms.interference} for tau, terms in scan]
    _write_rows(cfg, rows, ['tau', 'classical', 'memory', 'interference'])
    return 0


def _observables_row(task) -> dict:
    params, state, region = task
    return {
        't': state.t,
        'nonescape': nonescape_probability(params, state, region),
        'nonescape_asymptote': nonescape_asymptote(params, state, region),
        'p': integrated_density(state, region, params.n),
        'p_asymptote': integrated_density_asymptote(state, region, params.n),
    }


def _fit_slope(t: np.ndarray, values: np.ndarray) -> float:
    keep = values > 0.0
    if np.count_nonzero(keep) < 2:
        logging.log_warning(f"Fit window holds {np.count_nonzero(keep)} usable points; slope not fitted")
        return math.nan
    return log_log_slope(t[keep], values[keep])


def run_observables(cfg: RunConfig) -> int:
    params = cfg.params
    traj = trajectory_for(cfg.protocol, cfg.grid)
    tasks = [(params, traj.state_at(float(t)), cfg.region) for t in cfg.grid]
    logging.log_info(f"Observables for N={params.n} lambda={params.lam:g} a={cfg.region.a:g} "
                     f"on {len(tasks)} times ({cfg.workers} workers)")
    rows = parallel_map(_observables_row, tasks, cfg.workers)

    t = np.array([row['t'] for row in rows])
    window = t >= 10.0 * crossover_time(params)
    slope_nonescape = _fit_slope(t[window], np.array([row['nonescape'] for row in rows])[window])
    slope_p = _fit_slope(t[window], np.array([row['p'] for row in rows])[window])
    fmt = float_format()
    if np.any(window):
        fit_window = f"{fmt % t[window][0]}:{fmt % t[window][-1]}"
    else:
        fit_window = "empty"
    footer = [f"slope_nonescape={fmt % slope_nonescape}", f"slope_p={fmt % slope_p}", f"fit_window={fit_window}"]
    _write_rows(cfg, rows, ['t', 'nonescape', 'nonescape_asymptote', 'p', 'p_asymptote'], footer)
    return 0


def _check(name: str, target: float, value: float, tolerance: float, relative: bool = True) -> dict:
    error = abs(value - target) / abs(target) if relative else abs(value - target)
    return {'check': name, 'target': target, 'value': value, 'error': error,
            'tolerance': tolerance, 'pass': bool(error <= tolerance)}


def verify_checks(cfg: RunConfig):
    """The oracle suite as (name, thunk) pairs; each thunk returns one report entry."""
    workers = cfg.workers
    seed = ConfigHandler().get('oracle', 'seed') if cfg.seed is None else cfg.seed
    t_check = 1.0
    state = analytic_trajectory(FrequencyProtocol.sudden_quench(), [0.0, t_check]).state_at(t_check)
    checks = []

    for n in (1, 2, 3):
        for lam in (0.0, 0.5, 1.0, 2.0):
            params = SystemParams(n, lam)

            def survival(params=params):
                estimate = survival_quadrature(params, state, workers=workers)
                return _check(f"survival_quadrature N={params.n} lambda={params.lam:g} t={t_check:g}",
                              survival_probability(params, state), estimate.value, 1e-6)
            checks.append(survival)

    def spot_value():
        estimate = survival_quadrature(SystemParams(2, 1.0), state, workers=workers)
        return _check("survival_quadrature spot S(1) N=2 lambda=1", 0.64, estimate.value, 1e-8, relative=False)
    checks.append(spot_value)

    for n in (1, 2, 3):
        for lam in (0.5, 1.0, 2.0):
            params = SystemParams(n, lam)

            def mehta(params=params):
                estimate = mehta_constant_numeric(params, workers=workers)
                return _check(f"mehta_constant N={params.n} lambda={params.lam:g}",
                              math.exp(mehta_constant(params)), estimate.value, 1e-6)
            checks.append(mehta)

    for gamma in (1.0, 0.5):
        def selberg_check(gamma=gamma):
            estimate = selberg_quadrature(2, gamma, workers=workers)
            return _check(f"selberg S_2(1,1,{gamma:g})", math.exp(selberg(2, 1.0, 1.0, gamma)), estimate.value, 1e-6)
        checks.append(selberg_check)

    def saturation():
        params = SystemParams(2, 1.0)
        far = analytic_trajectory(FrequencyProtocol.sudden_quench(), [0.0, 1e3]).state_at(1e3)
        region = RegionSpec(1.0)
        return _check("nonescape saturation N=2 lambda=1 a=1 t=1000",
                      nonescape_asymptote(params, far, region),
                      nonescape_probability(params, far, region, workers=workers), 1e-4)
    checks.append(saturation)

    def nonescape_erf():
        initial = analytic_trajectory(FrequencyProtocol.sudden_quench(), [0.0, 1.0]).state_at(0.0)
        return _check("nonescape N=1 t=0 a=2", math.erf(1.0),
                      nonescape_probability(SystemParams(1, 0.0), initial, RegionSpec(2.0)), 1e-10)
    checks.append(nonescape_erf)

    for n, lam in ((2, 1.0), (3, 0.5)):
        params = SystemParams(n, lam)

        def monte_carlo(params=params):
            estimate = survival_monte_carlo(params, state, cfg.samples, seed, workers=workers)
            target = survival_probability(params, state)
            tolerance = cfg.tolerance if cfg.tolerance is not None else 3.0 * estimate.std_error
            entry = _check(f"survival_monte_carlo N={params.n} lambda={params.lam:g} t={t_check:g}",
                           target, estimate.value, tolerance, relative=False)
            entry['std_error'] = estimate.std_error
            entry['seed'] = estimate.seed
            entry['samples'] = estimate.evaluations
            return entry
        checks.append(monte_carlo)
    return checks


def run_verify(cfg: RunConfig) -> int:
    entries = []
    for check in tqdm(verify_checks(cfg), desc="verify", disable=None):
        entries.append(check())
    passed = all(entry['pass'] for entry in entries)
    for entry in entries:
        if not entry['pass']:
            logging.log_error(f"{entry['check']}: error {entry['error']:.3g} > tolerance {entry['tolerance']:.3g}")
    export_report({'passed': passed, 'checks': entries}, cfg.output)
    logging.log_info(f"{sum(e['pass'] for e in entries)}/{len(entries)} checks passed")
    return 0 if passed else 1


RUNNERS = {
    'scan': run_scan,
    'decompose': run_decompose,
    'verify': run_verify,
    'observables': run_observables,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.set_context(args.command)
    try:
        cfg = make_config(args)
    except (UsageError, DomainError, OSError) as e:
        print(f"csdecay {args.command}: error: {e}", file=sys.stderr)
        return 2
    try:
        return RUNNERS[cfg.command](cfg)
    except DecayError as e:
        logging.log_error(str(e))
        print(f"csdecay {cfg.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        logging.log_error(f"Cannot write {cfg.output}: {e}")
        print(f"csdecay {cfg.command}: cannot write {cfg.output}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

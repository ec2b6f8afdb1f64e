import argparse
import sys
from pathlib import Path

from xai_components.base import StructuredDebugLogger
from xai_components.xai_udiscsp.bench import SweepSpec, compare_algorithms, csv_text, parse_densities, run_batch, write_csv
from xai_components.xai_udiscsp.generator import DEFAULT_COST_RANGE, DEFAULT_REWARD, TAIL, UNIFORM, GenParams, generate
from xai_components.xai_udiscsp.model import InstanceError, dump_instance, dumps_instance, load_instance
from xai_components.xai_udiscsp.runtime import PRIORITY, RANDOM, SCHEDULERS
from xai_components.xai_udiscsp.solve import ABT, ALGORITHMS, BASE_OF, SolveConfig, format_outcome, solve_instance
from xai_components.xai_udiscsp.utility import DEFAULT_RISK, OFFLINE, RISK_MODES, StatsBook, load_stats, save_stats

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BAD_INSTANCE = 2

DIST_FLAGS = {"uniform": UNIFORM, "tail": TAIL}


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    """Argument errors exit with status 1 and name the offending token."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def seed_type(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed '{text}'")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed '{text}' is not an unsigned 64-bit integer")
    return value


def add_generator_flags(parser, required: bool):
    parser.add_argument('--n', type=int, required=required, default=None if required else 10, help='Number of agents')
    parser.add_argument('--d', type=int, required=required, default=None if required else 10, help='Number of values')
    parser.add_argument('--density', type=float, default=0.3, help='Probability that an (agent, value) pair is forbidden')
    parser.add_argument('--dist', choices=sorted(DIST_FLAGS), default='uniform', help='Unary constraint distribution')
    parser.add_argument('--seed', type=seed_type, default=0, help='Generator seed (decimal, 64-bit)')
    parser.add_argument('--cost-min', type=int, default=DEFAULT_COST_RANGE[0], help='Smallest revelation cost')
    parser.add_argument('--cost-max', type=int, default=DEFAULT_COST_RANGE[1], help='Largest revelation cost')


def build_parser() -> CliParser:
    parser = CliParser(prog='udiscsp_script.py',
                       description='Privacy-aware distributed meeting scheduling: generate, solve and benchmark.')
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('generate', help='Write a random meeting-scheduling instance')
    add_generator_flags(gen, required=True)
    gen.add_argument('--reward', type=float, default=DEFAULT_REWARD, help='Agreement reward of every agent')
    gen.add_argument('--out', type=str, help='Output file (stdout when omitted)')
    gen.add_argument('-v', '--verbose', action='store_true', help='Emit JSON-lines debug events')

    solve = sub.add_parser('solve', help='Run one solver on an instance')
    solve.add_argument('--algo', choices=ALGORITHMS, default=ABT, help='Solver')
    solve.add_argument('--instance', type=str, help='Instance file; generator flags are used when omitted')
    add_generator_flags(solve, required=False)
    solve.add_argument('--scheduler', choices=SCHEDULERS, default=PRIORITY, help='Delivery order policy')
    solve.add_argument('--sched-seed', type=seed_type, default=0, help='Seed of the random scheduler')
    solve.add_argument('--step-limit', type=int, default=None, help='Maximum deliveries (default 10000 per agent)')
    solve.add_argument('--risk-mode', choices=RISK_MODES, default=OFFLINE, help='How futility risk is updated')
    solve.add_argument('--risk-default', type=float, default=DEFAULT_RISK, help='Futility risk without observations')
    solve.add_argument('--stats', type=str, help='Futility stats file')
    solve.add_argument('--reward', type=float, default=None, help='Override every agent reward')
    solve.add_argument('--trace', action='store_true', help='Print the message trace')
    solve.add_argument('--trace-out', type=str, help='Write the message trace to a file')
    solve.add_argument('-v', '--verbose', action='store_true', help='Emit JSON-lines debug events')

    bench = sub.add_parser('bench', help='Run a paired density sweep and write the aggregate CSV')
    bench.add_argument('--densities', type=str, default='0.1:0.5:0.1', help='start:stop:step or a comma list')
    bench.add_argument('--runs', type=int, default=50, help='Instances per density')
    bench.add_argument('--dist', choices=sorted(DIST_FLAGS), default='uniform', help='Unary constraint distribution')
    bench.add_argument('--seed', type=seed_type, default=0, help='Base seed')
    bench.add_argument('--n', type=int, default=10, help='Number of agents')
    bench.add_argument('--d', type=int, default=10, help='Number of values')
    bench.add_argument('--reward', type=float, default=DEFAULT_REWARD, help='Agreement reward of every agent')
    bench.add_argument('--algos', nargs='+', choices=ALGORITHMS, default=list(ALGORITHMS), help='Algorithms to run')
    bench.add_argument('--scheduler', choices=SCHEDULERS, default=RANDOM, help='Delivery order policy')
    bench.add_argument('--risk-mode', choices=RISK_MODES, default=OFFLINE, help='How futility risk is updated')
    bench.add_argument('--risk-default', type=float, default=DEFAULT_RISK, help='Futility risk without observations')
    bench.add_argument('--workers', type=int, default=1, help='Worker processes')
    bench.add_argument('--learn', action='store_true', help='Learn futility stats with SyncBT/ABT before the utility solvers')
    bench.add_argument('--walltime', action='store_true', help='Measure wall time per run')
    bench.add_argument('--stats', type=str, help='Futility stats file to read (and update with --learn)')
    bench.add_argument('--out', type=str, help='CSV output file (stdout when omitted)')
    bench.add_argument('-v', '--verbose', action='store_true', help='Emit JSON-lines debug events')
    return parser


def params_from_args(args, reward) -> GenParams:
    try:
        return GenParams(
            n=args.n, d=args.d, density=args.density, distribution=DIST_FLAGS[args.dist],
            cost_range=(args.cost_min, args.cost_max), reward=reward, seed=args.seed,
        ).validate()
    except ValueError as e:
        raise UsageError(str(e))


def read_stats(path) -> StatsBook:
    if not path:
        return StatsBook()
    try:
        return load_stats(path)
    except ValueError as e:
        raise UsageError(f"--stats: {e}")


def run_generate(args) -> int:
    instance = generate(params_from_args(args, args.reward))
    if args.out:
        dump_instance(instance, args.out)
        print(f"Instance written to {args.out}")
    else:
        sys.stdout.write(dumps_instance(instance))
    return EXIT_OK


def run_solve(args) -> int:
    if args.instance:
        if not Path(args.instance).is_file():
            raise UsageError(f"instance file '{args.instance}' does not exist")
        instance = load_instance(args.instance)
    else:
        instance = generate(params_from_args(args, args.reward if args.reward is not None else DEFAULT_REWARD))
    if args.reward is not None:
        instance = instance.with_rewards(args.reward)
    if args.step_limit is not None and args.step_limit < 0:
        raise UsageError(f"--step-limit must be nonnegative, got '{args.step_limit}'")
    book = read_stats(args.stats)
    config = SolveConfig(algorithm=args.algo, scheduler=args.scheduler, sched_seed=args.sched_seed,
                         step_limit=args.step_limit, risk_mode=args.risk_mode, risk_default=args.risk_default)
    outcome, trace = solve_instance(instance, config, book.lookup(source=BASE_OF.get(args.algo)))
    print(format_outcome(outcome, args.algo))
    if args.trace and trace:
        print(trace)
    if args.trace_out:
        Path(args.trace_out).write_text(trace + "\n" if trace else "", encoding="utf-8")
    return EXIT_OK


def run_bench(args) -> int:
    try:
        densities = parse_densities(args.densities)
    except ValueError:
        raise UsageError(f"invalid --densities '{args.densities}'")
    book = read_stats(args.stats)
    template = GenParams(n=args.n, d=args.d, distribution=DIST_FLAGS[args.dist], reward=args.reward)
    spec = SweepSpec(densities=densities, instances_per_point=args.runs, algorithms=tuple(args.algos),
                     template=template, base_seed=args.seed, scheduler=args.scheduler, risk_mode=args.risk_mode,
                     risk_default=args.risk_default, learn=args.learn, walltime=args.walltime, workers=args.workers)
    try:
        spec.validate()
    except ValueError as e:
        raise UsageError(str(e))
    result = run_batch(spec, book)
    if args.out:
        write_csv(result.rows, args.out)
        print(f"Sweep written to {args.out}")
        if set(ALGORITHMS) <= set(args.algos):
            print(compare_algorithms(result.runs).format())
    else:
        sys.stdout.write(csv_text(result.rows))
    if args.stats and args.learn:
        save_stats(result.book, args.stats)
    return EXIT_OK


COMMANDS = {'generate': run_generate, 'solve': run_solve, 'bench': run_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    if args.verbose:
        StructuredDebugLogger.enable()
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"{parser.prog} {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InstanceError as e:
        print(f"{parser.prog} {args.command}: invalid instance: {e}", file=sys.stderr)
        return EXIT_BAD_INSTANCE


if __name__ == '__main__':
    sys.exit(main())

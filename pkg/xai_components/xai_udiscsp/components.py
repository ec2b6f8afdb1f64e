from xai_components.base import InArg, OutArg, InCompArg, Component, xai_component

from .bench import SweepSpec, compare_algorithms, parse_densities, run_batch, write_csv
from .generator import DEFAULT_COST_RANGE, DEFAULT_REWARD, UNIFORM, GenParams, generate
from .model import dump_instance, load_instance
from .runtime import PRIORITY
from .solve import ABT, ALGORITHMS, BASE_OF, SolveConfig, format_outcome, solve_instance
from .utility import DEFAULT_RISK, OFFLINE, StatsBook, load_stats, save_stats


@xai_component(color="blue")
class GenerateInstance(Component):
    """
    Generates a random distributed meeting-scheduling instance.

    Each (agent, value) pair is forbidden with probability `density` ("uniform"), or with
    density/2 for the upper half of the agents and 3·density/2 for the lower half ("tail").
    Every pair gets a revelation cost drawn uniformly from [cost_min, cost_max].

    ##### inPorts:
    - n (int): Number of agents. Default is 10.
    - d (int): Number of values (meeting slots). Default is 10.
    - density (float): Probability that a pair is forbidden. Default is 0.3.
    - distribution (str): "uniform" or "tail". Default is "uniform".
    - seed (int): Generator seed. Default is 0.
    - cost_min (int): Smallest revelation cost. Default is 0.
    - cost_max (int): Largest revelation cost. Default is 9.
    - reward (float): Agreement reward of every agent. Default is 20.

    ##### outPorts:
    - instance (Instance): The generated instance.
    """

    n: InArg[int]
    d: InArg[int]
    density: InArg[float]
    distribution: InArg[str]
    seed: InArg[int]
    cost_min: InArg[int]
    cost_max: InArg[int]
    reward: InArg[float]

    instance: OutArg[object]

    def execute(self, ctx) -> None:
        params = GenParams(
            n=self.n.value if self.n.value is not None else 10,
            d=self.d.value if self.d.value is not None else 10,
            density=self.density.value if self.density.value is not None else 0.3,
            distribution=self.distribution.value if self.distribution.value is not None else UNIFORM,
            cost_range=(
                self.cost_min.value if self.cost_min.value is not None else DEFAULT_COST_RANGE[0],
                self.cost_max.value if self.cost_max.value is not None else DEFAULT_COST_RANGE[1],
            ),
            reward=self.reward.value if self.reward.value is not None else DEFAULT_REWARD,
            seed=self.seed.value if self.seed.value is not None else 0,
        )
        try:
            self.instance.value = generate(params)
            print(f"Generated {params.distribution} instance n={params.n} d={params.d} density={params.density}")
        except Exception as e:
            print(f"Error during instance generation: {e}")
            raise


@xai_component(color="green")
class LoadInstance(Component):
    """
    Loads an instance document (JSON with n, d, availability, costs, rewards).

    ##### inPorts:
    - path (str, compulsory): Path to the instance file.

    ##### outPorts:
    - instance (Instance): The validated instance.
    """

    path: InCompArg[str]

    instance: OutArg[object]

    def execute(self, ctx) -> None:
        try:
            self.instance.value = load_instance(self.path.value)
        except Exception as e:
            print(f"Error loading instance {self.path.value}: {e}")
            raise


@xai_component(color="green")
class SaveInstance(Component):
    """
    Writes an instance document.

    ##### inPorts:
    - instance (Instance, compulsory): Instance to write.
    - path (str, compulsory): Output path.

    ##### outPorts:
    - saved_path (str): The path written.
    """

    instance: InCompArg[object]
    path: InCompArg[str]

    saved_path: OutArg[str]

    def execute(self, ctx) -> None:
        try:
            self.saved_path.value = str(dump_instance(self.instance.value, self.path.value))
            print(f"Instance saved to {self.saved_path.value}")
        except Exception as e:
            print(f"Error saving instance: {e}")
            raise


@xai_component(color="red")
class SolveInstance(Component):
    """
    Runs one solver on an instance over the simulated network.

    ##### inPorts:
    - instance (Instance, compulsory): The instance to solve.
    - algorithm (str): One of syncbt, abt, syncbtu, abtu. Default is "abt".
    - scheduler (str): "priority" or "random". Default is "priority".
    - sched_seed (int): Seed of the random scheduler. Default is 0.
    - step_limit (int): Maximum deliveries; default is 10,000 per agent.
    - risk_mode (str): "offline" or "online". Default is "offline".
    - risk_default (float): Futility risk used without observations. Default is 0.5.
    - stats (StatsBook): Learned futility statistics for the utility solvers.

    ##### outPorts:
    - outcome (Outcome): Status, final ledger and message counts.
    - trace (str): One line per delivered message.
    """

    instance: InCompArg[object]
    algorithm: InArg[str]
    scheduler: InArg[str]
    sched_seed: InArg[int]
    step_limit: InArg[int]
    risk_mode: InArg[str]
    risk_default: InArg[float]
    stats: InArg[object]

    outcome: OutArg[object]
    trace: OutArg[str]

    def execute(self, ctx) -> None:
        config = SolveConfig(
            algorithm=self.algorithm.value if self.algorithm.value is not None else ABT,
            scheduler=self.scheduler.value if self.scheduler.value is not None else PRIORITY,
            sched_seed=self.sched_seed.value if self.sched_seed.value is not None else 0,
            step_limit=self.step_limit.value,
            risk_mode=self.risk_mode.value if self.risk_mode.value is not None else OFFLINE,
            risk_default=self.risk_default.value if self.risk_default.value is not None else DEFAULT_RISK,
        )
        book = self.stats.value if self.stats.value is not None else StatsBook()
        try:
            stats = book.lookup(source=BASE_OF.get(config.algorithm))
            self.outcome.value, self.trace.value = solve_instance(self.instance.value, config, stats)
        except Exception as e:
            print(f"Error while solving with {config.algorithm}: {e}")
            raise


@xai_component(color="grey")
class PrintOutcome(Component):
    """
    Prints an outcome summary and, optionally, its message trace.

    ##### inPorts:
    - outcome (Outcome, compulsory): Outcome to print.
    - algorithm (str): Label for the summary. Default is "".
    - trace (str): Trace to print.
    - show_trace (bool): Print the trace too. Default is False.
    """

    outcome: InCompArg[object]
    algorithm: InArg[str]
    trace: InArg[str]
    show_trace: InArg[bool]

    def execute(self, ctx) -> None:
        print(format_outcome(self.outcome.value, self.algorithm.value or ""), flush=True)
        if self.show_trace.value and self.trace.value:
            print(self.trace.value, flush=True)


@xai_component(color="purple")
class RunDensitySweep(Component):
    """
    Runs every algorithm over paired instance streams for a range of densities and writes the CSV.

    ##### inPorts:
    - densities (str): "start:stop:step" or a comma list. Default is "0.1:0.5:0.1".
    - runs (int): Instances per density. Default is 50.
    - distribution (str): "uniform" or "tail". Default is "uniform".
    - seed (int): Base seed. Default is 0.
    - algorithms (list): Subset of syncbt, abt, syncbtu, abtu. Default is all four.
    - n (int): Agents per instance. Default is 10.
    - d (int): Values per instance. Default is 10.
    - workers (int): Worker processes. Default is 1.
    - learn (bool): Learn futility stats with the base solvers first, one section per base solver. Default is False.
    - stats (StatsBook): Prior futility statistics.
    - csv_path (str): Where to write the aggregate CSV. Nothing is written when unset.

    ##### outPorts:
    - runs_out (list): Per-run metrics.
    - rows (list): Aggregated rows.
    - stats_out (StatsBook): Statistics after the sweep.
    """

    densities: InArg[str]
    runs: InArg[int]
    distribution: InArg[str]
    seed: InArg[int]
    algorithms: InArg[list]
    n: InArg[int]
    d: InArg[int]
    workers: InArg[int]
    learn: InArg[bool]
    stats: InArg[object]
    csv_path: InArg[str]

    runs_out: OutArg[list]
    rows: OutArg[list]
    stats_out: OutArg[object]

    def execute(self, ctx) -> None:
        template = GenParams(
            n=self.n.value if self.n.value is not None else 10,
            d=self.d.value if self.d.value is not None else 10,
            distribution=self.distribution.value if self.distribution.value is not None else UNIFORM,
        )
        spec = SweepSpec(
            densities=parse_densities(self.densities.value if self.densities.value is not None else "0.1:0.5:0.1"),
            instances_per_point=self.runs.value if self.runs.value is not None else 50,
            algorithms=tuple(self.algorithms.value) if self.algorithms.value is not None else ALGORITHMS,
            template=template,
            base_seed=self.seed.value if self.seed.value is not None else 0,
            learn=bool(self.learn.value),
            workers=self.workers.value if self.workers.value is not None else 1,
        )
        try:
            result = run_batch(spec, self.stats.value)
            self.runs_out.value = result.runs
            self.rows.value = result.rows
            self.stats_out.value = result.book
            if self.csv_path.value:
                write_csv(result.rows, self.csv_path.value)
                print(f"Sweep written to {self.csv_path.value}")
        except Exception as e:
            print(f"Error during density sweep: {e}")
            raise


@xai_component(color="orange")
class CompareAlgorithms(Component):
    """
    Checks the expected orderings between the four algorithms on paired runs.

    ##### inPorts:
    - runs (list, compulsory): Per-run metrics of all four algorithms on the same seeds.

    ##### outPorts:
    - report (OrderingReport): One check per ordering.
    - holds (bool): True when every ordering holds.
    """

    runs: InCompArg[list]

    report: OutArg[object]
    holds: OutArg[bool]

    def execute(self, ctx) -> None:
        try:
            report = compare_algorithms(self.runs.value)
            self.report.value = report
            self.holds.value = report.holds
            print(report.format(), flush=True)
        except Exception as e:
            print(f"Error comparing algorithms: {e}")
            raise


@xai_component(color="green")
class LoadFutilityStats(Component):
    """
    Loads persisted futility statistics; a missing file yields empty statistics.

    ##### inPorts:
    - path (str, compulsory): Stats file.

    ##### outPorts:
    - stats (StatsBook): Loaded statistics.
    """

    path: InCompArg[str]

    stats: OutArg[object]

    def execute(self, ctx) -> None:
        try:
            self.stats.value = load_stats(self.path.value)
        except Exception as e:
            print(f"Error loading futility stats: {e}")
            raise


@xai_component(color="green")
class SaveFutilityStats(Component):
    """
    Persists futility statistics as JSON, including per-density buckets and per-algorithm sections.

    ##### inPorts:
    - stats (StatsBook, compulsory): Statistics to persist.
    - path (str, compulsory): Stats file.
    """

    stats: InCompArg[object]
    path: InCompArg[str]

    def execute(self, ctx) -> None:
        try:
            save_stats(self.stats.value, self.path.value)
        except Exception as e:
            print(f"Error saving futility stats: {e}")
            raise

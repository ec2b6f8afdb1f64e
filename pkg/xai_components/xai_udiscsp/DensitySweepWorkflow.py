from argparse import ArgumentParser
from xai_components.base import SubGraphExecutor, InArg, OutArg, Component, xai_component, parse_bool
from xai_components.xai_udiscsp.components import RunDensitySweep, CompareAlgorithms

@xai_component(type='xircuits_workflow')
class DensitySweepWorkflow(Component):
    densities: InArg[str]
    runs: InArg[int]
    distribution: InArg[str]
    seed: InArg[int]
    learn: InArg[bool]
    csv_path: InArg[str]
    holds: OutArg[bool]

    def __init__(self):
        super().__init__()
        self.__start_nodes__ = []
        self.c_0 = RunDensitySweep()
        self.c_1 = CompareAlgorithms()
        self.c_0.densities.connect(self.densities)
        self.c_0.runs.connect(self.runs)
        self.c_0.distribution.connect(self.distribution)
        self.c_0.seed.connect(self.seed)
        self.c_0.learn.connect(self.learn)
        self.c_0.csv_path.connect(self.csv_path)
        self.c_1.runs.connect(self.c_0.runs_out)
        self.holds.connect(self.c_1.holds)
        self.c_0.next = self.c_1
        self.c_1.next = None

    def execute(self, ctx):
        for node in self.__start_nodes__:
            if hasattr(node, 'init'):
                node.init(ctx)
        next_component = self.c_0
        while next_component is not None:
            next_component = next_component.do(ctx)

def main(args):
    import pprint
    ctx = {}
    ctx['args'] = args
    flow = DensitySweepWorkflow()
    flow.next = None
    flow.densities.value = args.densities
    flow.runs.value = args.runs
    flow.distribution.value = args.distribution
    flow.seed.value = args.seed
    flow.learn.value = parse_bool(args.learn)
    flow.csv_path.value = args.csv_path
    SubGraphExecutor(flow).do(ctx)
    print('holds:')
    pprint.pprint(flow.holds.value)
if __name__ == '__main__':
    parser = ArgumentParser()
    parser.add_argument('--densities', type=str)
    parser.add_argument('--runs', type=int)
    parser.add_argument('--distribution', type=str)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--learn', type=str)
    parser.add_argument('--csv_path', type=str)
    args, _ = parser.parse_known_args()
    main(args)
    print('\nFinished Executing')

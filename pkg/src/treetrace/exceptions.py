"""Distinguished algorithm terminations ("produce no output")."""


class ReconstructionTerminated(RuntimeError):
    """An algorithm stopped without output, as its pseudocode prescribes."""


class EmptyBucket(ReconstructionTerminated):
    def __init__(self, j: int):
        self.j = j
        super().__init__(f"no trace was assigned to depth-(d-1) node {j}")


class NoStableTraces(ReconstructionTerminated):
    def __init__(self, i: int):
        self.i = i
        super().__init__(f"no trace is s-stable for node {i}")


class PerpEncountered(ReconstructionTerminated):
    def __init__(self, trace_index: int, j: int):
        self.trace_index = trace_index
        self.j = j
        super().__init__(f"trace {trace_index} has an undefined root path to node {j}")


class NoCaterpillarTrace(ReconstructionTerminated):
    def __init__(self, i: int):
        self.i = i
        super().__init__(f"no trace has a defined G-subtree for node {i}")


class NoUsableTraces(ReconstructionTerminated):
    """Every trace was empty or was discarded by a reduction's filter."""

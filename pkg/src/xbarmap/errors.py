"""Exception hierarchy shared by all xbarmap modules."""


class XbarmapError(Exception):
    """Base class for every error raised by this package."""


class ParseError(XbarmapError):
    """A document could not be decoded."""


class ValidationError(XbarmapError):
    """A decoded document violates a structural rule."""


class DegenerateGraph(XbarmapError):
    pass


class InvalidParameter(XbarmapError):
    pass


class ModelTooLarge(XbarmapError):
    pass


class InfeasibleByFanIn(XbarmapError):
    """Some neuron has more inputs than any crossbar kind can accept."""

    def __init__(self, neuron: int, fan_in: int, max_inputs: int):
        self.neuron = neuron
        self.fan_in = fan_in
        self.max_inputs = max_inputs
        super().__init__(
            f"neuron {neuron} has fan-in {fan_in} but the widest crossbar "
            f"accepts only {max_inputs} inputs"
        )


class NonIntegerizableCost(XbarmapError):
    pass


class NegativeWeight(XbarmapError):
    pass


class TooLargeForOracle(XbarmapError):
    pass


class InvalidAssignment(XbarmapError):
    """A raw solver assignment does not describe a legal mapping."""


class InvalidSolution(XbarmapError):
    pass


class InfeasibleMapping(XbarmapError):
    """No legal mapping exists (or none was found) for the given inputs."""


class InfeasibleMcc(XbarmapError):
    def __init__(self, index: int, inputs: int, outputs: int):
        self.index = index
        super().__init__(
            f"MCC {index} needs {inputs} inputs x {outputs} outputs, "
            "which no crossbar kind provides"
        )


class InvalidStimulus(XbarmapError):
    pass


class UnmappedNeuron(XbarmapError):
    pass


class DigestMismatch(XbarmapError):
    pass


class ReferenceMissing(XbarmapError):
    pass


class NoSolutionFound(XbarmapError):
    """The work budget ran out before any feasible mapping was found."""

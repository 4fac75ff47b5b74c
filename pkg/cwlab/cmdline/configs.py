"""
Option containers holding the parameters of each command

Each container can be written to and read back from YAML, so a run can be
repeated from its configuration file.
"""
from cwlab.common.exceptions import ConfigError
from cwlab.common.opthold import (
    ChoiceOption,
    FloatOption,
    IntOption,
    ListOption,
    OptionContainer,
    StringOption,
)
from cwlab.tools.measures import DEFAULT_GRID_POINTS, DEFAULT_TAIL_TOL, ModelParams, Regime
from cwlab.tools.metrics import DEFAULT_WINDOW
from cwlab.tools.verify import DEFAULT_SLACK, RateMethod, geometric_grid

FORMATS = ("csv", "json")
REGIMES = tuple(regime.value for regime in Regime)
METHODS = tuple(method.value for method in RateMethod)
SAMPLE_KINDS = ("exact", "surrogate", "poisson", "limit")


def parse_n_grid(text: str) -> list:
    """Parse ``min:max:factor`` (factor defaults to 2) into a geometric grid"""
    parts = str(text).split(":")
    if len(parts) not in (2, 3):
        raise ConfigError(f"n-grid must look like min:max[:factor], got {text!r}")
    try:
        values = [int(part) for part in parts]
    except ValueError as error:
        raise ConfigError(f"n-grid must contain integers, got {text!r}") from error
    return geometric_grid(*values)


class OutputConfig(OptionContainer):
    """Options shared by every command"""

    format = ChoiceOption("Output format", FORMATS, "csv")
    out = StringOption("Output path, standard output when unset", None)


class ModelConfig(OutputConfig):
    """Model parameters"""

    n = IntOption("Number of spins", 100, minimum=1)
    beta = FloatOption("Inverse temperature", 1.0)
    gamma = FloatOption("Window parameter, beta_n = 1 - gamma/sqrt(n)", None)
    mu = FloatOption("External field", 0.0)

    def model_params(self, n=None) -> ModelParams:
        return ModelParams(n=self.n if n is None else n, beta=self.beta, gamma=self.gamma, mu=self.mu)


class QuadratureConfig(ModelConfig):
    """Accuracy of the tabulated mixing law"""

    tail_tol = FloatOption("Certified tail mass of the truncated mixing law", DEFAULT_TAIL_TOL, minimum=0.0, maximum=1e-6)
    grid_points = IntOption("Minimum number of quadrature panels", DEFAULT_GRID_POINTS, minimum=64)


class PmfConfig(ModelConfig):
    """Configuration of the `pmf` command"""

    rescale = FloatOption("Divide the spin sums by this", 1.0, minimum=0.0)


class SampleConfig(QuadratureConfig):
    """Configuration of the `sample` command"""

    kind = ChoiceOption("What to sample", SAMPLE_KINDS, "exact")
    regime = ChoiceOption("Regime of the limit law, inferred when unset", REGIMES + (None,), None)
    samples = IntOption("Number of draws", 1000, minimum=0)
    seed = IntOption("Seed of the random stream", 0, minimum=0)


class DistanceConfig(OutputConfig):
    """Configuration of the `distance` command"""

    regime = ChoiceOption("Regime", REGIMES, "subcritical")
    method = ChoiceOption("Distance", METHODS, "exact-kol")
    beta = FloatOption("Inverse temperature, the regime's default when unset", None)
    gamma = FloatOption("Window parameter, 1 when unset in the window regime", None)
    n_grid = StringOption("Geometric grid min:max:factor", "64:8192:2")
    window = FloatOption("Exclusion window around the two-point atoms", DEFAULT_WINDOW, minimum=0.0)

    def grid(self) -> list:
        return parse_n_grid(self.n_grid)


class RateConfig(OutputConfig):
    """Configuration of the `rate` command"""

    series = StringOption("CSV file with n and distance columns", None, required=True)


class ChainConfig(ModelConfig):
    """Configuration of the `chain` command"""

    steps = IntOption("Recorded steps after burn-in", 10**5, minimum=0)
    burn_in = IntOption("Discarded steps, 10 n when unset", None, minimum=0)
    seed = IntOption("Seed of the random stream", 0, minimum=0)


class VerifyConfig(OutputConfig):
    """Configuration of the `verify` command"""

    only = ListOption("Checks to run, the whole suite when empty", [])
    beta = FloatOption("Override of beta for the selected checks", None)
    gamma = FloatOption("Override of gamma for the selected checks", None)
    n = IntOption("Override of n for the selected checks", None, minimum=1)
    slack = FloatOption("Slack constant of the centred binomial bound", DEFAULT_SLACK, minimum=0.0)

    def settings(self) -> dict:
        return {"beta": self.beta, "gamma": self.gamma, "n": self.n, "slack": self.slack}

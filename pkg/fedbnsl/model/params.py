"""
Typed hyperparameter and privacy schemas, validated when merged with hydra configs
"""

# hydra imports
from omegaconf import OmegaConf
from omegaconf.errors import MissingMandatoryValue, ValidationError, ConfigKeyError

# generic imports
from dataclasses import dataclass, field
from typing import Optional
import math

# fedbnsl imports
from fedbnsl.utils.exceptions import ConfigError


@dataclass
class AdmmHyperparams:
    """
    Hyperparameters of the ADMM consensus loop and of the local solver.

    Defaults are the values selected for homogeneous non-private data with d=20.
    """
    rho1: float = 1000.
    rho2: float = 1.
    lam: float = 0.1
    gamma: float = 0.5
    T: int = 100
    K: int = 30
    prune_threshold: float = 0.3
    # geometric growth factor of rho2 per round, 1 keeps it constant
    rho2_growth: float = 1.
    server_max_iter: int = 500
    server_memory: int = 10

    def __post_init__(self):
        if not self.rho1 > 0:
            raise ConfigError("rho1", f"must be positive, got {self.rho1}")
        if not self.rho2 > 0:
            raise ConfigError("rho2", f"must be positive, got {self.rho2}")
        if self.lam < 0:
            raise ConfigError("lam", f"must be non-negative, got {self.lam}")
        if not 0 < self.gamma <= 1:
            raise ConfigError("gamma", f"must lie in (0, 1], got {self.gamma}")
        if self.T < 1:
            raise ConfigError("T", f"must be at least 1, got {self.T}")
        if self.K < 1:
            raise ConfigError("K", f"must be at least 1, got {self.K}")
        if self.prune_threshold < 0:
            raise ConfigError("prune_threshold", f"must be non-negative, got {self.prune_threshold}")
        if self.rho2_growth < 1:
            raise ConfigError("rho2_growth", f"must be at least 1, got {self.rho2_growth}")

    def rho2_at(self, round):
        """Penalty rho2 used by the server in the given (1-based) round."""
        return self.rho2 * self.rho2_growth ** (round - 1)


@dataclass
class PrivateSmoothnessConfig:
    """Budget and feature bound for estimating the smoothness constants privately."""
    enabled: bool = False
    epsilon: float = 1.
    delta: Optional[float] = None
    # bound b_j on the squared value of every feature
    bound: float = 10.

    def __post_init__(self):
        if self.enabled:
            if not self.epsilon > 0:
                raise ConfigError("smoothness.epsilon", f"must be positive, got {self.epsilon}")
            if self.delta is not None and not 0 < self.delta < 1:
                raise ConfigError("smoothness.delta", f"must lie in (0, 1), got {self.delta}")
            if not self.bound > 0:
                raise ConfigError("smoothness.bound", f"must be positive, got {self.bound}")


@dataclass
class PrivacyBudget:
    """
    (epsilon, delta) budget of a private run.

    `delta` left unset means 1/n_p^2 for each participant. `epsilon` may be infinite, which gives a noiseless run
    through the private code path. For the sparse method `clip_C` sets the gradient clipping threshold: with
    `clip_relative` it is measured in units of the data, coordinate (i, j) being clipped at clip_C sqrt(M_ij), and
    otherwise it is the global threshold C itself. For the dense baseline `bound` is the l2 bound b on every sample
    used to privatise the covariance.
    """
    enabled: bool = False
    epsilon: float = 10.
    delta: Optional[float] = None
    clip_C: float = 3.
    clip_relative: bool = True
    bound: float = 7.
    smoothness: PrivateSmoothnessConfig = field(default_factory=PrivateSmoothnessConfig)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon", f"must be positive, got {self.epsilon}")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ConfigError("delta", f"must lie in (0, 1), got {self.delta}")
        if not self.clip_C > 0:
            raise ConfigError("clip_C", f"must be positive, got {self.clip_C}")
        if not self.bound > 0:
            raise ConfigError("bound", f"must be positive, got {self.bound}")
        if math.isinf(self.clip_C) and not self.noiseless:
            raise ConfigError("clip_C", "must be finite unless epsilon is infinite")

    def delta_for(self, n_samples):
        """The delta used for a participant holding `n_samples` records."""
        return self.delta if self.delta is not None else 1. / n_samples ** 2

    @property
    def noiseless(self):
        return math.isinf(self.epsilon)

    def clip_threshold(self, smoothness):
        """Global clipping threshold C for a participant with the given smoothness constants."""
        if self.clip_relative:
            return self.clip_C * math.sqrt(float(smoothness.sum()))
        return self.clip_C


def load_schema(schema, config, name):
    """
    Merge a config node into a dataclass schema, returning a validated dataclass instance.

    Parameters
    ----------
    schema : type
        Dataclass defining the fields, types and defaults.
    config
        Hydra / OmegaConf node (or plain dict, or None for all defaults).
    name : str
        Dotted path of the node, used in error messages.

    Returns
    -------
    instance of `schema`

    Raises
    ------
    ConfigError
        If a field has the wrong type, is unknown, missing or out of range.
    """
    try:
        merged = OmegaConf.merge(OmegaConf.structured(schema), config if config is not None else {})
        return OmegaConf.to_object(merged)
    except MissingMandatoryValue as e:
        raise ConfigError(f"{name}.{e.full_key}", "missing mandatory value") from e
    except (ValidationError, ConfigKeyError) as e:
        raise ConfigError(f"{name}.{e.full_key}", str(e).splitlines()[0]) from e
    except ConfigError as e:
        raise ConfigError(f"{name}.{e.field}", str(e).split(": ", 1)[-1]) from e

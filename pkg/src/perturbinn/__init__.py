"""Weakly nonlinear ODE/PDE solving by perturbation-guided transfer.

Nonlinear problems with a small coupling parameter are expanded into
hierarchies of linear equations sharing one operator; each order is solved
either by an adaptive Runge-Kutta oracle or in closed form against the
latent representation of a pretrained multi-head physics-informed network.
"""

from .compositions import enumerate_compositions, multinomial_forcing
from .hierarchy import (FrequencySeries, LinearSubproblem, PerturbationSeries,
                        assemble_series, divergence_monitor)
from .network import (LossWeights, MultiHeadModel, NetworkConfig,
                      TrainingHeadSpec, fourier_embed, head_loss,
                      latent_forward, train_multihead)
from .oneshot import (NormalSystem, OperatorSpec, apply_operator,
                      assemble_normal_system, first_order_form, one_shot_solve)
from .problems import (NonlinearProblemSpec, OscillatorSpec, PdeOperatorSpec,
                       distribute_initial_conditions)
from .reference import (IntegratorSettings, Trajectory, discretize_pde,
                        measure_frequency, rk45_integrate)

__version__ = "0.1.0"

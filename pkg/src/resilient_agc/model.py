"""Single-area power system model assembly and exact ZOH discretization.

State ordering is fixed as [df, dP_G_1..n_G, dX_gov_1..n_G, dP_ES_1..n_ES]
so that downstream hyperplane vectors index correctly.  The lumped
disturbance w = dP_L - dP_RES enters the frequency row with coefficient
-1/M.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class GeneratorParams:
    T_t: float   # turbine time constant, s
    T_g: float   # governor time constant, s
    R: float     # droop gain, Hz/pu
    gamma: float # power rate bound, pu

    def __post_init__(self):
        for name in ("T_t", "T_g", "R", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"generator {name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class StorageParams:
    T_ES: float  # storage response time constant, s
    gamma: float # power rate bound, pu

    def __post_init__(self):
        for name in ("T_ES", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"storage {name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class PowerSystemParams:
    inertia: float
    damping: float
    generators: tuple
    storages: tuple
    disturbance_bound: float = 0.0

    def __post_init__(self):
        if self.inertia <= 0:
            raise ValueError(f"inertia must be > 0, got {self.inertia}")
        if self.damping < 0:
            raise ValueError(f"damping must be >= 0, got {self.damping}")
        if self.disturbance_bound < 0:
            raise ValueError(f"disturbance_bound must be >= 0, got {self.disturbance_bound}")
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "storages", tuple(self.storages))
        if self.n_units == 0:
            raise ValueError("need at least one generator or storage unit")

    @property
    def n_generators(self):
        return len(self.generators)

    @property
    def n_storages(self):
        return len(self.storages)

    @property
    def n_units(self):
        """Input dimension m."""
        return self.n_generators + self.n_storages

    @property
    def n_states(self):
        """State dimension: frequency + (power, governor) per generator + storage power."""
        return 1 + 2 * self.n_generators + self.n_storages

    @property
    def unit_bounds(self):
        """Physical per-unit power rate bounds as an m-vector."""
        return np.array([g.gamma for g in self.generators]
                        + [s.gamma for s in self.storages])


@dataclass(frozen=True)
class ContinuousModel:
    A_c: np.ndarray
    B_c: np.ndarray
    H_c: np.ndarray
    state_labels: tuple = ()


@dataclass(frozen=True)
class DiscreteModel:
    A: np.ndarray
    B: np.ndarray
    H: np.ndarray
    tau: float

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]


def build_continuous(params: PowerSystemParams) -> ContinuousModel:
    """Assemble (A_c, B_c, H_c) for the swing + governor/turbine + storage dynamics."""
    nG, nES = params.n_generators, params.n_storages
    n, m = params.n_states, params.n_units
    M, D = params.inertia, params.damping

    A = np.zeros((n, n))
    B = np.zeros((n, m))
    H = np.zeros((n, 1))

    A[0, 0] = -D / M
    H[0, 0] = -1.0 / M
    for j, gen in enumerate(params.generators):
        ip, ig = 1 + j, 1 + nG + j      # rows for dP_G_j and dX_gov_j
        A[0, ip] = 1.0 / M
        A[ip, ip] = -1.0 / gen.T_t
        A[ip, ig] = 1.0 / gen.T_t
        A[ig, 0] = -1.0 / (gen.T_g * gen.R)   # primary droop feedback
        A[ig, ig] = -1.0 / gen.T_g
        B[ig, j] = 1.0 / gen.T_g
    for i, st in enumerate(params.storages):
        ie = 1 + 2 * nG + i
        A[0, ie] = 1.0 / M
        A[ie, ie] = -1.0 / st.T_ES
        B[ie, nG + i] = 1.0 / st.T_ES

    labels = (["df"] + [f"dP_G_{j+1}" for j in range(nG)]
              + [f"dX_gov_{j+1}" for j in range(nG)]
              + [f"dP_ES_{i+1}" for i in range(nES)])
    return ContinuousModel(A, B, H, tuple(labels))


def matrix_exponential(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got shape {M.shape}")
    return scipy.linalg.expm(M)


def discretize(model: ContinuousModel, tau: float) -> DiscreteModel:
    """Exact ZOH discretization via the augmented-matrix exponential.

    Exponentiating [[A_c, [B_c H_c]], [0, 0]] * tau yields A in the top-left
    block and the ZOH integrals of B_c and H_c in the top-right block.
    """
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    n = model.A_c.shape[0]
    m = model.B_c.shape[1]
    inputs = np.hstack([model.B_c, model.H_c])
    aug = np.zeros((n + m + 1, n + m + 1))
    aug[:n, :n] = model.A_c
    aug[:n, n:] = inputs
    E = matrix_exponential(tau * aug)
    return DiscreteModel(A=E[:n, :n], B=E[:n, n:n + m], H=E[:n, n + m:], tau=tau)

from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass(frozen=True)
class ProblemConfig:
    """Parameters of (-Delta)^m u = K(y) u^((N+2m)/(N-2m)) and of the lattice.

    ``a`` holds the coefficients of K(y) = K0 + sum_i a_i |y_i|^beta near each
    concentration point. ``vartheta`` fixes the decay exponent
    tau = (N-2m)/2 - vartheta used by the weighted norms and the lattice
    admissibility test.
    """

    N: int
    m: int
    k: int
    beta: float
    a: tuple
    K0: float = 1.0
    L: float = 16.0
    vartheta: float = 0.1
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        if self.check:
            self.validate()

    @property
    def s(self):
        """Half the homogeneity defect, (N-2m)/2."""
        return 0.5 * (self.N - 2 * self.m)

    @property
    def tau(self):
        return self.s - self.vartheta

    @property
    def mstar(self):
        return 2.0 * self.N / (self.N - 2 * self.m)

    @property
    def kappa(self):
        return (self.beta - self.s) / self.s

    @property
    def mu_exponent(self):
        """Exponent of L in the height law mu ~ L^((N-2m)/(beta-N+2m))."""
        return (self.N - 2 * self.m) / (self.beta - self.N + 2 * self.m)

    def validate(self):
        N, m, k = self.N, self.m, self.k
        if m < 1:
            raise ConfigError(f"m must be a positive integer, got m={m}")
        if not N > 2 * m + 2:
            raise ConfigError(f"dimension restriction N > 2m+2 violated: N={N}, m={m}")
        if not 1 <= k < 0.5 * (N - 2 * m):
            raise ConfigError(
                f"lattice dimension must satisfy 1 <= k < (N-2m)/2 = {0.5 * (N - 2 * m)}, got k={k}")
        if not N - 2 * m < self.beta < N:
            raise ConfigError(
                f"(A3) requires beta in (N-2m, N) = ({N - 2 * m}, {N}), got beta={self.beta}")
        if len(self.a) != N:
            raise ConfigError(f"(A3) needs one coefficient a_i per coordinate: got {len(self.a)}, N={N}")
        if any(v == 0.0 for v in self.a):
            raise ConfigError("(A3) requires every a_i != 0")
        if not sum(self.a) < 0.0:
            raise ConfigError(f"(A3) requires sum(a_i) < 0, got {sum(self.a)}")
        if not self.K0 > 0.0:
            raise ConfigError(f"(A3) requires K(0) > 0, got K0={self.K0}")
        if not self.L > 0.0:
            raise ConfigError(f"L must be positive, got L={self.L}")
        if not self.vartheta > 0.0:
            raise ConfigError(f"vartheta must be positive, got {self.vartheta}")
        if not self.tau > k:
            raise ConfigError(
                f"tau = (N-2m)/2 - vartheta = {self.tau} must exceed k={k}; decrease vartheta")
        # (A1): K must stay bounded and positive on the folded cell
        kmin = self.K0 + sum(min(v, 0.0) for v in self.a) * 0.5 ** self.beta
        if not kmin > 0.0:
            raise ConfigError(f"(A1) violated: the synthetic K reaches {kmin} <= 0 on the unit cell")

    def replace(self, **changes):
        values = {f: getattr(self, f) for f in ("N", "m", "k", "beta", "a", "K0", "L", "vartheta")}
        values.update(changes)
        return ProblemConfig(**values)


def default_coefficients(N, total=-1.0):
    """Equal (A3) coefficients a_i = total / N."""
    return tuple([total / N] * N)

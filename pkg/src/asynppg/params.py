"""Step-size, penalty and averaging-sequence laws.

Everything is evaluated from closed forms.  The inverse averaging weight

    1/alpha_i(t_m^(n)) = n/P_{i,m} + 1/alpha_1 + m - 1

is the primary quantity; ``alpha`` itself is its reciprocal.  With
``alpha_1 = 1`` the slot-end inverses are integers, so the slot-to-slot
increments are exact.
"""

from dataclasses import dataclass
import math

from .errors import ConstraintViolation, InfeasibleQSchedule, QBelowLipschitz


def alpha_slot_end(m, alpha1):
    """``alpha(t_m - 1) = alpha1 / ((m-1)*alpha1 + 1)``."""
    return alpha1 / ((m - 1) * alpha1 + 1.0)


def alpha_intra(m, n, P, alpha1):
    """``alpha_i(t_m^(n))`` for the ``n``-th of ``P`` updates in slot ``m``."""
    if not 1 <= n <= P:
        raise ValueError(f"need 1 <= n <= P, got n={n}, P={P}")
    return 1.0 / (n / P + 1.0 / alpha1 + m - 1)


def pi_bound(alpha1, H):
    """Upper bound of ``alpha_i(t_m^(n)) / alpha(t_{m+2}-1)``."""
    return (2.0 * alpha1 + 1.0) / (alpha1 / H + 1.0)


def beta_max(mu, H, D, Pi, normA, max_dq=0.0):
    """Right end of the admissible penalty interval.

    Returns ``inf`` when ``normA == 0`` (any beta works).
    """
    if normA == 0.0:
        return math.inf
    slack = mu / H - max_dq
    if slack <= 0.0:
        raise InfeasibleQSchedule(f"mu/H = {mu / H} does not exceed max Q increment {max_dq}")
    return slack / (2.0 * (H + D) * Pi * normA ** 2)


def eta(P, m, Q_m, beta, Pi, normA, alpha1, H, D, Lg=None):
    """Step size ``1/eta = P*(Q_m + 2(H+D) beta Pi ||A||^2 / alpha(t_{m+2}-1))``."""
    if Lg is not None and Q_m < Lg:
        raise QBelowLipschitz(f"Q_m = {Q_m} below L^g = {Lg}")
    c = 2.0 * (H + D) * beta * Pi * normA ** 2
    return 1.0 / (P * (Q_m + c / alpha_slot_end(m + 2, alpha1)))


@dataclass(frozen=True)
class ParamSchedule:
    alpha1: float
    H: int
    D: int
    beta: float
    Q: tuple  # Q_0, Q_1, ...; the last entry repeats
    Pi: float
    normA: float
    Lg: float
    mu: float
    beta_cap: float

    @property
    def coupling(self):
        """``2 (H+D) beta Pi ||A||^2``."""
        return 2.0 * (self.H + self.D) * self.beta * self.Pi * self.normA ** 2

    def Q_at(self, m):
        return self.Q[min(m, len(self.Q) - 1)]

    def inv_alpha_slot_end(self, m):
        """``1/alpha(t_m - 1)``."""
        return 1.0 / self.alpha1 + m - 1

    def alpha_slot_end(self, m):
        return alpha_slot_end(m, self.alpha1)

    def inv_alpha(self, m, n, P):
        return n / P + 1.0 / self.alpha1 + m - 1

    def xi(self, m):
        """Slot-common ``Q_m + coupling/alpha(t_{m+2}-1)``; ``1/eta_i = P_{i,m} * xi(m)``."""
        return self.Q_at(m) + self.coupling * self.inv_alpha_slot_end(m + 2)

    def eta(self, m, P):
        return 1.0 / (P * self.xi(m))

    def Xi(self, m):
        """Common value of ``theta_i/(alpha_i eta_i)`` at ``t_m - 1``."""
        return self.xi(m - 1)

    def penalty(self, m):
        """Slot-``m`` penalty weight ``beta / alpha(t_{m+1}-1)``."""
        return self.beta * self.inv_alpha_slot_end(m + 1)

    def to_dict(self):
        return {"alpha1": self.alpha1, "H": self.H, "D": self.D, "beta": self.beta,
                "Q": list(self.Q), "Pi": self.Pi, "normA": self.normA, "Lg": self.Lg,
                "mu": self.mu, "beta_max": self.beta_cap}


def make_params(problem, H, D, alpha1=1.0, beta="auto", Q=None, strict=True):
    """Resolve the parameter schedule for ``problem`` on an ``(H, D)`` network.

    ``Q`` defaults to the uniform choice ``L^g``; a list gives ``Q_0, Q_1, ...``
    with the last value held.  ``beta="auto"`` takes the admissible maximum
    (or 1 when ``||A|| = 0``).  An explicit ``beta`` above the maximum is
    rejected unless ``strict=False``.
    """
    if not alpha1 > 0:
        raise ConstraintViolation("alpha1", f"must be positive, got {alpha1}")
    Lg, mu, normA = problem.Lg, problem.mu, problem.norm_A
    if Q is None or Q == "uniform":
        Q = (Lg,)
    elif isinstance(Q, (int, float)):
        Q = (float(Q),)
    else:
        Q = tuple(float(q) for q in Q)
        if not Q:
            raise ConstraintViolation("Q", "empty Q schedule")
    for k, q in enumerate(Q):
        if q < Lg:
            raise QBelowLipschitz(f"Q_{k} = {q} below L^g = {Lg}")
    incs = [b - a for a, b in zip(Q, Q[1:])]
    max_dq = max([0.0] + incs)
    if max_dq >= mu / H:
        raise InfeasibleQSchedule(f"Q increment {max_dq} not below mu/H = {mu / H}")
    Pi = pi_bound(alpha1, H)
    cap = beta_max(mu, H, D, Pi, normA, max_dq)
    if beta == "auto" or beta is None:
        b = 1.0 if math.isinf(cap) else cap
    else:
        b = float(beta)
        if not b > 0:
            raise ConstraintViolation("beta", f"must be positive, got {b}")
        if strict and b > cap:
            raise ConstraintViolation("beta", f"{b} exceeds admissible maximum {cap}")
    return ParamSchedule(alpha1=float(alpha1), H=H, D=D, beta=b, Q=Q, Pi=Pi,
                         normA=normA, Lg=Lg, mu=mu, beta_cap=cap)

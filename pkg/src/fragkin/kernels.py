"""Collision and fragmentation kernels, presets and a hypothesis checker.

Collision kernels are bounded (or matched) by

    C(x, y) <= k1 (1 + x)^nu (1 + y)^nu / (x y)^sigma,

and fragmentation kernels satisfy the daughter-mass identity
``int_0^y x F(x, y | z) dx = y`` together with ``F <= k2 / y^beta``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import DomainError, ModelError, UnsupportedOperationError

__all__ = [
    "CollisionFamily",
    "FragmentationFamily",
    "CollisionKernelSpec",
    "FragmentationKernelSpec",
    "HypothesisCheck",
    "HypothesisReport",
    "COLLISION_PRESETS",
    "FRAGMENTATION_PRESETS",
    "collision_preset",
    "fragmentation_preset",
    "constant",
    "singular_product",
    "brownian",
    "cheng_redner",
    "powerlaw",
    "powerlaw_k2",
    "half_split",
    "evaluate_collision",
    "evaluate_fragmentation",
    "fragment_count",
    "mass_moment",
    "verify_hypotheses",
]


class CollisionFamily(str, enum.Enum):
    CONSTANT = "constant"
    SINGULAR_PRODUCT = "singular_product"
    SMOLUCHOWSKI_BROWNIAN = "smoluchowski_brownian"
    CHENG_REDNER_I = "cheng_redner_I"
    CHENG_REDNER_II = "cheng_redner_II"
    CHENG_REDNER_III = "cheng_redner_III"
    CUSTOM = "custom"


class FragmentationFamily(str, enum.Enum):
    POWERLAW = "powerlaw"
    HALF_SPLIT_DELTA = "half_split_delta"
    CUSTOM = "custom"


SPLIT_RULES = ("both", "larger", "smaller")


def _call_custom(func, *args):
    """Evaluate a user callable on arrays, falling back to element-wise calls."""
    arrays = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in args))
    try:
        out = np.asarray(func(*arrays), dtype=float)
        if out.shape == arrays[0].shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.vectorize(lambda *a: float(func(*a)), otypes=[float])(*arrays)


def _check_sizes(*sizes):
    for s in sizes:
        a = np.asarray(s, dtype=float)
        if not np.all(a > 0):
            raise DomainError(f"sizes must be strictly positive, got {s!r}")


@dataclass(frozen=True)
class CollisionKernelSpec:
    """Symmetric collision rate ``C(x, y)`` with its growth-bound parameters.

    ``k1 = 0`` is accepted and means the kernel vanishes identically
    (no collisions); every built-in family scales with ``k1``.
    """

    family: CollisionFamily
    k1: float = 1.0
    sigma: float = 0.0
    nu: float = 0.0
    xi: float = 0.0
    custom_eval: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "family", CollisionFamily(self.family))
        if not (self.k1 >= 0 and math.isfinite(self.k1)):
            raise DomainError(f"k1 must be a nonnegative finite rate scale, got {self.k1}")
        if not 0.0 <= self.sigma <= 0.5:
            raise DomainError(f"sigma must lie in [0, 1/2], got {self.sigma}")
        if not 0.0 <= self.nu <= 1.0:
            raise DomainError(f"nu must lie in [0, 1], got {self.nu}")
        if self.family is CollisionFamily.CUSTOM and self.custom_eval is None:
            raise DomainError("custom collision family requires custom_eval")

    def rate(self, x, y):
        """Vectorised kernel evaluation without domain checks."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        fam = self.family
        if fam is CollisionFamily.CUSTOM:
            return _call_custom(self.custom_eval, x, y)
        # argument order fixed by sorting so that C(x, y) == C(y, x) bitwise
        lo = np.minimum(x, y)
        hi = np.maximum(x, y)
        if fam is CollisionFamily.CONSTANT:
            return np.full(np.broadcast(lo, hi).shape, float(self.k1))
        if fam is CollisionFamily.SINGULAR_PRODUCT:
            return self.k1 * (1.0 + lo) ** self.nu * (1.0 + hi) ** self.nu / (lo * hi) ** self.sigma
        if fam is CollisionFamily.SMOLUCHOWSKI_BROWNIAN:
            a, b = np.cbrt(lo), np.cbrt(hi)
            return 0.25 * self.k1 * (a + b) * (1.0 / a + 1.0 / b)
        if fam is CollisionFamily.CHENG_REDNER_I:
            return self.k1 * (lo * hi) ** (0.5 * self.xi)
        if fam is CollisionFamily.CHENG_REDNER_II:
            return self.k1 * hi**self.xi
        if fam is CollisionFamily.CHENG_REDNER_III:
            return self.k1 * lo**self.xi
        raise AssertionError(fam)

    def bound(self, x, y):
        """Right-hand side of the growth bound for these parameters."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.k1 * (1.0 + x) ** self.nu * (1.0 + y) ** self.nu / (x * y) ** self.sigma

    @property
    def is_zero(self) -> bool:
        return self.k1 == 0.0 and self.family is not CollisionFamily.CUSTOM


@dataclass(frozen=True)
class FragmentationKernelSpec:
    """Daughter distribution ``F(x, y | z)`` with its daughter-bound parameters.

    ``split_rule`` only applies to the half-split delta family and selects
    which collision partner breaks (Cheng-Redner models I-III):
    ``"both"`` always, ``"larger"`` when ``z <= y``, ``"smaller"`` when
    ``y <= z``.  A mother that does not break is returned unchanged.
    """

    family: FragmentationFamily
    alpha: float = 0.0
    k2: float = 1.0
    beta: float = 0.0
    theta_max: Optional[float] = None
    split_rule: str = "both"
    custom_eval: Optional[Callable] = field(default=None, compare=False)
    validity: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "family", FragmentationFamily(self.family))
        if self.family is FragmentationFamily.POWERLAW and not self.alpha > -1:
            raise DomainError(f"alpha must exceed -1, got {self.alpha}")
        if not self.k2 > 0:
            raise DomainError(f"k2 must be positive, got {self.k2}")
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")
        if self.split_rule not in SPLIT_RULES:
            raise DomainError(f"split_rule must be one of {SPLIT_RULES}, got {self.split_rule!r}")
        if self.family is FragmentationFamily.CUSTOM and self.custom_eval is None:
            raise DomainError("custom fragmentation family requires custom_eval")
        if self.theta_max is None:
            if self.family is FragmentationFamily.POWERLAW:
                object.__setattr__(self, "theta_max", (self.alpha + 2.0) / (self.alpha + 1.0))
            elif self.family is FragmentationFamily.HALF_SPLIT_DELTA:
                object.__setattr__(self, "theta_max", 2.0)
        if self.theta_max is not None and not self.theta_max > 0:
            raise DomainError(f"theta_max must be positive, got {self.theta_max}")

    @property
    def is_delta(self) -> bool:
        return self.family is FragmentationFamily.HALF_SPLIT_DELTA

    @property
    def depends_on_partner(self) -> bool:
        if self.family is FragmentationFamily.POWERLAW:
            return False
        if self.is_delta:
            return self.split_rule != "both"
        return True

    def breaks(self, y, z):
        """Boolean mask: does a mother ``y`` hit by ``z`` split in two (delta family)."""
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        if self.split_rule == "both":
            return np.ones(np.broadcast(y, z).shape, dtype=bool)
        if self.split_rule == "larger":
            return z <= y
        return y <= z

    def density(self, x, y, z):
        """Vectorised pointwise ``F(x, y | z)``; zero for ``x > y``."""
        if self.is_delta:
            raise UnsupportedOperationError(
                "delta fragmentation has no pointwise density; use solver.discretize_fragments"
            )
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.family is FragmentationFamily.POWERLAW:
            a = self.alpha
            val = (a + 2.0) * x**a / y ** (a + 1.0)
        else:
            val = _call_custom(self.custom_eval, x, y, z)
        return np.where(x <= y, val, 0.0)

    def cell_count(self, a, b, y):
        """Closed-form ``int_a^b F(x, y) dx`` for the power-law family (``a <= b <= y``)."""
        p = self.alpha + 1.0
        return (self.alpha + 2.0) / p * (np.asarray(b) ** p - np.asarray(a) ** p) / np.asarray(y) ** p

    @property
    def validity_note(self) -> str:
        if self.family is FragmentationFamily.POWERLAW:
            if self.validity is not None:
                lo, hi = self.validity
                return f"daughter bound holds only on the truncated domain [{lo:g}, {hi:g}]"
            return "daughter bound holds only on a truncated domain"
        if self.is_delta:
            return "distributional kernel: not a function kernel, usable only in discretised form"
        return "user supplied"


# ---------------------------------------------------------------------------
# presets

def constant(k1: float = 1.0) -> CollisionKernelSpec:
    return CollisionKernelSpec(CollisionFamily.CONSTANT, k1=k1, sigma=0.0, nu=0.0)


def singular_product(k1: float = 1.0, sigma: float = 0.5, nu: float = 0.0) -> CollisionKernelSpec:
    """The growth bound taken as the kernel itself (equality case)."""
    return CollisionKernelSpec(CollisionFamily.SINGULAR_PRODUCT, k1=k1, sigma=sigma, nu=nu)


def brownian(k1: float = 1.0) -> CollisionKernelSpec:
    """Smoluchowski Brownian kernel ``(k1/4)(x^1/3 + y^1/3)(x^-1/3 + y^-1/3)``.

    The 1/4 normalisation makes the growth bound hold with ``sigma = 1/3, nu = 2/3``
    and the same ``k1``.
    """
    return CollisionKernelSpec(CollisionFamily.SMOLUCHOWSKI_BROWNIAN, k1=k1, sigma=1.0 / 3.0, nu=2.0 / 3.0)


def cheng_redner(model: int, xi: float = 0.0, k1: float = 1.0) -> CollisionKernelSpec:
    """Collision kernel of Cheng-Redner model I, II or III with homogeneity ``xi``.

    The growth-bound exponents are derived from ``xi``; a DomainError is raised
    when they leave ``sigma <= 1/2, nu <= 1``.
    """
    if model == 1:
        fam = CollisionFamily.CHENG_REDNER_I
        sigma, nu = max(0.0, -xi / 2), max(0.0, xi / 2)
    elif model == 2:
        fam = CollisionFamily.CHENG_REDNER_II
        sigma, nu = (-xi / 2, 0.0) if xi < 0 else (0.0, xi)
    elif model == 3:
        fam = CollisionFamily.CHENG_REDNER_III
        sigma, nu = (-xi, -xi) if xi < 0 else (0.0, xi / 2)
    else:
        raise DomainError(f"Cheng-Redner model must be 1, 2 or 3, got {model}")
    return CollisionKernelSpec(fam, k1=k1, sigma=sigma, nu=nu, xi=xi)


def powerlaw_k2(alpha: float, beta: float, n: float) -> float:
    """Smallest ``k2`` with ``F <= k2 / y^beta`` on ``1/n <= x <= y <= n``."""
    # F y^beta = (a+2) x^a y^(beta-a-1); extremes sit at corners of the triangle
    lo, hi = 1.0 / n, float(n)
    corners = [(lo, lo), (hi, hi), (lo, hi)]
    return max((alpha + 2.0) * x**alpha * y ** (beta - alpha - 1.0) for x, y in corners)


def powerlaw(alpha: float = 0.0, beta: float = 0.0, n: float = 8.0, k2: Optional[float] = None) -> FragmentationKernelSpec:
    if k2 is None:
        k2 = powerlaw_k2(alpha, beta, n)
    return FragmentationKernelSpec(
        FragmentationFamily.POWERLAW, alpha=alpha, k2=k2, beta=beta, validity=(1.0 / n, float(n))
    )


def half_split(split_rule: str = "both") -> FragmentationKernelSpec:
    """``F = 2 delta(x - y/2)``, optionally gated by which partner breaks."""
    return FragmentationKernelSpec(FragmentationFamily.HALF_SPLIT_DELTA, split_rule=split_rule, theta_max=2.0)


COLLISION_PRESETS = {
    "constant": lambda k1=1.0, **_: constant(k1),
    "singular-product": lambda k1=1.0, sigma=0.5, nu=0.0, **_: singular_product(k1, sigma, nu),
    "brownian": lambda k1=1.0, **_: brownian(k1),
    "cr-model-1": lambda k1=1.0, xi=0.0, **_: cheng_redner(1, xi, k1),
    "cr-model-2": lambda k1=1.0, xi=0.0, **_: cheng_redner(2, xi, k1),
    "cr-model-3": lambda k1=1.0, xi=0.0, **_: cheng_redner(3, xi, k1),
}

# which partner breaks in the natural fragmentation pairing of each collision preset
CR_SPLIT_RULE = {"cr-model-1": "both", "cr-model-2": "larger", "cr-model-3": "smaller"}

FRAGMENTATION_PRESETS = {
    "powerlaw": lambda alpha=0.0, beta=0.0, n=8.0, k2=None, **_: powerlaw(alpha, beta, n, k2),
    "half-split": lambda split_rule="both", **_: half_split(split_rule),
}


def collision_preset(name: str, **params) -> CollisionKernelSpec:
    try:
        factory = COLLISION_PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown collision preset {name!r}; known: {sorted(COLLISION_PRESETS)}") from None
    return factory(**params)


def fragmentation_preset(name: str, **params) -> FragmentationKernelSpec:
    try:
        factory = FRAGMENTATION_PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown fragmentation preset {name!r}; known: {sorted(FRAGMENTATION_PRESETS)}") from None
    return factory(**params)


# ---------------------------------------------------------------------------
# operations

def evaluate_collision(spec: CollisionKernelSpec, x, y):
    _check_sizes(x, y)
    out = spec.rate(x, y)
    return float(out) if np.ndim(out) == 0 else out


def evaluate_fragmentation(spec: FragmentationKernelSpec, x, y, z):
    _check_sizes(x, y, z)
    out = spec.density(x, y, z)
    return float(out) if np.ndim(out) == 0 else out


def _quad(func, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(func, a, b, limit=200, epsabs=0.0, epsrel=1e-10)
        except integrate.IntegrationWarning as exc:
            raise ModelError(f"quadrature did not converge on [{a}, {b}]: {exc}") from None
    if not math.isfinite(val):
        raise ModelError(f"integral on [{a}, {b}] is not finite")
    return val


def fragment_count(spec: FragmentationKernelSpec, y: float, z: float) -> float:
    """Mean number of daughters ``theta(y, z) = int_0^y F(x, y | z) dx``."""
    _check_sizes(y, z)
    if spec.family is FragmentationFamily.POWERLAW:
        return (spec.alpha + 2.0) / (spec.alpha + 1.0)
    if spec.is_delta:
        return 2.0 if bool(spec.breaks(y, z)) else 1.0
    return _quad(lambda x: float(spec.density(x, y, z)), 0.0, y)


def mass_moment(spec: FragmentationKernelSpec, y: float, z: float, method: str = "closed") -> float:
    """``int_0^y x F(x, y | z) dx``; ``method="quadrature"`` forces the generic path."""
    _check_sizes(y, z)
    if spec.is_delta:
        return float(y)
    if method == "closed" and spec.family is FragmentationFamily.POWERLAW:
        # (a+2)/y^(a+1) * y^(a+2)/(a+2)
        a = spec.alpha
        return y ** (a + 2.0) / y ** (a + 1.0)
    return _quad(lambda x: x * float(spec.density(x, y, z)), 0.0, y)


@dataclass
class HypothesisCheck:
    name: str
    status: str  # "pass", "fail" or "n/a"
    worst_ratio: float = float("nan")
    worst_location: Optional[tuple] = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "worst_ratio": self.worst_ratio,
            "worst_location": list(self.worst_location) if self.worst_location else None,
            "note": self.note,
        }


@dataclass
class HypothesisReport:
    domain: tuple
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"domain": list(self.domain), "passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def format(self) -> str:
        lines = [f"hypotheses on [{self.domain[0]:g}, {self.domain[1]:g}]: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            loc = "" if c.worst_location is None else " at " + ", ".join(f"{v:.6g}" for v in c.worst_location)
            ratio = "" if math.isnan(c.worst_ratio) else f" worst={c.worst_ratio:.6g}"
            note = f"  ({c.note})" if c.note else ""
            lines.append(f"  {c.status.upper():4s} {c.name}{ratio}{loc}{note}")
        return "\n".join(lines)


def _argmax_location(values, *coords):
    idx = int(np.nanargmax(values))
    return float(np.ravel(values)[idx]), tuple(float(np.ravel(c)[idx]) for c in coords)


def verify_hypotheses(
    cspec: CollisionKernelSpec,
    fspec: FragmentationKernelSpec,
    domain: tuple = (0.125, 8.0),
    samples: int = 48,
    tol: float = 1e-6,
) -> HypothesisReport:
    """Check symmetry, positivity, both kernel bounds and the fragment identities on a sample lattice.

    Violations are reported, never raised.  Samples are a deterministic
    log-spaced lattice over ``domain`` (corners included).
    """
    lo, hi = map(float, domain)
    if not (0 < lo <= hi):
        raise DomainError(f"domain must lie in (0, inf), got {domain}")
    if samples < 1:
        raise DomainError("samples must be >= 1")
    pts = np.geomspace(lo, hi, samples)
    X, Y = np.meshgrid(pts, pts, indexing="ij")
    checks = []

    cxy = cspec.rate(X, Y)
    cyx = cspec.rate(Y, X)

    finite = np.isfinite(cxy) & (cxy >= 0)
    if finite.all():
        checks.append(HypothesisCheck("nonnegative finite", "pass"))
    else:
        i = int(np.argmin(finite.ravel()))
        checks.append(HypothesisCheck("nonnegative finite", "fail", worst_location=(X.ravel()[i], Y.ravel()[i])))

    scale = np.maximum(np.maximum(np.abs(cxy), np.abs(cyx)), np.finfo(float).tiny)
    asym = np.abs(cxy - cyx) / scale
    worst, loc = _argmax_location(asym, X, Y)
    checks.append(HypothesisCheck("symmetry", "pass" if worst <= tol else "fail", worst, loc if worst > 0 else None))

    bound = cspec.bound(X, Y)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, cxy / bound, np.where(cxy > 0, np.inf, 0.0))
    worst, loc = _argmax_location(ratio, X, Y)
    checks.append(HypothesisCheck("collision bound", "pass" if worst <= 1 + tol else "fail", worst, loc))

    note = ""
    if fspec.beta == 0:
        note = "beta = 0 boundary case: bound reduces to a plain supremum"
    status = "pass" if fspec.beta <= cspec.sigma + 1e-15 else "fail"
    if status == "fail":
        note = f"beta = {fspec.beta:g} exceeds sigma = {cspec.sigma:g}"
    checks.append(HypothesisCheck("exponent beta <= sigma", status, fspec.beta, None, note))

    zs = np.geomspace(lo, hi, min(samples, 8))
    if fspec.is_delta:
        checks.append(HypothesisCheck("fragmentation bound", "n/a", note=fspec.validity_note))
        checks.append(HypothesisCheck("mass identity", "pass", 0.0, note="exact: delta at y/2 carries mass y"))
        checks.append(HypothesisCheck("fragment count", "pass", 2.0, note="theta = 2 (or 1 when the mother does not break)"))
        return HypothesisReport((lo, hi), checks)

    X3, Y3, Z3 = np.meshgrid(pts, pts, zs, indexing="ij")
    mask = X3 <= Y3
    F = np.where(mask, fspec.density(X3, Y3, Z3), 0.0)
    ratio = F * Y3**fspec.beta / fspec.k2
    worst, loc = _argmax_location(ratio, X3, Y3, Z3)
    ok = worst <= 1 + tol
    note = ""
    if not ok and fspec.family is FragmentationFamily.POWERLAW:
        note = fspec.validity_note
    checks.append(HypothesisCheck("fragmentation bound", "pass" if ok else "fail", worst, loc, note))

    ys = np.geomspace(lo, hi, min(samples, 12))
    worst_err, worst_loc = 0.0, None
    counts = []
    try:
        for y in ys:
            for z in zs[:: max(1, len(zs) // 3)]:
                m = mass_moment(fspec, y, z, method="quadrature")
                err = abs(m - y) / y
                if err > worst_err:
                    worst_err, worst_loc = err, (float(y), float(z))
                counts.append((fragment_count(fspec, y, z), y, z))
    except ModelError as exc:
        checks.append(HypothesisCheck("mass identity", "fail", note=str(exc)))
        checks.append(HypothesisCheck("fragment count", "fail", note=str(exc)))
        return HypothesisReport((lo, hi), checks)
    checks.append(HypothesisCheck("mass identity", "pass" if worst_err <= tol else "fail", worst_err, worst_loc))

    theta, ty, tz = max(counts)
    if fspec.theta_max is None:
        checks.append(HypothesisCheck("fragment count", "pass", theta, (ty, tz), "finite; no uniform bound declared"))
    else:
        ok = math.isfinite(theta) and theta <= fspec.theta_max * (1 + tol)
        checks.append(HypothesisCheck("fragment count", "pass" if ok else "fail", theta / fspec.theta_max, (ty, tz)))
    return HypothesisReport((lo, hi), checks)

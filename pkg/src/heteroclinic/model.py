"""Double-well potentials and coefficient fields A(x, y).

Hypotheses on V and A are certified by dense sampling with recorded witnesses;
failures are returned as data in a :class:`CertificationReport`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .grid import CrossSection, CylinderGrid

__all__ = [
    "Potential",
    "ginzburg_landau",
    "polynomial_potential",
    "Check",
    "CertificationReport",
    "validate_potential",
    "CoefficientClass",
    "CoefficientField",
    "ModelError",
    "constant",
    "periodic_cosine",
    "gaussian_gap",
    "exponential_gap",
    "gaussian_well",
    "make_class1",
    "make_class2",
    "sample_on_grid",
    "certify_coefficient",
]

ScalarFn = Callable[[np.ndarray], np.ndarray]
# A(x, *ys) with numpy broadcasting; ys has one array per cross-section axis
FieldFn = Callable[..., np.ndarray]


class ModelError(ValueError):
    """A potential or coefficient field violates a construction precondition."""


@dataclass(frozen=True)
class Potential:
    name: str
    value: ScalarFn
    deriv: ScalarFn
    wells: tuple[float, float] = (-1.0, 1.0)

    def __call__(self, t):
        return self.value(t)


def ginzburg_landau() -> Potential:
    """V(t) = (t^2 - 1)^2."""
    return Potential(
        name="ginzburg_landau",
        value=lambda t: (np.asarray(t) ** 2 - 1.0) ** 2,
        deriv=lambda t: 4.0 * np.asarray(t) * (np.asarray(t) ** 2 - 1.0),
    )


def polynomial_potential(coefficients: Sequence[float], name: str = "polynomial") -> Potential:
    """Potential from power-series coefficients c0 + c1 t + c2 t^2 + ..."""
    p = np.polynomial.Polynomial(np.asarray(coefficients, dtype=float))
    dp = p.deriv()
    return Potential(name=name, value=lambda t: p(np.asarray(t, dtype=float)),
                     deriv=lambda t: dp(np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""
    witness: Optional[float | tuple[float, ...]] = None

    def to_dict(self) -> dict:
        w = self.witness
        if isinstance(w, tuple):
            w = [float(v) for v in w]
        elif w is not None:
            w = float(w)
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail, "witness": w}


@dataclass(frozen=True)
class CertificationReport:
    subject: str
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"subject": self.subject, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks]}


def validate_potential(V: Potential, sample_count: int = 2001, *, well_tol: float = 1e-12) -> CertificationReport:
    """Certify (V1) C^1 consistency, (V2) wells at +-1 with V >= 0, (V3) V > 0 off the wells.

    Samples are a uniform grid on [-3, 3] plus the exact points +-1.
    """
    if sample_count < 100:
        raise ModelError(f"sample_count must be >= 100, got {sample_count}")
    t = np.union1d(np.linspace(-3.0, 3.0, sample_count), [-1.0, 1.0])
    v = np.asarray(V.value(t), dtype=float)
    dv = np.asarray(V.deriv(t), dtype=float)
    checks = []

    # (V1): derivative against a centered difference on [-2, 2], at two step sizes
    ts = t[np.abs(t) <= 2.0]
    worst, worst_t = 0.0, None
    finite = np.all(np.isfinite(v)) and np.all(np.isfinite(dv))
    for h in (1e-4, 5e-5):
        fd = (V.value(ts + h) - V.value(ts - h)) / (2 * h)
        err = np.abs(np.asarray(V.deriv(ts)) - fd) / np.maximum(1.0, np.abs(fd))
        i = int(np.argmax(err))
        if err[i] > worst:
            worst, worst_t = float(err[i]), float(ts[i])
    ok = finite and worst <= 1e-6
    checks.append(Check("V1", ok, f"max relative derivative mismatch {worst:.3e}",
                        None if ok else worst_t))

    # (V2)
    at_wells = np.asarray(V.value(np.array([-1.0, 1.0])), dtype=float)
    if np.any(np.abs(at_wells) > well_tol):
        w = -1.0 if abs(at_wells[0]) > well_tol else 1.0
        checks.append(Check("V2", False, f"V(+-1) = {at_wells.tolist()}", w))
    elif np.any(v < 0):
        i = int(np.argmin(v))
        checks.append(Check("V2", False, f"V({t[i]:.6g}) = {v[i]:.6g} < 0", float(t[i])))
    else:
        checks.append(Check("V2", True, "V(-1) = V(1) = 0 and V >= 0 on samples"))

    # (V3)
    off = ~np.isin(t, [-1.0, 1.0])
    bad = off & (v <= 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[np.argmin(np.abs(v[bad]))])
        checks.append(Check("V3", False, f"V({t[i]:.6g}) = {v[i]:.6g} is not positive", float(t[i])))
    else:
        checks.append(Check("V3", True, f"min off-well sample {v[off].min():.3e} > 0"))
    return CertificationReport(V.name, tuple(checks))


class CoefficientClass(str, enum.Enum):
    PERIODIC = "periodic"
    CLASS1 = "class1"
    CLASS2 = "class2"


@dataclass(frozen=True)
class CoefficientField:
    """Coefficient A(x, y) >= A0 > 0.

    For Class 2 the stored ``base`` is the unscaled profile and evaluation applies
    ``base(epsilon * x, y)``; other classes ignore ``epsilon``.
    """

    class_tag: CoefficientClass
    base: FieldFn
    A0: float
    name: str = "A"
    period: Optional[float] = None
    companion: Optional["CoefficientField"] = None
    A_infinity: Optional[float] = None
    epsilon: float = 1.0
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def __call__(self, x, *ys):
        x = np.asarray(x, dtype=float)
        if self.class_tag is CoefficientClass.CLASS2:
            x = self.epsilon * x
        return self.base(x, *ys)

    def with_epsilon(self, epsilon: float) -> "CoefficientField":
        if self.class_tag is not CoefficientClass.CLASS2:
            raise ModelError("epsilon scaling applies to Class 2 fields only")
        if epsilon < 0:
            raise ModelError(f"epsilon must be nonnegative, got {epsilon}")
        return replace(self, epsilon=float(epsilon))


def _broadcast(value, x, ys):
    shape = np.broadcast_shapes(np.shape(x), *(np.shape(y) for y in ys))
    return np.broadcast_to(np.asarray(value, dtype=float), shape)


def constant(value: float) -> CoefficientField:
    """Constant coefficient, tagged periodic (trivially 1-periodic)."""
    if not value > 0:
        raise ModelError(f"constant coefficient must be positive, got {value}")
    c = float(value)
    return CoefficientField(CoefficientClass.PERIODIC, lambda x, *ys: _broadcast(c, x, ys) + 0.0,
                            A0=c, name=f"constant({c:g})", period=1.0, params={"value": c})


def periodic_cosine(a: float, b: float) -> CoefficientField:
    """A_p(x) = a + b cos(2 pi x)."""
    if not a - abs(b) > 0:
        raise ModelError(f"a - |b| must be positive for a positive periodic field, got a={a}, b={b}")

    def f(x, *ys):
        return _broadcast(a + b * np.cos(2 * np.pi * np.asarray(x)), x, ys) + 0.0

    return CoefficientField(CoefficientClass.PERIODIC, f, A0=a - abs(b),
                            name=f"{a:g}+{b:g}cos(2pix)", period=1.0, params={"a": a, "b": b})


def gaussian_gap(amplitude: float, width: float = 1.0) -> FieldFn:
    """gap(x) = amplitude * exp(-(x/width)^2)."""
    return lambda x, *ys: _broadcast(amplitude * np.exp(-(np.asarray(x) / width) ** 2), x, ys) + 0.0


def exponential_gap(amplitude: float, width: float = 1.0) -> FieldFn:
    """gap(x) = amplitude * exp(-|x|/width)."""
    return lambda x, *ys: _broadcast(amplitude * np.exp(-np.abs(np.asarray(x)) / width), x, ys) + 0.0


def gaussian_well(a0: float, a_inf: float, width: float = 1.0) -> FieldFn:
    """Class 2 profile a_inf - (a_inf - a0) exp(-(x/width)^2), minimal on the plane x = 0."""
    return lambda x, *ys: _broadcast(a_inf - (a_inf - a0) * np.exp(-(np.asarray(x) / width) ** 2), x, ys) + 0.0


def _sample_points(cross: CrossSection, extent: float, n_x: int):
    x = np.linspace(-extent, extent, n_x)
    ys = tuple(np.linspace(0.0, L, 9) for L in cross.extents)
    return np.meshgrid(x, *ys, indexing="ij"), x, np.meshgrid(*ys, indexing="ij")


def make_class1(A_p: CoefficientField, gap: FieldFn, *, cross: CrossSection = CrossSection(),
                sample_extent: float = 20.0, n_samples: int = 40001, name: str = "class1") -> CoefficientField:
    """A = A_p - gap, asymptotically periodic from below.

    The gap must be strictly positive (strict inequality A < A_p) and decay at
    infinity; the infimum of A must stay positive.
    """
    if A_p.class_tag is not CoefficientClass.PERIODIC:
        raise ModelError("Class 1 companion must be a periodic field")
    pts, x, _ = _sample_points(cross, sample_extent, n_samples)
    g = np.asarray(gap(*pts), dtype=float)
    if not np.all(g > 0):
        i = np.unravel_index(np.argmin(g), g.shape)
        raise ModelError(f"gap must be strictly positive (A < A_p is strict); gap = {g[i]:.3g} "
                         f"at x = {x[i[0]]:.6g}")
    far = float(np.max(np.abs(g[[0, -1]])))
    if far > 1e-3 * float(np.max(g)):
        raise ModelError(f"gap does not decay on the sampled window (|gap| = {far:.3g} at |x| = {sample_extent})")
    a = np.asarray(A_p(*pts), dtype=float) - g
    i = np.unravel_index(np.argmin(a), a.shape)
    yi = [float(p[i]) for p in pts[1:]]
    dx = float(x[1] - x[0])
    best = minimize_scalar(lambda s: float(A_p(s, *yi) - gap(s, *yi)),
                           bounds=(x[i[0]] - dx, x[i[0]] + dx), method="bounded",
                           options={"xatol": 1e-12})
    A0 = float(min(a[i], best.fun))
    argmin = float(best.x) if best.fun < a[i] else float(x[i[0]])
    if not A0 > 0:
        raise ModelError(f"inf A = {A0:.6g} <= 0 (attained near x = {x[i[0]]:.6g})")

    def f(x, *ys):
        return A_p(x, *ys) - gap(x, *ys)

    return CoefficientField(CoefficientClass.CLASS1, f, A0=A0, name=name, period=None,
                            companion=A_p, params={"argmin_x": argmin, "gap": gap})


def make_class2(profile: FieldFn, epsilon: float = 1.0, *, cross: CrossSection = CrossSection(),
                sample_extent: float = 50.0, n_samples: int = 20001, far: float = 1e4,
                tol: float = 1e-12, name: str = "class2") -> CoefficientField:
    """A(eps x, y) from a profile whose strict minimum sits on the plane x = 0.

    A0 is read from the plane x = 0 and A_infinity from the far ring |x| = ``far``.
    """
    if not epsilon > 0:
        raise ModelError(f"epsilon must be positive, got {epsilon}")
    pts, x, ys = _sample_points(cross, sample_extent, n_samples | 1)
    a = np.asarray(profile(*pts), dtype=float)
    zero = np.asarray(profile(np.zeros_like(ys[0]), *ys), dtype=float)
    A0 = float(np.min(zero))
    if np.max(zero) - A0 > tol * max(1.0, abs(A0)):
        raise ModelError("A(0, y) must equal the infimum for every y (profile varies along x = 0)")
    if np.min(a) < A0 - tol * max(1.0, abs(A0)):
        i = np.unravel_index(np.argmin(a), a.shape)
        raise ModelError(f"profile minimum is not on x = 0: A = {a[i]:.6g} < A(0,.) = {A0:.6g} "
                         f"at x = {x[i[0]]:.6g}")
    off = np.abs(x) > 1e-9
    if not np.all(a[off] > A0):
        raise ModelError("profile minimum on x = 0 is not strict")
    if not A0 > 0:
        raise ModelError(f"A0 = {A0:.6g} must be positive")
    ring = np.concatenate([np.ravel(profile(np.full_like(ys[0], s * far), *ys)) for s in (-1.0, 1.0)])
    A_inf = float(np.min(ring))
    if not np.isfinite(A_inf) or not A0 < A_inf:
        raise ModelError(f"need A0 < A_infinity < inf; got A0 = {A0:.6g}, A_infinity = {A_inf:.6g}")
    return CoefficientField(CoefficientClass.CLASS2, profile, A0=A0, name=name,
                            A_infinity=A_inf, epsilon=float(epsilon))


@lru_cache(maxsize=64)
def _sample(A: CoefficientField, grid: CylinderGrid) -> np.ndarray:
    out = np.array(np.broadcast_to(A(*grid.mesh), grid.shape), dtype=float)
    out.flags.writeable = False
    return out


def sample_on_grid(A: CoefficientField, grid: CylinderGrid) -> np.ndarray:
    """Nodewise values A(eps x, y) (eps = 1 except for Class 2). Cached and read-only."""
    return _sample(A, grid)


def certify_coefficient(A: CoefficientField, grid: CylinderGrid,
                        T_ladder: Sequence[int] = (5, 10, 20, 40)) -> CertificationReport:
    """Sampled checks of the structural hypotheses for A's class on ``grid`` and on growing windows."""
    a = sample_on_grid(A, grid)
    checks = []
    amin = float(a.min())
    checks.append(Check("A_positive", amin >= A.A0 - 1e-12 and A.A0 > 0,
                        f"min sampled A = {amin:.6g}, recorded A0 = {A.A0:.6g}"))
    tag = A.class_tag
    if tag is CoefficientClass.PERIODIC:
        shifted = np.asarray(A(grid.mesh[0] + 1.0, *grid.mesh[1:]), dtype=float)
        err = float(np.max(np.abs(np.broadcast_to(shifted, grid.shape) - a)))
        checks.append(Check("periodic", err <= 1e-12 * max(1.0, float(np.abs(a).max())),
                            f"max |A(x+1,y) - A(x,y)| = {err:.3e}"))
    elif tag is CoefficientClass.CLASS1:
        ap = sample_on_grid(A.companion, grid)
        rounded = float(np.min(ap - a))
        # A_p - A rounds to 0 where the gap underflows against A_p; evaluate the gap itself when known.
        gap_fn = A.params.get("gap")
        gap = np.asarray(gap_fn(*grid.mesh), dtype=float) + np.zeros(grid.shape) if gap_fn else ap - a
        i = np.unravel_index(np.argmin(gap), gap.shape)
        checks.append(Check("A2", bool(gap.min() > 0),
                            f"min gap = {gap.min():.3e}, min rounded (A_p - A) = {rounded:.3e}",
                            None if gap.min() > 0 else float(grid.x[i[0]])))
        ys = [np.asarray(y) for y in grid.y]
        mesh_y = np.meshgrid(*ys, indexing="ij")
        ring = []
        for T in T_ladder:
            vals = [np.abs(A(np.full_like(mesh_y[0], s * T), *mesh_y) - A.companion(np.full_like(mesh_y[0], s * T), *mesh_y))
                    for s in (-1.0, 1.0)]
            ring.append(float(max(np.max(v) for v in vals)))
        mono = all(b <= a_ + 1e-15 for a_, b in zip(ring, ring[1:]))
        checks.append(Check("A1", mono, "far-ring max |A - A_p| over T = "
                            + ", ".join(f"{T}: {r:.3e}" for T, r in zip(T_ladder, ring))))
    elif tag is CoefficientClass.CLASS2:
        plane = np.asarray(A.base(np.zeros_like(grid.mesh[1]), *grid.mesh[1:]), dtype=float)
        err = float(np.max(np.abs(plane - A.A0)))
        checks.append(Check("A3_min_on_plane", err <= 1e-12 * max(1.0, A.A0),
                            f"max |A(0,y) - A0| = {err:.3e}"))
        checks.append(Check("A3_gap", A.A0 < A.A_infinity,
                            f"A0 = {A.A0:.6g} < A_infinity = {A.A_infinity:.6g}"))
        ys = [np.asarray(y) for y in grid.y]
        mesh_y = np.meshgrid(*ys, indexing="ij")
        deficits = []
        for T in T_ladder:
            ring = min(float(np.min(A.base(np.full_like(mesh_y[0], s * T), *mesh_y))) for s in (-1.0, 1.0))
            deficits.append(max(0.0, A.A_infinity - ring))
        mono = all(b <= a_ + 1e-15 for a_, b in zip(deficits, deficits[1:]))
        checks.append(Check("A3_far_ring", mono, "A_infinity - min far-ring A over T = "
                            + ", ".join(f"{T}: {d:.3e}" for T, d in zip(T_ladder, deficits))))
    return CertificationReport(A.name, tuple(checks))

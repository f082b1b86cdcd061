"""Black-box objectives on the unit cube, and the noisy evaluation oracle.

Every objective is a picklable callable mapping a batch (m, d) of unit-cube
points to (m,) energies. Benchmarks defined on other boxes are pulled back
through an affine map recorded on the objective; output units are left as
defined by the original function.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import DimensionError, DomainError, ParameterError
from .kernels import KernelSpec
from .streams import RngStream

__all__ = [
    "Objective",
    "NoisyOracle",
    "make_synthetic",
    "make_named",
    "make_mlp",
    "make_psf",
    "bessel_j1",
    "get_objective",
    "list_objectives",
]


@dataclass(frozen=True)
class Objective:
    """A deterministic energy f: [0,1]^dim -> R with GP modelling defaults.

    fixed_hyperparams is (lengthscale, scale) when the surrogate should use
    known values, or None when they are to be fitted from data.
    """

    name: str
    dim: int
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    nu_default: float
    fixed_hyperparams: tuple[float, float] | None = None
    note: str = ""

    def eval(self, points) -> np.ndarray | float:
        P = np.asarray(points, dtype=float)
        single = P.ndim == 1
        P = np.atleast_2d(P)
        if P.shape[1] != self.dim:
            raise DimensionError(f"point dimension {P.shape[1]} != {self.dim}")
        if P.min(initial=0.0) < 0.0 or P.max(initial=1.0) > 1.0:
            raise DomainError("points must lie in the closed unit cube")
        out = np.asarray(self.fn(P), dtype=float).ravel()
        return float(out[0]) if single else out

    __call__ = eval


class NoisyOracle:
    """Evaluation channel: returns f(x) + sigma * z with z standard normal.

    One stream draw is consumed per queried point regardless of sigma, so the
    draw sequence is identical across noise levels. The instance counts
    queries and is confined to a single worker; parallel trials each build
    their own oracle from a derived stream.
    """

    def __init__(self, objective: Objective, sigma: float, rng: RngStream):
        if sigma < 0:
            raise ParameterError(f"sigma must be non-negative, got {sigma}")
        self.objective = objective
        self.sigma = float(sigma)
        self.rng = rng
        self.queries = 0

    def query(self, x) -> float:
        return float(self.query_batch(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    def query_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        vals = np.atleast_1d(self.objective.eval(X))
        noise = self.rng.normal(X.shape[0])
        self.queries += X.shape[0]
        return vals + self.sigma * noise


# ---------------------------------------------------------------------------
# synthetic kernel mixtures


class _KernelMixture:
    def __init__(self, centers: np.ndarray, coeffs: np.ndarray, kernel: KernelSpec):
        self.centers = centers
        self.coeffs = coeffs
        self.kernel = kernel

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return kernels.cross(self.kernel, X, self.centers) @ self.coeffs


def make_synthetic(dim: int, seed: int = 0) -> Objective:
    """Random mixture of 30*dim Matern-5/2 bumps: centers uniform in the cube,
    coefficients uniform in [-1, 1], lengthscale 0.2, unit scale. The same
    seed always reproduces the same function."""
    if dim < 1:
        raise ParameterError(f"dim must be >= 1, got {dim}")
    rng = RngStream(seed, (ord("s"),)).generator
    m = 30 * dim
    centers = rng.random((m, dim))
    coeffs = rng.uniform(-1.0, 1.0, m)
    kernel = KernelSpec(2.5, 0.2, 1.0)
    return Objective(
        name=f"synthetic-{dim}d" + (f"-s{seed}" if seed else ""),
        dim=dim,
        fn=_KernelMixture(centers, coeffs, kernel),
        nu_default=2.5,
        fixed_hyperparams=(0.2, 1.0),
        note=f"{m} random kernel bumps, construction seed {seed}",
    )


# ---------------------------------------------------------------------------
# named benchmarks, affinely pulled back to the unit cube


def _ackley(Z: np.ndarray) -> np.ndarray:
    d = Z.shape[1]
    a, b, c = 20.0, 0.2, 2 * np.pi
    s1 = np.sqrt(np.sum(Z * Z, axis=1) / d)
    s2 = np.mean(np.cos(c * Z), axis=1)
    return -a * np.exp(-b * s1) - np.exp(s2) + a + np.e


def _alpine1(Z: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(Z * np.sin(Z) + 0.1 * Z), axis=1)


def _product_peak(Z: np.ndarray) -> np.ndarray:
    c, w = 7.25, 0.5
    return np.prod(1.0 / (c**-2 + (Z - w) ** 2), axis=1)


def _zhou(Z: np.ndarray) -> np.ndarray:
    d = Z.shape[1]
    norm = (2 * np.pi) ** (-d / 2)

    def phi(Y):
        return norm * np.exp(-0.5 * np.sum(Y * Y, axis=1))

    return 10.0**d / 2.0 * (phi(10 * (Z - 1.0 / 3.0)) + phi(10 * (Z - 2.0 / 3.0)))


def _hennig(Z: np.ndarray) -> np.ndarray:
    S = np.array([[1.0, 0.5], [0.5, 1.0]])
    r = np.linalg.norm(Z, axis=1)
    return -np.sin(3 * r) ** 2 - np.einsum("ij,jk,ik->i", Z, S, Z)


# (base function, original box low, high); inputs are mapped x -> lo + (hi-lo)*x
_BENCHMARKS: dict[str, tuple[Callable, float, float]] = {
    "ackley": (_ackley, -32.768, 32.768),
    "alpine1": (_alpine1, -10.0, 10.0),
    "product-peak": (_product_peak, 0.0, 1.0),
    "zhou": (_zhou, 0.0, 1.0),
    "hennig": (_hennig, -1.0, 1.0),
}


class _AffineBenchmark:
    def __init__(self, base: str, lo: float, hi: float):
        self.base = base
        self.lo = lo
        self.hi = hi

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return _BENCHMARKS[self.base][0](self.lo + (self.hi - self.lo) * X)


def make_named(name: str, dim: int) -> Objective:
    """One of the classical test functions on its usual box, pulled back to
    the unit cube. hennig is 2-D only."""
    if name not in _BENCHMARKS:
        raise KeyError(f"unknown benchmark {name!r}; have {sorted(_BENCHMARKS)}")
    if name == "hennig" and dim != 2:
        raise ParameterError("hennig is defined for dim = 2 only")
    if dim < 1:
        raise ParameterError(f"dim must be >= 1, got {dim}")
    fn, lo, hi = _BENCHMARKS[name]
    label = name if name == "hennig" else f"{name}-{dim}d"
    return Objective(
        name=label,
        dim=dim,
        fn=_AffineBenchmark(name, lo, hi),
        nu_default=1.5,
        fixed_hyperparams=None,
        note=f"inputs mapped to [{lo}, {hi}]^{dim}",
    )


# ---------------------------------------------------------------------------
# fixed random MLP


class _MlpNet:
    def __init__(self, weights: list[np.ndarray]):
        self.weights = weights

    def __call__(self, X: np.ndarray) -> np.ndarray:
        h = X
        for W in self.weights[:-1]:
            h = np.tanh(h @ W.T)
        return (h @ self.weights[-1].T).ravel()


_MLP_LAYERS = ((8, 16), (16, 32), (32, 16), (16, 1))


def make_mlp(seed: int = 0) -> Objective:
    """8 -> 16 -> 32 -> 16 -> 1 network, tanh between layers only, no biases.

    Weights are Xavier-uniform, bound sqrt(6 / (fan_in + fan_out)), drawn
    layer by layer from the construction seed; the same seed gives
    bit-identical weights."""
    rng = RngStream(seed, (ord("m"),)).generator
    weights = []
    for fan_in, fan_out in _MLP_LAYERS:
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
    return Objective(
        name="mlp" + (f"-s{seed}" if seed else ""),
        dim=8,
        fn=_MlpNet(weights),
        nu_default=0.5,
        fixed_hyperparams=None,
        note=f"fixed random weights, construction seed {seed}",
    )


# ---------------------------------------------------------------------------
# diffraction point-spread function (log intensity of an Airy pattern)

_J1_SERIES_CUT = 12.0
# coefficients of J1(x) = (x/2) * sum_k c_k (x^2/4)^k, c_k = (-1)^k / (k! (k+1)!)
_J1_COEFFS = [(-1.0) ** k / (math.factorial(k) * math.factorial(k + 1)) for k in range(40)]


def bessel_j1(x) -> np.ndarray | float:
    """Bessel function of the first kind, order one.

    Power series below argument 12, Hankel asymptotic expansion above; both
    branches agree with reference implementations to better than 1e-8.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0
    x = np.atleast_1d(x)
    sign = np.sign(x)
    ax = np.abs(x)
    out = np.empty_like(ax)

    small = ax < _J1_SERIES_CUT
    if small.any():
        t = ax[small] ** 2 / 4.0
        acc = np.zeros_like(t)
        for c in reversed(_J1_COEFFS):
            acc = acc * t + c
        out[small] = (ax[small] / 2.0) * acc
    if (~small).any():
        z = ax[~small]
        # Hankel expansion, coefficients a_k = prod_{j<=k} (4 - (2j-1)^2) / (8k)
        a = [1.0]
        for k in range(1, 10):
            a.append(a[-1] * (4.0 - (2 * k - 1) ** 2) / (8.0 * k))
        inv2 = 1.0 / (z * z)
        p = a[0] + inv2 * (-a[2] + inv2 * (a[4] + inv2 * (-a[6] + inv2 * a[8])))
        q = (a[1] + inv2 * (-a[3] + inv2 * (a[5] + inv2 * (-a[7] + inv2 * a[9])))) / z
        chi = z - 0.75 * np.pi
        out[~small] = np.sqrt(2.0 / (np.pi * z)) * (p * np.cos(chi) - q * np.sin(chi))
    out *= sign
    return float(out[0]) if single else out


class _AiryLog:
    """log I(x) for I(r) = I0 (2 J1(v)/v)^2, v = v_per_r * ||chart(x) + shift||.

    The unit square maps to the physical chart [0, chart_side]^2; intensity
    is floored at floor * I0 before the log so dark rings stay finite."""

    def __init__(self, v_per_r: float, chart_side: float, shift: float, floor: float):
        self.v_per_r = v_per_r
        self.chart_side = chart_side
        self.shift = shift
        self.floor = floor

    def __call__(self, X: np.ndarray) -> np.ndarray:
        pos = self.chart_side * X + self.shift
        v = self.v_per_r * np.linalg.norm(pos, axis=1)
        ratio = np.ones_like(v)
        nz = v > 0
        ratio[nz] = 2.0 * bessel_j1(v[nz]) / v[nz]
        return np.log(np.maximum(ratio**2, self.floor))


def make_psf(
    shifted: bool = False,
    aperture: float = 0.05,
    chart_wavelength: float = 0.01,
    floor: float = 1e-12,
) -> Objective:
    """Log intensity of an Airy diffraction pattern on the [0, 0.5]^2 chart
    (the bright quarter adjacent to the optical axis), unit square inputs.

    v = (2 pi / chart_wavelength) * aperture * r puts the first dark ring at
    r ~ 0.12, well inside the chart; aperture and chart_wavelength are
    explicit configuration, not physical units. The shifted variant moves the
    peak to chart coordinates (-0.05, -0.05), just outside the square.
    """
    v_per_r = 2 * np.pi * aperture / chart_wavelength
    shift = 0.05 if shifted else 0.0
    return Objective(
        name="psf-shift" if shifted else "psf",
        dim=2,
        fn=_AiryLog(v_per_r, 0.5, shift, floor),
        nu_default=0.5,
        fixed_hyperparams=None,
        note=f"first dark ring at r = {3.8317059702075125 / v_per_r:.4f} chart units",
    )


# ---------------------------------------------------------------------------
# plumbing objectives used by calibration tests and rate baselines


class _Constant:
    def __init__(self, c: float):
        self.c = c

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.c)


class _FirstCoordinate:
    def __call__(self, X: np.ndarray) -> np.ndarray:
        return X[:, 0].copy()


def _make_zero(dim: int) -> Objective:
    return Objective(f"zero-{dim}d", dim, _Constant(0.0), 2.5, (0.2, 1.0), "f identically 0")


def _make_linear() -> Objective:
    return Objective("linear-1d", 1, _FirstCoordinate(), 2.5, (0.2, 1.0), "f(x) = x")


# ---------------------------------------------------------------------------
# registry

_PATTERNS = [
    ("synthetic-<d>d[-s<seed>]", "random kernel mixture, fixed lengthscale 0.2, nu 5/2"),
    ("ackley-<d>d | alpine1-<d>d | product-peak-<d>d | zhou-<d>d", "classical benchmarks, nu 3/2"),
    ("hennig", "2-D oscillatory quadratic on [-1,1]^2, nu 3/2"),
    ("mlp[-s<seed>]", "fixed random 8-16-32-16-1 tanh network, nu 1/2"),
    ("psf | psf-shift", "log Airy intensity on a quarter chart, nu 1/2"),
    ("hardclass-d<d>-w<w>-s<seed>-p<density>", "bump-field instances with known constant"),
    ("zero-<d>d", "f identically 0 (Z = 1 exactly)"),
    ("linear-1d", "f(x) = x (Z = (1 - exp(-lambda)) / lambda)"),
]


def list_objectives() -> list[tuple[str, str]]:
    """(id pattern, description) rows for the CLI."""
    return list(_PATTERNS)


def get_objective(obj_id: str) -> Objective:
    """Build an objective from its CLI id. Unknown ids raise KeyError."""
    if m := re.fullmatch(r"synthetic-(\d+)d(?:-s(\d+))?", obj_id):
        return make_synthetic(int(m.group(1)), int(m.group(2) or 0))
    if m := re.fullmatch(r"(ackley|alpine1|product-peak|zhou)-(\d+)d", obj_id):
        return make_named(m.group(1), int(m.group(2)))
    if obj_id == "hennig":
        return make_named("hennig", 2)
    if m := re.fullmatch(r"mlp(?:-s(\d+))?", obj_id):
        return make_mlp(int(m.group(1) or 0))
    if obj_id == "psf":
        return make_psf()
    if obj_id == "psf-shift":
        return make_psf(shifted=True)
    if m := re.fullmatch(r"zero-(\d+)d", obj_id):
        return _make_zero(int(m.group(1)))
    if obj_id == "linear-1d":
        return _make_linear()
    if m := re.fullmatch(r"hardclass-d(\d+)-w([0-9.]+)-s(\d+)-p([0-9.]+)", obj_id):
        from . import hardclass

        spec = hardclass.BumpClassSpec(dim=int(m.group(1)), width=float(m.group(2)), nu=1.5)
        signs = hardclass.random_signs(spec, seed=int(m.group(3)), density=float(m.group(4)))
        return hardclass.make_instance(spec, signs)
    raise KeyError(f"unknown objective id {obj_id!r}; see list-functions")

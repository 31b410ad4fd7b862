"""The kernel zoo: seed, periodic, transported, spline, and combinators.

Four translation-invariant seed families on R^D (exponential,
multiquadric, Gaussian, truncated) are localized to the unit cube two
ways:

* ``per-*``  periodic versions, tensor products of a 1-D closed form
  whose Fourier coefficients are exactly a normalized profile with
  rho(0) = 1 and per-dimension total T ~ 1 + 1/D, so the diagonal
  K(x,x) = T^D stays below e in every dimension;
* ``tra-*``  transported versions, the seed formula composed with the
  componentwise inverse-erf map S(x) = erfinv(2x - 1), rescaled so the
  diagonal stays below e.

Per-dimension conventions (q is the Fourier ratio, tau the rate):

    family   periodic factor                      coefficients r(k)
    ------   ---------------------------------    --------------------
    exp      (tau/2)(e^{tau f}+e^{tau(1-f)})      1 / (1 + 4 pi^2 k^2 / tau^2),
                 / (e^tau - 1),  tau = sqrt(12/D)
    gauss    theta_3(pi f, q),  q = 1/(2D)        q^{k^2}
    mq       (1-q^2)/(1-2q cos 2pi f + q^2),      q^{|k|}
                 q = 1/(2D+1)
    trunc    tau[(1-tau f)_+ + (1-tau(1-f))_+],   sinc^2(pi k / tau)
                 tau = 1 + 1/D

with f the fractional part of x_d - y_d.  Transported parameters follow
the same diagonal-below-e recipe; the truncated transported pair
(tau = sqrt(2/D), beta = 1) is an engineering convention, chosen to
mirror the multiquadric one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .lattice import CoefficientProfile, LatticeIndex

__all__ = [
    "FAMILIES",
    "Kernel",
    "SeedKernel",
    "PeriodicKernel",
    "TransportedKernel",
    "SplineKernel",
    "TensorKernel",
    "SumKernel",
    "ProductKernel",
    "NormalizedKernel",
    "TransportMap",
    "erfinv",
    "theta3",
    "coefficient_profile",
    "kernel_from_id",
    "fourier_coefficient",
    "pseudo_distance",
]

FAMILIES = ("exp", "mq", "gauss", "trunc")


def erfinv(u):
    """Inverse error function on (-1, 1), odd by construction."""
    arr = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(np.abs(arr) >= 1.0):
        raise ValueError("erfinv argument must satisfy |u| < 1")
    out = np.sign(arr) * special.erfinv(np.abs(arr))
    return float(out) if np.isscalar(u) or arr.ndim == 0 else out


def theta3(z, q: float):
    """Third Jacobi theta function 1 + 2 sum q^{k^2} cos(2kz), 0 <= q < 1.

    Direct summation, truncated when the next term falls below 1e-17
    relative to the leading 1.
    """
    if not 0.0 <= q < 1.0:
        raise ValueError("nome q must lie in [0, 1)")
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    k = 1
    while q ** (k * k) >= 1e-17:
        out = out + 2.0 * q ** (k * k) * np.cos(2.0 * k * z)
        k += 1
    return float(out) if out.ndim == 0 else out


def _theta3_prime(z, q: float):
    # d/dz of theta3: -2 sum 2k q^{k^2} sin(2kz)
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    k = 1
    while q ** (k * k) >= 1e-17:
        out = out - 4.0 * k * q ** (k * k) * np.sin(2.0 * k * z)
        k += 1
    return out


@dataclass(frozen=True)
class TransportMap:
    """Componentwise map S(x) = erfinv(2x - 1) from (0,1)^D onto R^D.

    Coordinates are clamped to [eps, 1-eps] before inversion; erfinv
    diverges at the endpoints while the transported kernels decay there,
    so the clamp perturbs kernel values below 1e-10.
    """

    dim: int
    eps: float = 1e-12

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), self.eps, 1.0 - self.eps)
        return special.erfinv(2.0 * x - 1.0)

    def apply_prime(self, x: np.ndarray) -> np.ndarray:
        """dS/dx = sqrt(pi) * exp(S(x)^2)."""
        s = self.apply(x)
        return math.sqrt(math.pi) * np.exp(s * s)

    def inverse(self, s: np.ndarray) -> np.ndarray:
        return (special.erf(np.asarray(s, dtype=float)) + 1.0) / 2.0


# per-family scale parameters -----------------------------------------------

def _per_tau_exp(dim: int) -> float:
    return math.sqrt(12.0 / dim)


def _per_q_gauss(dim: int) -> float:
    return 1.0 / (2.0 * dim)


def _per_q_mq(dim: int) -> float:
    return 1.0 / (2.0 * dim + 1.0)


def _per_tau_trunc(dim: int) -> float:
    return 1.0 + 1.0 / dim


@lru_cache(maxsize=None)
def coefficient_profile(family: str, dim: int) -> CoefficientProfile:
    """The exact Fourier-coefficient profile of a periodic kernel."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if family == "exp":
        tau = _per_tau_exp(dim)
        c = 4.0 * math.pi**2 / tau**2

        def r(k: int) -> float:
            return 1.0 / (1.0 + c * k * k)

        total = (tau / 2.0) / math.tanh(tau / 2.0)
        return CoefficientProfile(dim, r, total, name=f"per-exp[D={dim}]")
    if family == "gauss":
        q = _per_q_gauss(dim)

        def r(k: int) -> float:
            return q ** (k * k)

        total = float(theta3(0.0, q))
        return CoefficientProfile(dim, r, total, name=f"per-gauss[D={dim}]")
    if family == "mq":
        q = _per_q_mq(dim)

        def r(k: int) -> float:
            return q ** abs(k)

        total = (1.0 + q) / (1.0 - q)
        return CoefficientProfile(dim, r, total, name=f"per-mq[D={dim}]")
    # truncated: sinc^2 profile, exact zeros at k = 0 mod (D+1), and an
    # oscillating value under the (tau/pi k)^2 envelope
    tau = _per_tau_trunc(dim)

    def r(k: int) -> float:
        k = abs(k)
        if k == 0:
            return 1.0
        if k % (dim + 1) == 0:
            return 0.0
        x = math.pi * k / tau
        return (math.sin(x) / x) ** 2

    def envelope(k: int) -> float:
        return (tau / (math.pi * k)) ** 2 if k else 1.0

    return CoefficientProfile(dim, r, tau, name=f"per-trunc[D={dim}]", envelope=envelope)


# kernel classes -------------------------------------------------------------

class Kernel:
    """Symmetric positive(-semi)definite kernel on its domain."""

    dim: int
    kernel_id: str = "kernel"

    def pairwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Kernel matrix between rows of x (n, dim) and y (m, dim)."""
        raise NotImplementedError

    def elementwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """K(x_j, y_j) for paired rows of equal-shape (m, dim) arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise ValueError("elementwise requires equal-shape point arrays")
        out = np.empty(x.shape[0])
        for lo in range(0, x.shape[0], 4096):
            hi = min(lo + 4096, x.shape[0])
            # pairwise on the diagonal block; subclasses override with
            # direct formulas where this matters for speed
            out[lo:hi] = np.einsum(
                "ii->i", self.pairwise(x[lo:hi], y[lo:hi]))
        return out

    def pair_mean(self, coords: np.ndarray) -> float:
        """Mean of the full kernel matrix on one point set.

        Column-tiled so the per-dimension temporaries stay in cache; the
        tile size is fixed for bit-reproducible summation order.
        """
        coords = np.asarray(coords, dtype=float)
        n = coords.shape[0]
        total = 0.0
        for lo in range(0, n, 64):
            hi = min(lo + 64, n)
            total += float(self.pairwise(coords, coords[lo:hi]).sum())
        return total / (n * n)

    def _validate_point(self, p) -> np.ndarray:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if p.shape != (self.dim,):
            raise ValueError(f"point of shape {p.shape} does not match kernel dim {self.dim}")
        if not np.all(np.isfinite(p)):
            raise ValueError("point has non-finite coordinates")
        return p

    def __call__(self, x, y) -> float:
        x = self._validate_point(x)
        y = self._validate_point(y)
        return float(self.pairwise(x[None, :], y[None, :])[0, 0])

    def __repr__(self):
        return f"<{type(self).__name__} {self.kernel_id} D={self.dim}>"


class SeedKernel(Kernel):
    """Translation-invariant kernel on R^D with chi(0) = 1 (Table stock:
    exponential, multiquadric, Gaussian, truncated)."""

    def __init__(self, family: str, dim: int):
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.family = family
        self.dim = dim
        self.kernel_id = f"seed-{family}"

    def _from_diff(self, acc_l1, acc_sq):
        if self.family == "exp":
            return np.exp(-acc_l1)
        if self.family == "mq":
            return (1.0 + acc_sq) ** (-(self.dim + 1) / 2.0)
        if self.family == "gauss":
            return np.exp(-acc_sq / 2.0)
        return np.maximum(1.0 - np.sqrt(acc_sq), 0.0) ** self.dim

    def pairwise(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        acc = np.zeros((x.shape[0], y.shape[0]))
        for d in range(self.dim):
            diff = x[:, d, None] - y[None, :, d]
            acc += np.abs(diff) if self.family == "exp" else diff * diff
        return self._from_diff(acc, acc)

    def elementwise(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        diff = x - y
        if self.family == "exp":
            return self._from_diff(np.abs(diff).sum(axis=1), None)
        return self._from_diff(None, (diff * diff).sum(axis=1))


class PeriodicKernel(Kernel):
    """Tensor-product periodic kernel on [0,1]^D, normalized to rho(0)=1.

    The closed-form factors and their exact Fourier profiles are listed
    in the module docstring.  The diagonal equals T^D <= e.
    """

    def __init__(self, family: str, dim: int):
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.family = family
        self.dim = dim
        self.kernel_id = f"per-{family}"
        self.profile = coefficient_profile(family, dim)
        if family == "exp":
            self.tau = _per_tau_exp(dim)
        elif family == "trunc":
            self.tau = _per_tau_trunc(dim)
        elif family == "gauss":
            self.q = _per_q_gauss(dim)
        else:
            self.q = _per_q_mq(dim)

    def factor(self, t):
        """The 1-D periodic factor chi(t); chi(0) = T."""
        f = np.mod(np.asarray(t, dtype=float), 1.0)
        if self.family == "exp":
            tau = self.tau
            a = np.exp(tau * f)
            return (tau / 2.0) * (a + math.exp(tau) / a) / math.expm1(tau)
        if self.family == "gauss":
            return theta3(math.pi * f, self.q)
        if self.family == "mq":
            q = self.q
            return (1.0 - q * q) / (1.0 - 2.0 * q * np.cos(2.0 * math.pi * f) + q * q)
        tau = self.tau
        return tau * (np.maximum(1.0 - tau * f, 0.0) + np.maximum(1.0 - tau * (1.0 - f), 0.0))

    def factor_prime(self, t):
        """d/dt of the 1-D factor (one-sided at the truncated kinks)."""
        f = np.mod(np.asarray(t, dtype=float), 1.0)
        if self.family == "exp":
            tau = self.tau
            return (tau * tau / 2.0) * (np.exp(tau * f) - np.exp(tau * (1.0 - f))) / math.expm1(tau)
        if self.family == "gauss":
            return math.pi * _theta3_prime(math.pi * f, self.q)
        if self.family == "mq":
            q = self.q
            denom = 1.0 - 2.0 * q * np.cos(2.0 * math.pi * f) + q * q
            return -(1.0 - q * q) * 4.0 * math.pi * q * np.sin(2.0 * math.pi * f) / (denom * denom)
        tau = self.tau
        return tau * tau * ((f > 1.0 - 1.0 / tau).astype(float) - (f < 1.0 / tau).astype(float))

    def pairwise(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.ones((x.shape[0], y.shape[0]))
        for d in range(self.dim):
            out *= self.factor(x[:, d, None] - y[None, :, d])
        return out

    def elementwise(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.ones(x.shape[0])
        for d in range(self.dim):
            out *= self.factor(x[:, d] - y[:, d])
        return out

    def diagonal(self) -> float:
        """K(x, x) = T^D, from the closed-form per-dimension total."""
        return self.profile.total()

    def fourier_coefficient(self, index: LatticeIndex) -> float:
        if index.dim != self.dim:
            raise ValueError(f"index dim {index.dim} does not match kernel dim {self.dim}")
        return self.profile.coefficient(index)


class TransportedKernel(Kernel):
    """Seed kernel composed with the inverse-erf transport, on [0,1]^D."""

    def __init__(self, family: str, dim: int):
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.family = family
        self.dim = dim
        self.kernel_id = f"tra-{family}"
        self.transport = TransportMap(dim)
        if family == "exp":
            self.tau = math.sqrt(math.pi) / dim
            # erfcx(z) = exp(z^2) erfc(z), overflow-free
            self.beta = float(special.erfcx(self.tau / 2.0)) ** dim
        elif family == "mq":
            self.tau = math.sqrt(2.0 / dim)
            x = 1.0 / self.tau
            self.beta = (math.sqrt(math.pi) * float(special.erfcx(x)) * x) ** (-dim)
        elif family == "gauss":
            self.tau = math.sqrt(2.0 / dim)
            self.beta = (1.0 + self.tau**2) ** (dim / 2.0)
        else:
            # convention: no closed scaling is prescribed for this family
            self.tau = math.sqrt(2.0 / dim)
            self.beta = 1.0

    def kernel_mapped(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Kernel matrix from already-transported coordinates."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.family == "exp":
            acc = np.zeros((u.shape[0], v.shape[0]))
            for d in range(self.dim):
                acc += np.abs(u[:, d, None] - v[None, :, d])
            return np.exp(-self.tau * acc) / self.beta
        sq = np.zeros((u.shape[0], v.shape[0]))
        for d in range(self.dim):
            diff = u[:, d, None] - v[None, :, d]
            sq += diff * diff
        if self.family == "mq":
            return self.beta * (1.0 + self.tau**2 * sq) ** (-(self.dim + 1) / 2.0)
        if self.family == "gauss":
            return self.beta * np.exp(-self.tau**2 * sq)
        return (1.0 + self.tau * sq) ** (-float(self.dim))

    def grad_sum_mapped(self, u: np.ndarray, v: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """sum_j weights[j] * d/du K(u_i, v_j), shape (n, dim).

        Gradient is with respect to the transported coordinate u; chain
        with TransportMap.apply_prime for cube-coordinate gradients.
        """
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        kmat = self.kernel_mapped(u, v)
        out = np.empty((u.shape[0], self.dim))
        if self.family == "exp":
            for d in range(self.dim):
                sgn = np.sign(u[:, d, None] - v[None, :, d])
                out[:, d] = -self.tau * ((kmat * sgn) @ weights)
            return out
        sq = np.zeros((u.shape[0], v.shape[0]))
        for d in range(self.dim):
            diff = u[:, d, None] - v[None, :, d]
            sq += diff * diff
        if self.family == "mq":
            base = kmat / (1.0 + self.tau**2 * sq)
            scale = -(self.dim + 1) * self.tau**2
        elif self.family == "gauss":
            base = kmat
            scale = -2.0 * self.tau**2
        else:
            base = kmat / (1.0 + self.tau * sq)
            scale = -2.0 * self.dim * self.tau
        for d in range(self.dim):
            diff = u[:, d, None] - v[None, :, d]
            out[:, d] = scale * ((base * diff) @ weights)
        return out

    def pairwise(self, x, y):
        return self.kernel_mapped(self.transport.apply(x), self.transport.apply(y))

    def elementwise(self, x, y):
        u = self.transport.apply(x)
        v = self.transport.apply(y)
        diff = u - v
        if self.family == "exp":
            return np.exp(-self.tau * np.abs(diff).sum(axis=1)) / self.beta
        sq = (diff * diff).sum(axis=1)
        if self.family == "mq":
            return self.beta * (1.0 + self.tau**2 * sq) ** (-(self.dim + 1) / 2.0)
        if self.family == "gauss":
            return self.beta * np.exp(-self.tau**2 * sq)
        return (1.0 + self.tau * sq) ** (-float(self.dim))

    def diagonal(self) -> float:
        if self.family == "exp":
            return 1.0 / self.beta
        return self.beta


class SplineKernel(Kernel):
    """Tensor product of min(x,y) - xy on [0,1]^D (vanishes on the boundary).

    Closed forms: int K(x, .) = prod_d x_d (1 - x_d) / 2 and
    iint K = 12^-D.  Eigenpairs: lambda_a = prod (a_d pi)^-2 with
    eigenfunctions prod sqrt(2) sin(a_d pi x_d).
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.kernel_id = "spline"

    def pairwise(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.ones((x.shape[0], y.shape[0]))
        for d in range(self.dim):
            xd = x[:, d, None]
            yd = y[None, :, d]
            out *= np.minimum(xd, yd) - xd * yd
        return out

    def elementwise(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.prod(np.minimum(x, y) - x * y, axis=1)

    def integral_single(self, x: np.ndarray) -> np.ndarray:
        """int_cube K(x, y) dy for each row x."""
        x = np.asarray(x, dtype=float)
        return np.prod(x * (1.0 - x) / 2.0, axis=-1)

    def integral_double(self) -> float:
        return 12.0 ** (-self.dim)


class TensorKernel(Kernel):
    """Tensor product of one-dimensional kernels."""

    def __init__(self, factors):
        factors = list(factors)
        if not factors:
            raise ValueError("tensor product needs at least one factor")
        if any(k.dim != 1 for k in factors):
            raise ValueError("tensor factors must be one-dimensional kernels")
        self.factors = factors
        self.dim = len(factors)
        self.kernel_id = "tensor(" + ",".join(k.kernel_id for k in factors) + ")"

    def pairwise(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.ones((x.shape[0], y.shape[0]))
        for d, k in enumerate(self.factors):
            out *= k.pairwise(x[:, d:d + 1], y[:, d:d + 1])
        return out

    def elementwise(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.ones(x.shape[0])
        for d, k in enumerate(self.factors):
            out *= k.elementwise(x[:, d:d + 1], y[:, d:d + 1])
        return out


class SumKernel(Kernel):
    """a K1 + b K2 with positive weights."""

    def __init__(self, a: float, k1: Kernel, b: float, k2: Kernel):
        if a <= 0 or b <= 0:
            raise ValueError("sum weights must be strictly positive")
        if k1.dim != k2.dim:
            raise ValueError("summed kernels must share a dimension")
        self.a, self.k1, self.b, self.k2 = float(a), k1, float(b), k2
        self.dim = k1.dim
        self.kernel_id = f"sum({a}*{k1.kernel_id},{b}*{k2.kernel_id})"

    def pairwise(self, x, y):
        return self.a * self.k1.pairwise(x, y) + self.b * self.k2.pairwise(x, y)

    def elementwise(self, x, y):
        return self.a * self.k1.elementwise(x, y) + self.b * self.k2.elementwise(x, y)


class ProductKernel(Kernel):
    """Pointwise product K1 * K2."""

    def __init__(self, k1: Kernel, k2: Kernel):
        if k1.dim != k2.dim:
            raise ValueError("multiplied kernels must share a dimension")
        self.k1, self.k2 = k1, k2
        self.dim = k1.dim
        self.kernel_id = f"product({k1.kernel_id},{k2.kernel_id})"

    def pairwise(self, x, y):
        return self.k1.pairwise(x, y) * self.k2.pairwise(x, y)

    def elementwise(self, x, y):
        return self.k1.elementwise(x, y) * self.k2.elementwise(x, y)


class NormalizedKernel(Kernel):
    """K(x,y) / sqrt(K(x,x) K(y,y)); unit diagonal by construction."""

    def __init__(self, base: Kernel):
        self.base = base
        self.dim = base.dim
        self.kernel_id = f"normalized({base.kernel_id})"

    def pairwise(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        kxy = self.base.pairwise(x, y)
        dx = self.base.elementwise(x, x)
        dy = self.base.elementwise(y, y)
        return kxy / np.sqrt(dx[:, None] * dy[None, :])

    def elementwise(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        kxy = self.base.elementwise(x, y)
        return kxy / np.sqrt(self.base.elementwise(x, x) * self.base.elementwise(y, y))


# free-function entry points -------------------------------------------------

def kernel_from_id(kernel_id: str, dim: int) -> Kernel:
    """Parse '<loc>-<family>' (loc in seed/per/tra) or 'spline'."""
    if kernel_id == "spline":
        return SplineKernel(dim)
    parts = kernel_id.split("-")
    if len(parts) != 2:
        raise ValueError(f"bad kernel id {kernel_id!r}; expected '<loc>-<family>' or 'spline'")
    loc, family = parts
    if family not in FAMILIES:
        raise ValueError(f"unknown kernel family {family!r}; choose from {FAMILIES}")
    if loc == "seed":
        return SeedKernel(family, dim)
    if loc == "per":
        return PeriodicKernel(family, dim)
    if loc == "tra":
        return TransportedKernel(family, dim)
    raise ValueError(f"unknown localization {loc!r}; choose from ('seed', 'per', 'tra')")


def fourier_coefficient(kernel: Kernel, index: LatticeIndex) -> float:
    """rho(alpha) of a periodic kernel; rejects every other kind."""
    if not isinstance(kernel, PeriodicKernel):
        raise ValueError("fourier_coefficient is defined for periodic kernels only")
    return kernel.fourier_coefficient(index)


def pseudo_distance(kernel: Kernel, x, y) -> float:
    """K(x,x) + K(y,y) - 2 K(x,y), clamped at zero against roundoff."""
    return max(kernel(x, x) + kernel(y, y) - 2.0 * kernel(x, y), 0.0)


def tensor_product(factors) -> TensorKernel:
    return TensorKernel(factors)


def weighted_sum(a: float, k1: Kernel, b: float, k2: Kernel) -> SumKernel:
    return SumKernel(a, k1, b, k2)


def product(k1: Kernel, k2: Kernel) -> ProductKernel:
    return ProductKernel(k1, k2)


def normalize(kernel: Kernel) -> NormalizedKernel:
    return NormalizedKernel(kernel)

"""
B-spline bases and the learnable edge activation phi(x) = w_b * b(x) + w_s * spline(x).

Knot vectors are uniform and extended: G interior intervals on [lo, hi] plus k
knots continuing the spacing on each side, giving G + k basis functions of
degree k. Inputs outside [lo, hi] go through the same Cox-de Boor recursion.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Any, NamedTuple, Optional

import numpy as np
from scipy.special import expit

from src.exceptions import InvalidArgumentError

BASE_KINDS = ("identity", "silu")


@dataclass(frozen=True, eq=False)
class KnotVector:
    lo: float
    hi: float
    G: int
    k: int
    knots: np.ndarray

    @property
    def n_basis(self) -> int:
        return self.G + self.k

    @property
    def interior_range(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / self.G

    def greville(self) -> np.ndarray:
        """Greville abscissae; a spline with these coefficients equals x on [lo, hi]."""
        t = self.knots
        return np.array([t[i + 1 : i + self.k + 1].mean() for i in range(self.n_basis)])

    def to_dict(self) -> dict[str, Any]:
        return {"lo": float(self.lo), "hi": float(self.hi), "G": self.G, "k": self.k}

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "KnotVector":
        return make_knots(payload["lo"], payload["hi"], payload["G"], payload["k"])


def make_knots(lo: float, hi: float, G: int, k: int) -> KnotVector:
    """Build a uniform extended knot vector with G + 2k + 1 knots."""
    lo, hi = float(lo), float(hi)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise InvalidArgumentError(f"Degenerate knot range: lo={lo}, hi={hi}")
    if int(G) < 1 or int(k) < 1:
        raise InvalidArgumentError(f"Grid intervals and degree must be >= 1 (G={G}, k={k})")
    G, k = int(G), int(k)
    h = (hi - lo) / G
    interior = np.linspace(lo, hi, G + 1)
    left = lo - h * np.arange(k, 0, -1)
    right = hi + h * np.arange(1, k + 1)
    knots = np.concatenate([left, interior, right])
    knots.setflags(write=False)
    return KnotVector(lo=lo, hi=hi, G=G, k=k, knots=knots)


def _cox_de_boor(x: np.ndarray, t: np.ndarray, degree: int) -> np.ndarray:
    x = x[:, None]
    B = ((x >= t[None, :-1]) & (x < t[None, 1:])).astype(float)
    for p in range(1, degree + 1):
        left = (x - t[None, : -(p + 1)]) / (t[p:-1] - t[: -(p + 1)]) * B[:, :-1]
        right = (t[None, p + 1 :] - x) / (t[p + 1 :] - t[1:-p]) * B[:, 1:]
        B = left + right
    return B


def basis_matrix(x: np.ndarray, knots: KnotVector) -> np.ndarray:
    """Evaluate all G + k basis functions at every x; returns shape (N, G + k)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return _cox_de_boor(x, knots.knots, knots.k)


def basis_derivative_matrix(x: np.ndarray, knots: KnotVector) -> np.ndarray:
    """First derivatives of the basis functions, shape (N, G + k)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    t, k = knots.knots, knots.k
    lower = _cox_de_boor(x, t, k - 1)
    return k * (lower[:, :-1] / (t[k:-1] - t[: -(k + 1)]) - lower[:, 1:] / (t[k + 1 :] - t[1:-k]))


def basis_values(x: float, knots: KnotVector) -> np.ndarray:
    return basis_matrix(np.array([x]), knots)[0]


def base_function(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == "identity":
        return np.asarray(x, dtype=float)
    if kind == "silu":
        return x * expit(x)
    raise InvalidArgumentError(f"Unknown base function: {kind}")


def base_derivative(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == "identity":
        return np.ones_like(np.asarray(x, dtype=float))
    if kind == "silu":
        s = expit(x)
        return s * (1.0 + x * (1.0 - s))
    raise InvalidArgumentError(f"Unknown base function: {kind}")


@dataclass(frozen=True, eq=False)
class Activation:
    """One learnable edge function."""

    knots: KnotVector
    coeffs: np.ndarray
    w_b: float
    w_s: float
    basis_kind: str = "identity"
    active: bool = True
    symbolic: Optional[Any] = None

    def __post_init__(self) -> None:
        if self.basis_kind not in BASE_KINDS:
            raise InvalidArgumentError(f"Unknown base function: {self.basis_kind}")
        if np.asarray(self.coeffs).shape != (self.knots.n_basis,):
            raise InvalidArgumentError(
                f"Expected {self.knots.n_basis} coefficients, got shape {np.asarray(self.coeffs).shape}"
            )

    def spline(self, x: np.ndarray) -> np.ndarray:
        return basis_matrix(x, self.knots) @ np.asarray(self.coeffs, dtype=float)


class ActivationGrads(NamedTuple):
    dx: Any
    dc: np.ndarray
    dw_b: Any
    dw_s: Any


def _unwrap(value: np.ndarray, scalar: bool) -> Any:
    return float(value[0]) if scalar else value


def activation_value(a: Activation, x: Any) -> Any:
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if not a.active:
        return _unwrap(np.zeros_like(xs), scalar)
    value = a.w_b * base_function(xs, a.basis_kind) + a.w_s * a.spline(xs)
    return _unwrap(value, scalar)


def activation_grads(a: Activation, x: Any) -> ActivationGrads:
    """Partials of phi(x) w.r.t. x, the coefficients, w_b and w_s."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if not a.active:
        zeros = np.zeros_like(xs)
        dc = np.zeros((xs.size, a.knots.n_basis))
        return ActivationGrads(_unwrap(zeros, scalar), dc[0] if scalar else dc, _unwrap(zeros, scalar), _unwrap(zeros, scalar))

    coeffs = np.asarray(a.coeffs, dtype=float)
    B = basis_matrix(xs, a.knots)
    dB = basis_derivative_matrix(xs, a.knots)
    dx = a.w_b * base_derivative(xs, a.basis_kind) + a.w_s * (dB @ coeffs)
    dc = a.w_s * B
    return ActivationGrads(
        dx=_unwrap(dx, scalar),
        dc=dc[0] if scalar else dc,
        dw_b=_unwrap(base_function(xs, a.basis_kind), scalar),
        dw_s=_unwrap(B @ coeffs, scalar),
    )


def refit_range(samples: np.ndarray, margin: float = 0.01) -> tuple[float, float]:
    """Range covering the samples with a relative margin; identical samples widen to +-1."""
    samples = np.asarray(samples, dtype=float).reshape(-1)
    if samples.size == 0:
        raise InvalidArgumentError("Cannot refresh knots from an empty sample")
    lo, hi = float(samples.min()), float(samples.max())
    if not hi > lo:
        warnings.warn(f"All refresh samples equal {lo}; widening knot range to +-1", stacklevel=3)
        return lo - 1.0, hi + 1.0
    m = margin * (hi - lo)
    return lo - m, hi + m


def refit_coefficients(old_knots: KnotVector, old_coeffs: np.ndarray, new_knots: KnotVector, samples: np.ndarray) -> np.ndarray:
    """Least-squares coefficients on new_knots reproducing the old spline(s) at the samples.

    old_coeffs may be (G + k,) or (m, G + k) for several splines sharing the old knots.
    """
    samples = np.asarray(samples, dtype=float).reshape(-1)
    old = np.atleast_2d(old_coeffs)
    targets = basis_matrix(samples, old_knots) @ old.T
    A = basis_matrix(samples, new_knots)
    solution, *_ = np.linalg.lstsq(A, targets, rcond=None)
    solution = solution.T
    return solution[0] if np.ndim(old_coeffs) == 1 else solution


def refresh_knots(a: Activation, samples: np.ndarray, margin: float = 0.01) -> Activation:
    """Move the knot range onto the samples and refit coefficients so phi is preserved there."""
    lo, hi = refit_range(samples, margin)
    new_knots = make_knots(lo, hi, a.knots.G, a.knots.k)
    coeffs = refit_coefficients(a.knots, a.coeffs, new_knots, samples)
    return replace(a, knots=new_knots, coeffs=coeffs)

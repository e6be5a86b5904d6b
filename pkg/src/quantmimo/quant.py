"""Scalar quantizer design (Lloyd-Max for Gaussian inputs) and application.

A b-bit converter quantizes the in-phase and quadrature components
independently with the same real scalar quantizer, so everything here is
built around a real threshold/label set applied entrywise to Re and Im.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import ndtr, ndtri

_SQRT_2PI = np.sqrt(2.0 * np.pi)
# Gauss-Legendre rule for per-cell Gaussian moments; 48 nodes is machine
# precision for any cell a Lloyd-Max design produces (width < ~1.5 sigma).
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)

MAX_BITS = 12
MAX_ITERATIONS = 10_000
CONVERGENCE_TOL = 1e-12


class LloydMaxConvergenceError(RuntimeError):
    """Fixed-point iteration did not reach tolerance within the budget."""

    def __init__(self, bits, iterations, residual, tol):
        self.bits = bits
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"Lloyd-Max design for b={bits} did not converge: "
            f"residual {residual:.3e} > {tol:.1e} after {iterations} iterations"
        )


@dataclass(frozen=True)
class QuantizerSpec:
    """Thresholds and labels of a b-bit scalar quantizer.

    thresholds has 2^b + 1 entries with -inf/+inf sentinels; labels has 2^b
    entries, one per cell.  design_std is the per-real-component standard
    deviation the quantizer was designed (or last rescaled) for.
    """

    bits: int
    thresholds: np.ndarray
    labels: np.ndarray
    design_std: float

    def __post_init__(self):
        n = 2 ** self.bits
        thresholds = np.asarray(self.thresholds, dtype=float)
        labels = np.asarray(self.labels, dtype=float)
        if thresholds.shape != (n + 1,) or labels.shape != (n,):
            raise ValueError(
                f"expected {n + 1} thresholds and {n} labels for b={self.bits}, "
                f"got {thresholds.shape} and {labels.shape}"
            )
        if not (thresholds[0] == -np.inf and thresholds[-1] == np.inf):
            raise ValueError("thresholds must start at -inf and end at +inf")
        if np.any(np.diff(thresholds) <= 0):
            raise ValueError("thresholds must be strictly increasing")
        if np.any(np.diff(labels) <= 0):
            raise ValueError("labels must be strictly increasing")
        if not self.design_std > 0:
            raise ValueError("design_std must be positive")
        thresholds.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "thresholds", thresholds)
        object.__setattr__(self, "labels", labels)

    @property
    def interior_thresholds(self):
        return self.thresholds[1:-1]


def _gaussian_pdf(z):
    out = np.zeros_like(z)
    finite = np.isfinite(z)
    out[finite] = np.exp(-0.5 * z[finite] ** 2) / _SQRT_2PI
    return out


def _half_cell_moments(labels, sigma):
    """Per-cell probability and centroid for positive-half cells.

    Cells are (t_i, t_{i+1}] with t_0 = 0, t_m = inf and interior thresholds
    at label midpoints.  Finite cells use Gauss-Legendre quadrature (positive
    integrands, no cancellation); the tail cell uses the closed form.
    """
    m = labels.size
    t = np.empty(m + 1)
    t[0] = 0.0
    t[-1] = np.inf
    t[1:-1] = 0.5 * (labels[:-1] + labels[1:])
    z = t / sigma
    pdf = _gaussian_pdf(z)
    prob = np.empty(m)
    centroid = np.empty(m)
    if m > 1:
        lo = z[:-2, None]
        hi = z[1:-1, None]
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = mid + half * _GL_NODES
        w = half * _GL_WEIGHTS
        f = np.exp(-0.5 * x**2) / _SQRT_2PI
        p0 = np.sum(w * f, axis=1)
        p1 = np.sum(w * x * f, axis=1)
        prob[:-1] = p0
        centroid[:-1] = sigma * p1 / p0
    tail = ndtr(-z[-2])
    prob[-1] = tail
    centroid[-1] = sigma * pdf[-2] / tail
    return centroid, t, z, pdf, prob


def design_lloyd_max(bits, component_std):
    """MMSE quantizer for a real zero-mean Gaussian with std component_std.

    Solves the Lloyd-Max fixed point (labels are conditional means of their
    cells, interior thresholds are label midpoints) with Newton steps on the
    centroid map, exploiting odd symmetry by designing the positive half and
    mirroring.  The Jacobian of the map is tridiagonal because each centroid
    depends only on the two adjacent midpoint thresholds.
    """
    if not isinstance(bits, (int, np.integer)) or not 1 <= bits <= MAX_BITS:
        raise ValueError(f"bits must be an integer in [1, {MAX_BITS}], got {bits!r}")
    sigma = float(component_std)
    if not sigma > 0:
        raise ValueError("component_std must be positive")

    m = 2 ** (bits - 1)
    # init at half-Gaussian equiprobable quantile cells; deterministic, no dead cells
    t = np.empty(m + 1)
    t[0] = 0.0
    t[-1] = np.inf
    t[1:-1] = sigma * ndtri(0.5 + 0.5 * np.arange(1, m) / m)
    z = t / sigma
    pdf = _gaussian_pdf(z)
    surv = ndtr(-z)
    labels = sigma * (pdf[:-1] - pdf[1:]) / (surv[:-1] - surv[1:])

    residual = np.inf
    for iteration in range(MAX_ITERATIONS):
        centroid, t, z, pdf, prob = _half_cell_moments(labels, sigma)
        r = centroid - labels
        residual = np.max(np.abs(r)) / sigma
        if residual < CONVERGENCE_TOL:
            break
        with np.errstate(invalid="ignore", divide="ignore"):
            dlo = (pdf[:-1] / sigma) * (centroid - t[:-1]) / prob
            dhi = (pdf[1:] / sigma) * (t[1:] - centroid) / prob
        dlo[~np.isfinite(dlo)] = 0.0
        dhi[~np.isfinite(dhi)] = 0.0
        dlo[0] = 0.0  # t_0 = 0 fixed by symmetry
        banded = np.zeros((3, m))
        banded[0, 1:] = 0.5 * dhi[:-1]
        banded[1, :] = 0.5 * dlo + 0.5 * dhi - 1.0
        banded[2, :-1] = 0.5 * dlo[1:]
        step = solve_banded((1, 1), banded, -r)
        new = labels + step
        if new[0] <= 0 or np.any(np.diff(new) <= 0):
            new = centroid  # plain Lloyd step keeps ordering
        labels = new
    else:
        raise LloydMaxConvergenceError(bits, MAX_ITERATIONS, residual, CONVERGENCE_TOL)

    full_labels = np.concatenate([-labels[::-1], labels])
    interior = np.concatenate([-t[1:-1][::-1], [0.0], t[1:-1]])
    full_thresholds = np.concatenate([[-np.inf], interior, [np.inf]])
    return QuantizerSpec(bits=int(bits), thresholds=full_thresholds, labels=full_labels, design_std=sigma)


def cell_probabilities(spec, component_std):
    """Probability of each cell under a zero-mean Gaussian of given std.

    Upper-half cells use the survival function so tail probabilities keep
    full relative precision.
    """
    z = spec.thresholds / component_std
    lo = z[:-1]
    hi = z[1:]
    upper = lo >= 0
    probs = np.where(upper, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))
    return probs


def output_complex_variance(spec, input_complex_variance):
    """Complex output variance of the quantizer under a CN(0, v) input."""
    std = np.sqrt(input_complex_variance / 2.0)
    probs = cell_probabilities(spec, std)
    return 2.0 * float(np.sum(spec.labels**2 * probs))


def rescale_labels(spec, target_complex_variance):
    """Scale all labels by one factor so the output variance matches the input.

    For a circularly symmetric Gaussian input of complex variance v (so v/2
    per real component) the returned quantizer satisfies
    2 * sum_n labels[n]^2 * p_n = v.  Thresholds are unchanged.
    """
    target = float(target_complex_variance)
    if not target > 0:
        raise ValueError("target_complex_variance must be positive")
    current = output_complex_variance(spec, target)
    if current <= 0:
        raise ValueError("degenerate labels: quantizer output power is zero")
    zeta = np.sqrt(target / current)
    return QuantizerSpec(
        bits=spec.bits,
        thresholds=spec.thresholds.copy(),
        labels=zeta * spec.labels,
        design_std=np.sqrt(target / 2.0),
    )


def quantize(spec, value):
    """Apply the quantizer entrywise to Re and Im of a complex scalar/array."""
    value = np.asarray(value)
    interior = spec.interior_thresholds
    re_idx = np.searchsorted(interior, value.real, side="left")
    im_idx = np.searchsorted(interior, value.imag, side="left")
    out = spec.labels[re_idx] + 1j * spec.labels[im_idx]
    if value.ndim == 0:
        return complex(out)
    return out

"""Special functions needed by the variational updates."""

import numpy as np

# Bernoulli-number coefficients B_2k / (2k) of the digamma asymptotic series.
_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

_SHIFT_THRESHOLD = 6.0


def digamma(x):
    """Digamma function psi(x) = d/dx log Gamma(x) for x > 0.

    Arguments below 6 are shifted upward with psi(x) = psi(x + 1) - 1/x,
    then the asymptotic expansion

        psi(x) ~ log x - 1/(2x) - sum_k B_2k / (2k x^2k)

    is evaluated. Works elementwise on arrays; returns a float for scalar
    input.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr <= 0) or np.any(np.isnan(arr)):
        raise ValueError("digamma is only implemented for positive arguments")
    z = arr.copy()
    acc = np.zeros_like(z)
    # x > 0 reaches the threshold in at most six unit shifts
    for _ in range(int(_SHIFT_THRESHOLD)):
        small = z < _SHIFT_THRESHOLD
        if not small.any():
            break
        acc -= np.where(small, 1.0 / z, 0.0)
        z = np.where(small, z + 1.0, z)
    inv2 = 1.0 / (z * z)
    series = np.zeros_like(z)
    for coef in reversed(_ASYMPTOTIC):
        series = (series + coef) * inv2
    out = acc + np.log(z) - 0.5 / z - series
    if out.ndim == 0:
        return float(out)
    return out


def dirichlet_expectation(alpha):
    """E[log theta] for theta ~ Dirichlet(alpha), row-wise for 2-D input."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim == 1:
        return digamma(alpha) - digamma(alpha.sum())
    return digamma(alpha) - digamma(alpha.sum(axis=1))[:, np.newaxis]

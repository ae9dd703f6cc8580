"""Independent reference computations used only by the tests.

Nothing here calls the closed forms under test: fields are integrated
numerically, transfer matrices are rebuilt in exact rational arithmetic, and
CRB matrices are re-derived by brute-force sums.
"""

from fractions import Fraction
from math import comb, factorial

import numpy as np
from scipy import integrate

from axialrough.optics import lg_mode, psf_field


def radial_quad(func, upper=np.inf):
    """2 pi int_0^upper func(r) r dr."""
    val, _ = integrate.quad(lambda r: 2 * np.pi * r * func(r), 0, upper,
                            epsabs=1e-14, epsrel=1e-13, limit=400)
    return val


def psf_intensity_quad(r, z, cfg):
    return abs(psf_field(r, z, cfg)) ** 2


def overlap_prob_quad(q, z, cfg):
    """|<LG_q | psi_z>|^2 by quadrature of the complex fields."""
    re = radial_quad(lambda r: (lg_mode(q, r, cfg) * psf_field(r, z, cfg)).real)
    im = radial_quad(lambda r: (lg_mode(q, r, cfg) * psf_field(r, z, cfg)).imag)
    return re * re + im * im


def image_moment_quad(j, dist, cfg):
    """phi_{2j} = int r^{2j} f(r) d^2r with f the mixture of PSF intensities."""
    def density(r):
        return sum(p * abs(psf_field(r, z, cfg)) ** 2 for z, p in zip(dist.positions, dist.weights))
    return radial_quad(lambda r: r ** (2 * j) * density(r))


def exact_c(K, zr=Fraction(1)):
    return [[Fraction(factorial(i), 2**i) * comb(i, j) / zr ** (2 * j) for j in range(K + 1)]
            for i in range(K + 1)]


def exact_c_inverse(K, zr=Fraction(1)):
    return [[(-1) ** (i - j) * comb(i, j) * Fraction(2**j, factorial(j)) * zr ** (2 * i)
             for j in range(K + 1)] for i in range(K + 1)]


def exact_w(K, zr=Fraction(1)):
    return [[Fraction((-1) ** (k - q) * comb(k, q)) / (2 * zr) ** (2 * k) for k in range(K + 1)]
            for q in range(K + 1)]


def exact_w_inverse(K, zr=Fraction(1)):
    return [[(2 * zr) ** (2 * k) * comb(q, k) for q in range(K + 1)] for k in range(K + 1)]


def exact_matmul(a, b):
    n, m, p = len(a), len(b), len(b[0])
    return [[sum((a[i][t] * b[t][j] for t in range(m)), Fraction(0)) for j in range(p)]
            for i in range(n)]


def di_crb_double_sum(phi, zr, K):
    """[V]_ij as the explicit double sum over binomial terms (w0 = 1)."""
    v = np.zeros((K + 1, K + 1))
    for i in range(K + 1):
        for j in range(K + 1):
            total = 0.0
            for n in range(i + 1):
                for m in range(j + 1):
                    total += (comb(i, n) * comb(j, m) * (-2.0) ** (n + m) * (-zr**2) ** (i + j)
                              / (factorial(n) * factorial(m))
                              * (phi[n + m] - phi[n] * phi[m]))
            v[i, j] = total
    return v


def spade_crb_brute(dist, zr, K, n_modes=400):
    """Covariance of (2 z_R)^{2k} binom(q, k) under the exact mode law, by direct summation."""
    q = np.arange(n_modes + 1)
    f = np.zeros(n_modes + 1)
    for z, p in zip(dist.positions, dist.weights):
        xi = z * z / (z * z + 4 * zr * zr)
        f += p * (1 - xi) * xi**q
    g = np.array([[(2 * zr) ** (2 * k) * comb(int(qq), k) for qq in q] for k in range(K + 1)])
    mean = g @ f
    return (g * f) @ g.T - np.outer(mean, mean)

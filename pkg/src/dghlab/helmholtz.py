"""Green kernel and inverse-Helmholtz convolution operators.

Q = (1 - alpha^2 d_xx)^{-1} acts by convolution with the exponential
kernel p(x) = exp(-|x|/alpha)/(2*alpha).  On the periodic grid the
Fourier-symbol implementation below is exactly the convolution with the
periodized kernel; for L >> alpha that is indistinguishable from the
whole-line operator.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .core import Field, Grid, Parameters, _derivative_symbol

__all__ = ["NonlocalOperator", "make_operator", "green_kernel"]


def green_kernel(x, params: Parameters):
    """Kernel p(x) = exp(-|x|/alpha)/(2*alpha) of the inverse Helmholtz
    operator; unit mass on the line."""
    a = params.alpha
    return np.exp(-np.abs(x) / a) / (2.0 * a)


@dataclass(frozen=True, eq=False)
class NonlocalOperator:
    """Precomputed Fourier symbols for Q and d_x Q on one grid.

    The symbol of Q is 1/(1 + alpha^2 xi^2): real, even, positive, <= 1,
    and exactly 1 at xi = 0 (the kernel has unit mass).  d_x Q carries the
    extra i*xi factor, with the Nyquist bin zeroed to match the spectral
    derivative convention.
    """

    grid: Grid
    params: Parameters
    symbol_q: np.ndarray = dc_field(init=False, repr=False)
    symbol_dq: np.ndarray = dc_field(init=False, repr=False)

    def __post_init__(self) -> None:
        xi = self.grid.wavenumbers()
        sym_q = 1.0 / (1.0 + (self.params.alpha * xi) ** 2)
        sym_dq = _derivative_symbol(self.grid) * sym_q
        sym_q.setflags(write=False)
        sym_dq.setflags(write=False)
        object.__setattr__(self, "symbol_q", sym_q)
        object.__setattr__(self, "symbol_dq", sym_dq)

    # array-level hot paths -------------------------------------------------

    def apply_q_values(self, values: np.ndarray) -> np.ndarray:
        n = self.grid.n_points
        return np.fft.irfft(self.symbol_q * np.fft.rfft(values), n=n)

    def apply_dq_values(self, values: np.ndarray) -> np.ndarray:
        n = self.grid.n_points
        return np.fft.irfft(self.symbol_dq * np.fft.rfft(values), n=n)

    # Field-level API --------------------------------------------------------

    def apply_q(self, f: Field) -> Field:
        """g = Q f, i.e. (1 - alpha^2 d_xx) g = f in the discrete Fourier
        sense; equivalently the periodized convolution p * f."""
        return Field(self.grid, self.apply_q_values(f.values), f.allow_nonfinite)

    def apply_dq(self, f: Field) -> Field:
        """d_x (p * f), the Fourier multiplier i*xi/(1 + alpha^2 xi^2)."""
        return Field(self.grid, self.apply_dq_values(f.values), f.allow_nonfinite)

    def one_sided_convolutions(self, f: Field) -> tuple[Field, Field]:
        """((p - alpha*d_x p) * f, (p + alpha*d_x p) * f).

        These combinations are the one-sided exponential kernels
        2*p*1_{x>0} and 2*p*1_{x<0}; assembling them from Q and d_x Q keeps
        a single code path for all convolutions.
        """
        fh = np.fft.rfft(f.values)
        a = self.params.alpha
        n = self.grid.n_points
        qf = np.fft.irfft(self.symbol_q * fh, n=n)
        dqf = np.fft.irfft(self.symbol_dq * fh, n=n)
        minus = Field(self.grid, qf - a * dqf, f.allow_nonfinite)
        plus = Field(self.grid, qf + a * dqf, f.allow_nonfinite)
        return minus, plus


def make_operator(grid: Grid, params: Parameters) -> NonlocalOperator:
    return NonlocalOperator(grid, params)

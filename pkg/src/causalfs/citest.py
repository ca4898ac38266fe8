"""Partial-correlation conditional independence test.

The statistic is the Pearson correlation of the residuals of ``x`` and ``y``
after least-squares projection onto ``[1, Z]``; significance comes from the
Student-t distribution with ``n - k - 2`` degrees of freedom.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .exceptions import DegeneracyError, InsufficientSamplesError

RANK_TOL = 1e-10


@dataclass(frozen=True)
class CiResult:
    r: float
    p_value: float
    n: int
    dof: int
    perfect: bool = False


def _conditioning_basis(Z, n, strict=True):
    """Orthonormal basis of ``[1, Z]`` from a pivoted QR.

    A diagonal entry of R below ``RANK_TOL`` times the leading one marks a
    dependent column. ``strict`` raises :class:`DegeneracyError`; otherwise
    the basis is truncated to the numerical rank.
    """
    ones = np.ones((n, 1)) / np.sqrt(n)
    if Z is None or Z.shape[1] == 0:
        return ones
    # centering projects out the intercept, so every dependency found below
    # belongs to a column of Z (a constant column centers to zero)
    Q, R, piv = linalg.qr(Z - Z.mean(axis=0), mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    scale = max(d[0], np.sqrt(np.einsum("ij,ij->j", Z, Z)).max())
    bad = d <= RANK_TOL * scale
    if bad.any() and strict:
        offending = sorted(int(c) for c in piv[bad])
        raise DegeneracyError(
            f"conditioning set is rank deficient; offending Z columns {offending}",
            columns=offending,
        )
    return np.hstack([ones, Q[:, ~bad]])


def _check_shapes(x, y, Z):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if Z is None:
        Z = np.empty((n, 0))
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if x.shape[0] != n or Z.shape[0] != n:
        raise ValueError("x, y and Z must have the same number of rows")
    k = Z.shape[1]
    if n <= k + 2:
        raise InsufficientSamplesError(
            f"{n} samples with {k} conditions leaves no degrees of freedom"
        )
    return x, y, Z


def _residual_correlations(A, y, Q, strict=True):
    """Correlation of each column of ``A`` with ``y`` after projecting out ``Q``.

    A column lying in the span of ``Q`` raises unless ``strict`` is false, in
    which case its correlation is reported as 0 (it carries no information
    beyond the conditioning set).
    """
    ey = y - Q @ (Q.T @ y)
    EA = A - Q @ (Q.T @ A)
    ny = np.sqrt(ey @ ey)
    nA = np.sqrt(np.einsum("ij,ij->j", EA, EA))
    scale = max(np.sqrt(y @ y), 1.0)
    if ny <= RANK_TOL * scale:
        raise DegeneracyError("y is collinear with the conditioning set")
    small = nA <= RANK_TOL * np.maximum(np.sqrt(np.einsum("ij,ij->j", A, A)), 1.0)
    if small.any() and strict:
        raise DegeneracyError(
            "x is collinear with the conditioning set",
            columns=np.flatnonzero(small).tolist(),
        )
    r = (EA.T @ ey) / (np.where(small, 1.0, nA) * ny)
    r[small] = 0.0
    return np.clip(r, -1.0, 1.0)


def partial_correlation(x, y, Z=None):
    """Partial correlation of ``x`` and ``y`` given the columns of ``Z``.

    With an empty ``Z`` this is the Pearson correlation.
    """
    x, y, Z = _check_shapes(x, y, Z)
    Q = _conditioning_basis(Z, y.shape[0])
    return float(_residual_correlations(x[:, None], y, Q)[0])


def t_pvalue(r, dof):
    """Two-sided Student-t p-value for a (partial) correlation ``r``."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        t = np.abs(r) * np.sqrt(dof / (1.0 - r**2))
    p = 2.0 * stats.t.sf(t, dof)
    return np.where(np.abs(r) >= 1.0, 0.0, np.clip(p, 0.0, 1.0))


def ci_test(x, y, Z=None):
    """Test ``x`` independent of ``y`` given ``Z``; returns a :class:`CiResult`."""
    x, y, Z = _check_shapes(x, y, Z)
    n, k = y.shape[0], Z.shape[1]
    dof = n - k - 2
    r = partial_correlation(x, y, Z)
    return CiResult(r=r, p_value=float(t_pvalue(r, dof)), n=n, dof=dof, perfect=abs(r) >= 1.0)


def ci_test_many(A, y, Z=None, strict=True):
    """Test every column of ``A`` against ``y`` under one shared conditioning set.

    Returns ``(r, p, dof)`` with ``r`` and ``p`` arrays of length ``A.shape[1]``.
    With ``strict=False`` a rank-deficient ``Z`` is reduced to its numerical
    rank (``dof`` shrinks accordingly) and columns of ``A`` inside the span of
    ``Z`` get ``r = 0``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    _, y, Z = _check_shapes(A[:, 0] if A.shape[1] else y, y, Z)
    n, k = y.shape[0], Z.shape[1]
    dof = n - k - 2
    if A.shape[1] == 0:
        return np.empty(0), np.empty(0), dof
    Q = _conditioning_basis(Z, n, strict=strict)
    dof = n - Q.shape[1] - 1
    r = _residual_correlations(A, y, Q, strict=strict)
    return r, t_pvalue(r, dof), dof

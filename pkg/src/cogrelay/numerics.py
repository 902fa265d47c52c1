"""Small dense linear-algebra kernel.

Everything in this package runs on matrices no larger than ~16x16, so the
solvers below are plain textbook eliminations running on Python scalars:
deterministic, dependency-free, bit-reproducible, and faster than
vectorized dispatch at these sizes.  Inputs/outputs are numpy arrays
(complex128 for the Hermitian path, float64 for the real path).
"""

import math

import numpy as np

from .exceptions import NoConvergence, NotPositiveDefinite, Singular

_PIVOT_RTOL = 1e-14
_HERM_RTOL = 1e-12


def _as_square(a, dtype):
    a = np.asarray(a, dtype=dtype)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a nonempty square matrix, got shape {a.shape}")
    return a


def _as_vector(b, n, dtype):
    b = np.asarray(b, dtype=dtype)
    if b.shape != (n,):
        raise ValueError(f"expected a length-{n} vector, got shape {b.shape}")
    return b


def _psd_core(al, bl, n, diag_max):
    """Cholesky factor-and-solve on Python scalars; pivots checked against
    diag_max for positive definiteness."""
    low = [[0j] * n for _ in range(n)]
    for j in range(n):
        lj = low[j]
        d = al[j][j].real - sum(z.real * z.real + z.imag * z.imag for z in lj[:j])
        if d <= _PIVOT_RTOL * diag_max:
            raise NotPositiveDefinite(f"pivot {d:.3e} at column {j}")
        root = math.sqrt(d)
        lj[j] = complex(root, 0.0)
        inv = 1.0 / root
        for i in range(j + 1, n):
            li = low[i]
            acc = al[i][j]
            for k in range(j):
                acc -= li[k] * lj[k].conjugate()
            li[j] = acc * inv

    # L y = b, then L^H x = y
    y = [0j] * n
    for i in range(n):
        li = low[i]
        acc = bl[i]
        for k in range(i):
            acc -= li[k] * y[k]
        y[i] = acc / li[i]
    x = [0j] * n
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, n):
            acc -= low[k][i].conjugate() * x[k]
        x[i] = acc / low[i][i]
    return x


def psd_solve_trusted(a, b):
    """hermitian_solve without the input-validation layer, for internal hot
    paths whose matrices are Hermitian by construction. Pivots are still
    checked, so positive definiteness is never assumed."""
    n = a.shape[0]
    if n == 1:
        piv = a[0, 0].real
        if piv <= 0.0:
            raise NotPositiveDefinite("1x1 pivot is not positive")
        return np.array([b[0] / piv])
    al = a.tolist()
    diag_max = max(al[j][j].real for j in range(n))
    if diag_max <= 0.0:
        raise NotPositiveDefinite("no positive diagonal entry")
    return np.array(_psd_core(al, b.tolist(), n, diag_max), dtype=np.complex128)


def hermitian_solve(a, b):
    """Solve A x = b for Hermitian positive-definite A.

    Uses an unpivoted Cholesky factorization; the factorization pivots are
    the leading-minor ratios, so a nonpositive pivot is exactly a failed
    positive-definiteness certificate.

    Raises:
        ValueError: shape mismatch or A not numerically Hermitian.
        NotPositiveDefinite: a pivot fell below 1e-14 * max diagonal.
    """
    a = _as_square(a, np.complex128)
    n = a.shape[0]
    b = _as_vector(b, n, np.complex128)
    scale = float(np.max(np.abs(a)))
    if scale and float(np.max(np.abs(a - a.conj().T))) >= _HERM_RTOL * scale:
        raise ValueError("matrix is not Hermitian")
    return psd_solve_trusted(a, b)


def linear_solve_real(m, b):
    """Solve M x = b for real square M by Gaussian elimination with partial
    pivoting.

    Raises:
        ValueError: shape mismatch.
        Singular: a pivot fell below 1e-14 * max |entry|.
    """
    m = _as_square(m, np.float64)
    n = m.shape[0]
    b = _as_vector(b, n, np.float64)
    tol = _PIVOT_RTOL * max(float(np.max(np.abs(m))), 1e-300)
    rows = m.tolist()
    x = b.tolist()
    for k in range(n):
        piv = max(range(k, n), key=lambda i: abs(rows[i][k]))
        if abs(rows[piv][k]) <= tol:
            raise Singular(f"pivot {rows[piv][k]:.3e} at column {k}")
        if piv != k:
            rows[k], rows[piv] = rows[piv], rows[k]
            x[k], x[piv] = x[piv], x[k]
        rk = rows[k]
        pivval = rk[k]
        for i in range(k + 1, n):
            ri = rows[i]
            fac = ri[k] / pivval
            if fac != 0.0:
                for c in range(k + 1, n):
                    ri[c] -= fac * rk[c]
                x[i] -= fac * x[k]
    for k in range(n - 1, -1, -1):
        rk = rows[k]
        acc = x[k]
        for c in range(k + 1, n):
            acc -= rk[c] * x[c]
        x[k] = acc / rk[k]
    return np.array(x, dtype=np.float64)


def dominant_eigpair(mat, max_iter=10_000, rtol=1e-12, start=None):
    """Perron pair of an entrywise-nonnegative real square matrix.

    Power iteration with l1 normalization from the all-ones start; ties on
    reducible matrices are broken by the (deterministic) limit of that
    iteration.  A nonnegative ``start`` vector may be supplied to warm-start
    repeated solves on slowly drifting matrices.

    Returns:
        (rho, x): spectral radius >= 0 and a nonnegative vector, ||x||_1 = 1.

    Raises:
        ValueError: not square or has a negative entry.
        NoConvergence: iteration cap reached (degenerate/oscillatory input).
    """
    mat = _as_square(mat, np.float64)
    n = mat.shape[0]
    if float(np.min(mat)) < 0.0:
        raise ValueError("matrix has a negative entry")
    rows = mat.tolist()
    if start is None:
        x = [1.0 / n] * n
    else:
        start = _as_vector(start, n, np.float64)
        total = float(np.sum(start))
        if float(np.min(start)) < 0.0 or total <= 0.0:
            raise ValueError("start vector must be nonnegative and nonzero")
        x = (start / total).tolist()
    rho_prev = -1.0
    rng_n = range(n)
    for _ in range(max_iter):
        y = [0.0] * n
        rho = 0.0
        for i in rng_n:
            ri = rows[i]
            acc = 0.0
            for k in rng_n:
                acc += ri[k] * x[k]
            y[i] = acc
            rho += acc  # l1 norm: y >= 0
        if rho == 0.0:
            return 0.0, np.array(x)
        x_new = [v / rho for v in y]
        if abs(rho - rho_prev) < rtol * rho:
            # eigenvalue estimate settled; accept once the pair itself is tight
            resid = 0.0
            for i in rng_n:
                ri = rows[i]
                acc = 0.0
                for k in rng_n:
                    acc += ri[k] * x_new[k]
                resid += abs(acc - rho * x_new[i])
            if resid <= 1e-10 * rho:
                return rho, np.array(x_new)
        rho_prev = rho
        x = x_new
    raise NoConvergence(f"power iteration did not settle in {max_iter} steps")

"""Hot numeric kernels with numba and pure-numpy implementations.

Every public function dispatches on backend.NUMBA_ENABLED. The two paths
perform identical floating-point operations in identical order:

  * reductions use a fixed pairwise (tree) fold, independent of any library
    summation strategy, so results are bitwise reproducible across runs,
    thread counts and backends;
  * compound expressions keep the same association in both paths.

Arrays are flattened to 1-D/2-D views before entering a kernel; callers own
the reshaping.
"""

import numpy as np

from .backend import NUMBA_ENABLED

if NUMBA_ENABLED:
    from numba import njit
else:  # pragma: no cover - exercised via TORUSNS_BACKEND=numpy

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# fixed-order tree reduction

def _tree_fold_numpy(buf):
    n = buf.size
    while n > 1:
        half = n // 2
        buf[:half] += buf[half:2 * half]
        if n & 1:
            buf[half] = buf[2 * half]
            n = half + 1
        else:
            n = half
    return buf[0]


@njit(cache=True)
def _tree_fold_numba(buf):
    n = buf.size
    while n > 1:
        half = n // 2
        for i in range(half):
            buf[i] = buf[i] + buf[half + i]
        if n & 1:
            buf[half] = buf[2 * half]
            n = half + 1
        else:
            n = half
    return buf[0]


def tree_sum(x):
    """Sum of a float64 array in a fixed pairwise-fold order."""
    buf = np.ascontiguousarray(x, dtype=np.float64).ravel().copy()
    if buf.size == 0:
        return 0.0
    if NUMBA_ENABLED:
        return float(_tree_fold_numba(buf))
    return float(_tree_fold_numpy(buf))


# ---------------------------------------------------------------------------
# quadratic reductions on complex spectra

def _abs2_numpy(c):
    return c.real * c.real + c.imag * c.imag


@njit(cache=True)
def _abs2_numba(c):
    out = np.empty(c.size, dtype=np.float64)
    for i in range(c.size):
        out[i] = c[i].real * c[i].real + c[i].imag * c[i].imag
    return out


def sumsq(coeffs):
    """Sum of |c|^2 over a complex array, fixed-order fold."""
    c = np.ascontiguousarray(coeffs).ravel()
    if c.size == 0:
        return 0.0
    if NUMBA_ENABLED:
        return float(_tree_fold_numba(_abs2_numba(c)))
    return float(_tree_fold_numpy(_abs2_numpy(c)))


def weighted_sumsq(coeffs, weights):
    """Sum of w * |c|^2 with a real weight per entry (broadcast over rows).

    coeffs: complex, shape (nc, m); weights: float64, shape (m,).
    """
    c = np.ascontiguousarray(coeffs).reshape(-1, weights.size)
    w = np.ascontiguousarray(weights, dtype=np.float64)
    if NUMBA_ENABLED:
        return float(_weighted_sumsq_numba(c, w))
    buf = (c.real * c.real + c.imag * c.imag) * w[None, :]
    return float(_tree_fold_numpy(buf.ravel()))


@njit(cache=True)
def _weighted_sumsq_numba(c, w):
    nc, m = c.shape
    buf = np.empty(nc * m, dtype=np.float64)
    for r in range(nc):
        for i in range(m):
            v = c[r, i]
            buf[r * m + i] = (v.real * v.real + v.imag * v.imag) * w[i]
    return _tree_fold_numba(buf)


def dot_real(a, b):
    """Sum of Re(a * conj(b)) over two complex arrays, fixed order."""
    x = np.ascontiguousarray(a).ravel()
    y = np.ascontiguousarray(b).ravel()
    if NUMBA_ENABLED:
        return float(_dot_real_numba(x, y))
    buf = x.real * y.real + x.imag * y.imag
    return float(_tree_fold_numpy(buf))


@njit(cache=True)
def _dot_real_numba(x, y):
    buf = np.empty(x.size, dtype=np.float64)
    for i in range(x.size):
        buf[i] = x[i].real * y[i].real + x[i].imag * y[i].imag
    return _tree_fold_numba(buf)


# ---------------------------------------------------------------------------
# spectral multipliers

def scale_by_multiplier(coeffs, mult):
    """coeffs * mult with a real multiplier shared by all components.

    coeffs: complex (nc, m); mult: float64 (m,). Returns a new array.
    """
    c = np.ascontiguousarray(coeffs)
    m = np.ascontiguousarray(mult, dtype=np.float64)
    flat = c.reshape(-1, m.size)
    if NUMBA_ENABLED:
        out = _scale_numba(flat, m)
    else:
        out = flat * m[None, :]
    return out.reshape(c.shape)


@njit(cache=True)
def _scale_numba(c, m):
    nc, n = c.shape
    out = np.empty_like(c)
    for r in range(nc):
        for i in range(n):
            out[r, i] = c[r, i] * m[i]
    return out


# ---------------------------------------------------------------------------
# Leray projection (mode-wise I - k k^T / |k|^2)

def leray3(coeffs, kx, ky, kz, inv_k2):
    """Project a 3-component spectrum onto divergence-free fields.

    coeffs: complex (3, m); kx/ky/kz/inv_k2: float64 (m,) flattened mode data.
    inv_k2 must be 0 at k = 0 so the mean mode passes through untouched.
    """
    c = np.ascontiguousarray(coeffs).reshape(3, -1)
    if NUMBA_ENABLED:
        return _leray3_numba(c, kx, ky, kz, inv_k2).reshape(coeffs.shape)
    dot = kx * c[0] + ky * c[1] + kz * c[2]
    q = dot * inv_k2
    out = np.empty_like(c)
    out[0] = c[0] - kx * q
    out[1] = c[1] - ky * q
    out[2] = c[2] - kz * q
    return out.reshape(coeffs.shape)


@njit(cache=True)
def _leray3_numba(c, kx, ky, kz, inv_k2):
    m = kx.size
    out = np.empty_like(c)
    for i in range(m):
        dot = kx[i] * c[0, i] + ky[i] * c[1, i] + kz[i] * c[2, i]
        q = dot * inv_k2[i]
        out[0, i] = c[0, i] - kx[i] * q
        out[1, i] = c[1, i] - ky[i] * q
        out[2, i] = c[2, i] - kz[i] * q
    return out


def leray2(coeffs, kx, ky, inv_k2):
    """Project the first two components with the horizontal wavevector.

    Any further components are copied through untouched (the 3-on-2D case:
    pressure acts on the horizontal pair only).
    """
    c = np.ascontiguousarray(coeffs)
    flat = c.reshape(c.shape[0], -1)
    if NUMBA_ENABLED:
        return _leray2_numba(flat, kx, ky, inv_k2).reshape(c.shape)
    dot = kx * flat[0] + ky * flat[1]
    q = dot * inv_k2
    out = flat.copy()
    out[0] = flat[0] - kx * q
    out[1] = flat[1] - ky * q
    return out.reshape(c.shape)


@njit(cache=True)
def _leray2_numba(c, kx, ky, inv_k2):
    nc, m = c.shape
    out = c.copy()
    for i in range(m):
        dot = kx[i] * c[0, i] + ky[i] * c[1, i]
        q = dot * inv_k2[i]
        out[0, i] = c[0, i] - kx[i] * q
        out[1, i] = c[1, i] - ky[i] * q
    return out


# ---------------------------------------------------------------------------
# advection assembly in physical space: out_j = sum_i u_i * g_{i,j}

def advect_assemble(u_phys, grads):
    """u_phys: float64 (du, m); grads: float64 (du, cw, m) -> (cw, m)."""
    u = np.ascontiguousarray(u_phys, dtype=np.float64)
    g = np.ascontiguousarray(grads, dtype=np.float64)
    if NUMBA_ENABLED:
        return _advect_assemble_numba(u, g)
    out = u[0][None, :] * g[0]
    for i in range(1, u.shape[0]):
        out = out + u[i][None, :] * g[i]
    return out


@njit(cache=True)
def _advect_assemble_numba(u, g):
    du, cw, m = g.shape
    out = np.empty((cw, m), dtype=np.float64)
    for j in range(cw):
        for x in range(m):
            acc = u[0, x] * g[0, j, x]
            for i in range(1, du):
                acc = acc + u[i, x] * g[i, j, x]
            out[j, x] = acc
    return out


# ---------------------------------------------------------------------------
# pointwise magnitude and L^p reductions on physical grids

def _pow_half_numpy(mag2, half_p):
    hp_int = int(half_p)
    if half_p == hp_int and 1 <= hp_int <= 16:
        out = mag2.copy()
        for _ in range(hp_int - 1):
            out *= mag2
        return out
    return mag2 ** half_p


@njit(cache=True)
def _pow_half_scalar(v, half_p):
    hp_int = int(half_p)
    if half_p == hp_int and 1 <= hp_int <= 16:
        out = v
        for _ in range(hp_int - 1):
            out = out * v
        return out
    return v ** half_p


def lp_power_sum(phys, p):
    """Sum over grid points of |u(x)|^p with |.| the Euclidean component norm.

    phys: float64 (nc, m). p must be a finite real >= 1.
    """
    u = np.ascontiguousarray(phys, dtype=np.float64)
    half_p = p / 2.0
    if NUMBA_ENABLED:
        return float(_lp_power_sum_numba(u, half_p))
    mag2 = u[0] * u[0]
    for i in range(1, u.shape[0]):
        mag2 = mag2 + u[i] * u[i]
    return float(_tree_fold_numpy(_pow_half_numpy(mag2, half_p)))


@njit(cache=True)
def _lp_power_sum_numba(u, half_p):
    nc, m = u.shape
    buf = np.empty(m, dtype=np.float64)
    for x in range(m):
        mag2 = u[0, x] * u[0, x]
        for i in range(1, nc):
            mag2 = mag2 + u[i, x] * u[i, x]
        buf[x] = _pow_half_scalar(mag2, half_p)
    return _tree_fold_numba(buf)


def max_magnitude2(phys):
    """Max over grid points of |u(x)|^2 (max is order-independent exactly)."""
    u = np.ascontiguousarray(phys, dtype=np.float64)
    if NUMBA_ENABLED:
        return float(_max_mag2_numba(u))
    mag2 = u[0] * u[0]
    for i in range(1, u.shape[0]):
        mag2 = mag2 + u[i] * u[i]
    return float(np.max(mag2))


@njit(cache=True)
def _max_mag2_numba(u):
    nc, m = u.shape
    best = 0.0
    for x in range(m):
        mag2 = u[0, x] * u[0, x]
        for i in range(1, nc):
            mag2 = mag2 + u[i, x] * u[i, x]
        if mag2 > best:
            best = mag2
    return best


# ---------------------------------------------------------------------------
# vertically factored slabs: W_c(x, y) = A_c(x) cos_y + B_c(x) sin_y

def slab_lp_power_sum(a_phys, b_phys, cos_y, sin_y, p):
    """Sum over (x, y) of |A(x) cos_y(y) + B(x) sin_y(y)|^p.

    a_phys/b_phys: float64 (nc, nh, m); cos_y/sin_y: float64 (nh, ny) sampled
    vertical factors per harmonic row. Component magnitude is Euclidean.
    """
    a = np.ascontiguousarray(a_phys, dtype=np.float64)
    b = np.ascontiguousarray(b_phys, dtype=np.float64)
    cy = np.ascontiguousarray(cos_y, dtype=np.float64)
    sy = np.ascontiguousarray(sin_y, dtype=np.float64)
    half_p = p / 2.0
    if NUMBA_ENABLED:
        return float(_slab_lp_numba(a, b, cy, sy, half_p))
    mag2 = _slab_mag2_numpy(a, b, cy, sy)
    return float(_tree_fold_numpy(_pow_half_numpy(mag2.ravel(), half_p)))


def _slab_mag2_numpy(a, b, cy, sy):
    # same harmonic/component accumulation order as the numba kernels
    nh = a.shape[1]
    w = a[:, 0, :, None] * cy[0][None, None, :] + b[:, 0, :, None] * sy[0][None, None, :]
    for h in range(1, nh):
        w = w + (a[:, h, :, None] * cy[h][None, None, :]
                 + b[:, h, :, None] * sy[h][None, None, :])
    mag2 = w[0] * w[0]
    for i in range(1, w.shape[0]):
        mag2 = mag2 + w[i] * w[i]
    return mag2


@njit(cache=True)
def _slab_lp_numba(a, b, cy, sy, half_p):
    nc, nh, m = a.shape
    ny = cy.shape[1]
    buf = np.empty(m * ny, dtype=np.float64)
    for x in range(m):
        for y in range(ny):
            mag2 = 0.0
            first = True
            for c in range(nc):
                acc = a[c, 0, x] * cy[0, y] + b[c, 0, x] * sy[0, y]
                for h in range(1, nh):
                    acc = acc + (a[c, h, x] * cy[h, y] + b[c, h, x] * sy[h, y])
                if first:
                    mag2 = acc * acc
                    first = False
                else:
                    mag2 = mag2 + acc * acc
            buf[x * ny + y] = _pow_half_scalar(mag2, half_p)
    return _tree_fold_numba(buf)


def slab_max_magnitude2(a_phys, b_phys, cos_y, sin_y):
    a = np.ascontiguousarray(a_phys, dtype=np.float64)
    b = np.ascontiguousarray(b_phys, dtype=np.float64)
    cy = np.ascontiguousarray(cos_y, dtype=np.float64)
    sy = np.ascontiguousarray(sin_y, dtype=np.float64)
    if NUMBA_ENABLED:
        return float(_slab_max_numba(a, b, cy, sy))
    return float(np.max(_slab_mag2_numpy(a, b, cy, sy)))


@njit(cache=True)
def _slab_max_numba(a, b, cy, sy):
    nc, nh, m = a.shape
    ny = cy.shape[1]
    best = 0.0
    for x in range(m):
        for y in range(ny):
            mag2 = 0.0
            first = True
            for c in range(nc):
                acc = a[c, 0, x] * cy[0, y] + b[c, 0, x] * sy[0, y]
                for h in range(1, nh):
                    acc = acc + (a[c, h, x] * cy[h, y] + b[c, h, x] * sy[h, y])
                if first:
                    mag2 = acc * acc
                    first = False
                else:
                    mag2 = mag2 + acc * acc
            if mag2 > best:
                best = mag2
    return best

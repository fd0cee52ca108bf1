"""Hot loops, each in a numba flavour and a vectorized numpy flavour.

The public entry points at the bottom dispatch on ``_accel.HAVE_NUMBA``.  Both
flavours follow the same arithmetic so results agree to rounding; the test
suite checks this directly and ``benchmarks/bench_kernels.py`` times them.

All density-dependent kernels take the mixing weight ``delta`` only: the
standard Gaussian is the ``delta = 1/2`` member of the family.
"""
from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import optional_njit

GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)

# status codes returned by the contour kernel
OK = 0
NOT_CONVERGED = 1
NONPOSITIVE = 2

# z = log(1 - t/delta) is bracketed here; the bracket is generous for any
# u/n ratio met in practice and failures are reported, never clipped.
_Z_LO, _Z_HI = -60.0, 60.0


# ---------------------------------------------------------------------------
# cumulant generating function of h_delta, written in z = log(1 - t/delta)
# ---------------------------------------------------------------------------

@optional_njit(cache=True)
def _cgf_parts(z, delta):
    a = math.exp(z)
    b = (1.0 - 2.0 * delta + delta * a) / (1.0 - delta)
    ra = a ** -0.5
    rb = b ** -0.5
    g0 = delta * ra + (1.0 - delta) * rb
    k0 = math.log(g0)
    k1 = 0.5 * (ra ** 3 + rb ** 3) / g0
    k2 = (0.75 / delta * ra ** 5 + 0.75 / (1.0 - delta) * rb ** 5) / g0 - k1 * k1
    return a, b, k0, k1, k2


@optional_njit(cache=True)
def _saddle_z(n, u, delta):
    # n K'(t(z)) - u is strictly decreasing in z
    lo, hi = _Z_LO, _Z_HI
    if n * _cgf_parts(lo, delta)[3] < u or n * _cgf_parts(hi, delta)[3] > u:
        return math.nan
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if n * _cgf_parts(mid, delta)[3] > u:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * (1.0 + abs(mid)):
            break
    return 0.5 * (lo + hi)


@optional_njit(cache=True)
def _contour_one(n, u, delta, gx, gw, angle, growth, tol, max_panels):
    z = _saddle_z(n, u, delta)
    if z != z:
        return math.nan, math.inf, 0, NOT_CONVERGED
    a, b, k0, k1, k2 = _cgf_parts(z, delta)
    sigma = 1.0 / (2.0 * math.pi * math.sqrt(n * k2))
    cap = 1.0 / u
    e = complex(math.cos(angle), math.sin(angle))
    ca = 2.0 * math.pi / delta
    cb = 2.0 * math.pi / (1.0 - delta)
    left = 0.0
    h = min(0.5 * sigma, cap)
    total = 0.0 + 0.0j
    absum = 0.0
    k = 0
    tail = math.inf
    while k < max_panels:
        psum = 0.0 + 0.0j
        pmax = 0.0
        for m in range(gx.shape[0]):
            s = left + 0.5 * (gx[m] + 1.0) * h
            w = s * e
            p = a + 1j * ca * w
            q = b + 1j * cb * w
            lg = np.log(delta / np.sqrt(p) + (1.0 - delta) / np.sqrt(q))
            val = np.exp(n * (lg - k0) + 2j * math.pi * w * u) * e
            term = 0.5 * h * gw[m] * val
            psum += term
            absum += abs(term)
            av = abs(val)
            if av > pmax:
                pmax = av
        total += psum
        left += h
        k += 1
        tail = pmax * h
        if k > 8 and tail < tol * abs(total.real):
            break
        h = min(h * growth, cap)
    re = 2.0 * total.real
    err = (2.0 * tail + 64.0 * 2.2e-16 * 2.0 * absum) / abs(re) if re != 0.0 else math.inf
    if re <= 0.0:
        return math.nan, err, k, NONPOSITIVE
    status = OK if tail < tol * abs(total.real) else NOT_CONVERGED
    return n * k0 - (1.0 - a) * delta * u + math.log(re), err, k, status


@optional_njit(cache=True)
def _log_conv_numba(n, u, delta, gx, gw, angle, growth, tol, max_panels):
    m = u.shape[0]
    out = np.empty(m)
    err = np.empty(m)
    panels = np.empty(m, dtype=np.int64)
    status = np.empty(m, dtype=np.int64)
    for i in range(m):
        out[i], err[i], panels[i], status[i] = _contour_one(
            n, u[i], delta, gx, gw, angle, growth, tol, max_panels)
    return out, err, panels, status


def _cgf_parts_np(z, delta):
    a = np.exp(z)
    b = (1.0 - 2.0 * delta + delta * a) / (1.0 - delta)
    ra = a ** -0.5
    rb = b ** -0.5
    g0 = delta * ra + (1.0 - delta) * rb
    k1 = 0.5 * (ra ** 3 + rb ** 3) / g0
    k2 = (0.75 / delta * ra ** 5 + 0.75 / (1.0 - delta) * rb ** 5) / g0 - k1 * k1
    return a, b, np.log(g0), k1, k2


def _saddle_z_np(n, u, delta):
    lo = np.full(u.shape, _Z_LO)
    hi = np.full(u.shape, _Z_HI)
    bad = (n * _cgf_parts_np(lo, delta)[3] < u) | (n * _cgf_parts_np(hi, delta)[3] > u)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        above = n * _cgf_parts_np(mid, delta)[3] > u
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo < 1e-15 * (1.0 + np.abs(mid))):
            break
    z = 0.5 * (lo + hi)
    z[bad] = np.nan
    return z


def _log_conv_numpy(n, u, delta, gx, gw, angle, growth, tol, max_panels, chunk=32):
    m = u.shape[0]
    out = np.full(m, np.nan)
    err = np.full(m, np.inf)
    panels = np.zeros(m, dtype=np.int64)
    status = np.full(m, NOT_CONVERGED, dtype=np.int64)
    z = _saddle_z_np(n, u, delta)
    good = np.isfinite(z)
    a, b, k0, _, k2 = _cgf_parts_np(np.where(good, z, 0.0), delta)
    sigma = 1.0 / (2.0 * np.pi * np.sqrt(n * k2))
    e = np.exp(1j * angle)
    ca = 2.0 * np.pi / delta
    cb = 2.0 * np.pi / (1.0 - delta)
    for i in np.flatnonzero(good):
        cap = 1.0 / u[i]
        total = 0.0 + 0.0j
        absum = 0.0
        left = 0.0
        k = 0
        h = min(0.5 * sigma[i], cap)
        done = False
        tail = np.inf
        while k < max_panels and not done:
            c = min(chunk, max_panels - k)
            widths = np.minimum(h * growth ** np.arange(c), cap)
            lefts = left + np.concatenate(([0.0], np.cumsum(widths[:-1])))
            s = lefts[:, None] + 0.5 * (gx[None, :] + 1.0) * widths[:, None]
            w = s * e
            p = a[i] + 1j * ca * w
            q = b[i] + 1j * cb * w
            lg = np.log(delta / np.sqrt(p) + (1.0 - delta) / np.sqrt(q))
            val = np.exp(n * (lg - k0[i]) + 2j * np.pi * w * u[i]) * e
            terms = 0.5 * widths[:, None] * gw[None, :] * val
            psums = terms.sum(axis=1)
            running = total + np.cumsum(psums)
            tails = np.abs(val).max(axis=1) * widths
            idx = k + np.arange(1, c + 1)
            hit = np.flatnonzero((idx > 8) & (tails < tol * np.abs(running.real)))
            stop = hit[0] if hit.size else c - 1
            total = running[stop]
            absum += np.abs(terms[: stop + 1]).sum()
            tail = tails[stop]
            k += stop + 1
            done = hit.size > 0
            left = lefts[stop] + widths[stop]
            h = min(widths[stop] * growth, cap)
        re = 2.0 * total.real
        panels[i] = k
        err[i] = (2.0 * tail + 64.0 * 2.2e-16 * 2.0 * absum) / abs(re) if re != 0.0 else np.inf
        if re <= 0.0:
            status[i] = NONPOSITIVE
            continue
        status[i] = OK if done else NOT_CONVERGED
        out[i] = n * k0[i] - (1.0 - a[i]) * delta * u[i] + np.log(re)
    return out, err, panels, status


# ---------------------------------------------------------------------------
# literal double sum of the polar numerator at one radius
# ---------------------------------------------------------------------------

@optional_njit(cache=True)
def _angular_double_sum_numba(G, g, phi_idx, theta_idx):
    nr, L = G.shape
    out = np.empty(nr)
    for r in range(nr):
        acc = 0.0
        for k in range(phi_idx.shape[0]):
            ik = phi_idx[k]
            g0 = G[r, ik]
            h0 = g[r, ik]
            for l in range(theta_idx.shape[0]):
                j = ik - theta_idx[l]
                if j < 0:
                    j += L
                acc += (G[r, j] - g0) * (g[r, j] - h0)
        out[r] = acc
    return out


def _angular_double_sum_numpy(G, g, phi_idx, theta_idx):
    L = G.shape[1]
    idx = (phi_idx[:, None] - theta_idx[None, :]) % L
    out = np.empty(G.shape[0])
    for r in range(G.shape[0]):
        Gr, gr = G[r], g[r]
        dG = Gr[idx] - Gr[phi_idx][:, None]
        dg = gr[idx] - gr[phi_idx][:, None]
        out[r] = (dG * dg).sum()
    return out


# ---------------------------------------------------------------------------
# log density of the mixture and the rotated pair average used by Monte Carlo
# ---------------------------------------------------------------------------

@optional_njit(cache=True)
def _logf_scalar(v, delta):
    ia = 2.0 * delta
    ib = 2.0 * (1.0 - delta)
    x = math.log(delta) + 0.5 * math.log(ia / (2.0 * math.pi)) - 0.5 * ia * v * v
    y = math.log(1.0 - delta) + 0.5 * math.log(ib / (2.0 * math.pi)) - 0.5 * ib * v * v
    m = max(x, y)
    return m + math.log(math.exp(x - m) + math.exp(y - m))


def logf_mixture(v, delta):
    """Log of the two-temperature Maxwellian mixture, stable in the far tail."""
    v = np.asarray(v, dtype=float)
    ia = 2.0 * delta
    ib = 2.0 * (1.0 - delta)
    x = math.log(delta) + 0.5 * math.log(ia / (2.0 * math.pi)) - 0.5 * ia * v * v
    y = math.log1p(-delta) + 0.5 * math.log(ib / (2.0 * math.pi)) - 0.5 * ib * v * v
    return np.logaddexp(x, y)


@optional_njit(cache=True)
def _rotated_logf_mean_numba(v1, v2, delta, thetas):
    m = v1.shape[0]
    out = np.empty(m)
    ct = np.cos(thetas)
    st = np.sin(thetas)
    nt = thetas.shape[0]
    for i in range(m):
        acc = 0.0
        for l in range(nt):
            x = ct[l] * v1[i] + st[l] * v2[i]
            y = -st[l] * v1[i] + ct[l] * v2[i]
            acc += _logf_scalar(x, delta) + _logf_scalar(y, delta)
        out[i] = acc / nt
    return out


def _rotated_logf_mean_numpy(v1, v2, delta, thetas, chunk=4096):
    ct = np.cos(thetas)
    st = np.sin(thetas)
    out = np.empty(v1.shape[0])
    for s in range(0, v1.shape[0], chunk):
        a = v1[s:s + chunk, None]
        b = v2[s:s + chunk, None]
        x = ct * a + st * b
        y = -st * a + ct * b
        out[s:s + chunk] = (logf_mixture(x, delta) + logf_mixture(y, delta)).mean(axis=1)
    return out


# ---------------------------------------------------------------------------
# Kac walk: apply a pre-drawn sequence of pair rotations
# ---------------------------------------------------------------------------

@optional_njit(cache=True)
def _kac_rotations_numba(v, ii, jj, theta, stride, energy, moment4):
    N = v.shape[0]
    rec = 0
    for s in range(ii.shape[0]):
        i = ii[s]
        j = jj[s]
        c = math.cos(theta[s])
        sn = math.sin(theta[s])
        x = v[i]
        y = v[j]
        v[i] = c * x + sn * y
        v[j] = -sn * x + c * y
        if (s + 1) % stride == 0:
            e2 = 0.0
            e4 = 0.0
            for k in range(N):
                w = v[k] * v[k]
                e2 += w
                e4 += w * w
            energy[rec] = e2
            moment4[rec] = e4 / N
            rec += 1
    return rec


def _kac_rotations_numpy(v, ii, jj, theta, stride, energy, moment4):
    # sequential by nature; the numpy path keeps the per-step work scalar
    c = np.cos(theta)
    sn = np.sin(theta)
    N = v.shape[0]
    rec = 0
    vals = v.tolist()
    for s, (i, j) in enumerate(zip(ii.tolist(), jj.tolist())):
        x = vals[i]
        y = vals[j]
        vals[i] = c[s] * x + sn[s] * y
        vals[j] = -sn[s] * x + c[s] * y
        if (s + 1) % stride == 0:
            arr = np.asarray(vals)
            w = arr * arr
            energy[rec] = w.sum()
            moment4[rec] = (w * w).sum() / N
            rec += 1
    v[:] = vals
    return rec


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def log_conv_power_kernel(n, u, delta, *, angle, growth, tol, max_panels, force=None):
    """Saddle-point contour evaluation of ``log h^{*n}(u)`` for an array of ``u``.

    Returns ``(log_values, relative_error, panels_used, status)``.
    """
    u = np.ascontiguousarray(u, dtype=float)
    args = (float(n), u, float(delta), _GL_X, _GL_W, float(angle), float(growth),
            float(tol), int(max_panels))
    if _use_numba(force):
        return _log_conv_numba(*args)
    return _log_conv_numpy(*args)


def angular_double_sum(G, g, phi_idx, theta_idx, force=None):
    G = np.ascontiguousarray(G, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    phi_idx = np.ascontiguousarray(phi_idx, dtype=np.int64)
    theta_idx = np.ascontiguousarray(theta_idx, dtype=np.int64)
    if _use_numba(force):
        return _angular_double_sum_numba(G, g, phi_idx, theta_idx)
    return _angular_double_sum_numpy(G, g, phi_idx, theta_idx)


def rotated_logf_mean(v1, v2, delta, thetas, force=None):
    v1 = np.ascontiguousarray(v1, dtype=float)
    v2 = np.ascontiguousarray(v2, dtype=float)
    thetas = np.ascontiguousarray(thetas, dtype=float)
    if _use_numba(force):
        return _rotated_logf_mean_numba(v1, v2, float(delta), thetas)
    return _rotated_logf_mean_numpy(v1, v2, float(delta), thetas)


def kac_rotations(v, ii, jj, theta, stride, force=None):
    """Rotate pairs in place; record energy and mean fourth power every ``stride`` steps."""
    nrec = len(ii) // stride
    energy = np.empty(nrec)
    moment4 = np.empty(nrec)
    args = (v, np.ascontiguousarray(ii, dtype=np.int64), np.ascontiguousarray(jj, dtype=np.int64),
            np.ascontiguousarray(theta, dtype=float), int(stride), energy, moment4)
    if _use_numba(force):
        _kac_rotations_numba(*args)
    else:
        _kac_rotations_numpy(*args)
    return energy, moment4


def _use_numba(force):
    if force is None:
        return _accel.HAVE_NUMBA
    if force == "numba" and not _accel.HAVE_NUMBA:
        raise RuntimeError("numba backend requested but unavailable")
    return force == "numba"

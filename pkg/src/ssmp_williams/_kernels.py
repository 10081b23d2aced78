"""Compiled inner loops for the isotropic stable simulators.

Everything here works on plain arrays and a ``numpy.random.Generator`` so the
callers in :mod:`ssmp_williams.stable_cond` keep control of seeding.
"""
import math

import numpy as np
from numba import njit

KIND_DOWN = 0
KIND_UP = 1

HUP_D2_A1 = 0
HUP_D3_A2 = 1
HUP_TABLE = 2

ST_ACTIVE = 0
ST_FROZEN = 1
ST_DEAD = 2
ST_DONE = 3


@njit(cache=True)
def positive_stable_draw(a, rng):
    """One draw of the positive a-stable law with Laplace transform exp(-lam**a)."""
    if a >= 1.0:
        return 1.0
    u = rng.uniform(0.0, math.pi)
    e = rng.standard_exponential()
    return (math.sin(a * u) / math.sin(u) ** (1.0 / a)
            * (math.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a))


@njit(cache=True)
def add_increment(x, alpha, dt, rng):
    """x += increment of the isotropic process over dt (alpha=2 is standard BM)."""
    d = x.shape[0]
    if alpha >= 2.0:
        s = math.sqrt(dt)
    else:
        s = dt ** (1.0 / alpha) * math.sqrt(2.0 * positive_stable_draw(0.5 * alpha, rng))
    for j in range(d):
        x[j] += s * rng.standard_normal()


@njit(cache=True)
def _norm(x):
    acc = 0.0
    for j in range(x.shape[0]):
        acc += x[j] * x[j]
    return math.sqrt(acc)


@njit(cache=True)
def _dist(x, y):
    acc = 0.0
    for j in range(x.shape[0]):
        acc += (x[j] - y[j]) ** 2
    return math.sqrt(acc)


DENS_CAUCHY = 0
DENS_GAUSS = 1
DENS_TABLE = 2


@njit(cache=True)
def log_step_density(z2, dt, d, alpha, mode, tab_s, tab_logf):
    """Log density of the isotropic increment over dt at squared length z2."""
    if mode == DENS_CAUCHY:
        return (math.lgamma(0.5 * (d + 1)) - 0.5 * (d + 1) * math.log(math.pi)
                + math.log(dt) - 0.5 * (d + 1) * math.log(dt * dt + z2))
    if mode == DENS_GAUSS:
        return -0.5 * d * math.log(2.0 * math.pi * dt) - 0.5 * z2 / dt
    sc = dt ** (1.0 / alpha)
    rho = math.sqrt(z2) / sc
    n = tab_s.shape[0]
    if rho <= 0.0:
        lf = tab_logf[0]
    else:
        s = math.log(rho)
        if s <= tab_s[0]:
            lf = tab_logf[0]
        elif s >= tab_s[n - 1]:
            lf = tab_logf[n - 1] - (d + alpha) * (s - tab_s[n - 1])
        else:
            step = tab_s[1] - tab_s[0]
            i = min(int((s - tab_s[0]) / step), n - 2)
            f = (s - tab_s[i]) / step
            lf = (1.0 - f) * tab_logf[i] + f * tab_logf[i + 1]
    return lf - d * math.log(sc)


@njit(cache=True)
def hup_scaled(r, mode, alpha, tab_s, tab_logh):
    """H-up at radius r (barrier already scaled to 1)."""
    if r <= 1.0:
        return 0.0
    if mode == HUP_D2_A1:
        return 2.0 * math.atan(math.sqrt(r * r - 1.0))
    if mode == HUP_D3_A2:
        return 2.0 * (1.0 - 1.0 / r)
    s = math.log(r - 1.0)
    n = tab_s.shape[0]
    if s <= tab_s[0]:
        return math.exp(tab_logh[0] + 0.5 * alpha * (s - tab_s[0]))
    if s >= tab_s[n - 1]:
        return math.exp(tab_logh[n - 1])
    step = tab_s[1] - tab_s[0]
    i = int((s - tab_s[0]) / step)
    if i > n - 2:
        i = n - 2
    f = (s - tab_s[i]) / step
    return math.exp((1.0 - f) * tab_logh[i] + f * tab_logh[i + 1])


@njit(cache=True)
def hdown_point_scaled(z, theta, alpha):
    """H-down towards the point theta on the unit sphere, at scaled position z."""
    r = _norm(z)
    if r <= 1.0:
        return 0.0
    d = z.shape[0]
    return (r * r - 1.0) ** (0.5 * alpha) / _dist(z, theta) ** d


@njit(cache=True)
def _h_value(x, kind, rs, theta, alpha, mode, tab_s, tab_logh, buf):
    for j in range(x.shape[0]):
        buf[j] = x[j] / rs
    if kind == KIND_DOWN:
        return hdown_point_scaled(buf, theta, alpha)
    return hup_scaled(_norm(buf), mode, alpha, tab_s, tab_logh)


@njit(cache=True)
def smc_leg(x0, M, h, K, kind, rs, theta, eta, tstop, trec, alpha, mode,
            tab_s, tab_logh, maxsteps, ramp0, far, rng,
            record, hist_x, hist_t, hist_anc, ess_frac, guide, dmode,
            dtab_s, dtab_logf):
    """Weighted particle run of one conditioned leg with scale-adaptive steps.

    kind DOWN weights by H-down towards rs*theta and freezes particles within
    eta*rs of it; kind UP weights by H-up. Both kill inside the ball of radius
    rs. Steps are h*ramp*ell**alpha with ell = r - rs. Every K steps the
    weights are checked and resampled (multinomial) when the ESS falls below
    ess_frac*M.

    With guide > 0 a DOWN step is, with probability guide, replaced by a
    jump to rs*theta + rho*U with rho**(alpha/2) uniform on [0, R^(alpha/2)],
    R the current distance to the target; the step then carries the factor
    p_dt/q of the defensive mixture q. Near the target q dominates
    H-down*p_dt, which keeps the weights bounded. dmode and the dtab arrays
    select the increment density (see log_step_density).

    ``eta`` is an absolute freeze radius around rs*theta.

    Returns (ok, t, rT, minr, x, nsteps, ess_min, sel, logz) for a
    weight-drawn particle; rT is the radius at time trec (nan if not
    reached). exp(logz) is the running product of mean incremental weights,
    an unbiased estimate of the expected final weight (1 for a martingale),
    so exp(logz) times a functional of the drawn particle is unbiased for
    the conditioned expectation.
    """
    d = x0.shape[0]
    x = np.empty((M, d))
    for m in range(M):
        for j in range(d):
            x[m, j] = x0[j]
    xs = np.empty(d)
    for j in range(d):
        xs[j] = rs * theta[j]
    buf = np.empty(d)
    t = np.zeros(M)
    hc = np.empty(M)
    hb = np.empty(M)
    isw = np.ones(M)
    xo = np.empty(d)
    omega = 2.0 * math.pi ** (0.5 * d) / math.gamma(0.5 * d)
    status = np.zeros(M, np.int64)
    rT = np.full(M, np.nan)
    minr = np.empty(M)
    h0 = _h_value(x0, kind, rs, theta, alpha, mode, tab_s, tab_logh, buf)
    r0 = _norm(x0)
    for m in range(M):
        hc[m] = h0
        hb[m] = h0 if h0 > 0 else 1.0
        minr[m] = r0
        if kind == KIND_DOWN and _dist(x0, xs) < eta:
            status[m] = ST_FROZEN
        if tstop <= 0.0:
            status[m] = ST_DONE
    if record:
        for m in range(M):
            for j in range(d):
                hist_x[0, m, j] = x[m, j]
            hist_t[0, m] = 0.0
            hist_anc[0, m] = m
    ramp = ramp0
    logz = 0.0
    ess_min = float(M)
    nsteps = 0
    w = np.empty(M)
    idx = np.empty(M, np.int64)
    u = np.empty(M)
    for step in range(maxsteps):
        nact = 0
        for m in range(M):
            if status[m] != ST_ACTIVE:
                continue
            nact += 1
            r = _norm(x[m])
            ell = r - rs
            dt = h * ramp * ell ** alpha
            target = tstop
            if t[m] < trec and trec < target:
                target = trec
            hit_rec = False
            if t[m] + dt >= target:
                dt = target - t[m]
                hit_rec = target == trec
            if kind == KIND_DOWN and guide > 0.0:
                Rg = _dist(x[m], xs)
                for j in range(d):
                    xo[j] = x[m, j]
                if rng.random() < guide:
                    rho = Rg * rng.random() ** (2.0 / alpha)
                    nrm = 0.0
                    for j in range(d):
                        buf[j] = rng.standard_normal()
                        nrm += buf[j] * buf[j]
                    nrm = math.sqrt(nrm)
                    for j in range(d):
                        x[m, j] = xs[j] + rho * buf[j] / nrm
                else:
                    add_increment(x[m], alpha, dt, rng)
                z2 = 0.0
                for j in range(d):
                    z2 += (x[m, j] - xo[j]) ** 2
                lp = log_step_density(z2, dt, d, alpha, dmode, dtab_s, dtab_logf)
                rho = _dist(x[m], xs)
                qg = 0.0
                if rho < Rg and rho > 0.0:
                    qg = guide * 0.5 * alpha / (omega * Rg ** (0.5 * alpha)) * rho ** (0.5 * alpha - d)
                isw[m] *= 1.0 / ((1.0 - guide) + qg * math.exp(-lp))
            else:
                add_increment(x[m], alpha, dt, rng)
            t[m] = t[m] + dt if not (t[m] + dt >= target) else target
            rn = _norm(x[m])
            if hit_rec:
                rT[m] = rn
            if rn < minr[m]:
                minr[m] = rn
            if rn <= rs or rn > far:
                status[m] = ST_DEAD
                hc[m] = 0.0
            else:
                hc[m] = _h_value(x[m], kind, rs, theta, alpha, mode, tab_s, tab_logh, buf)
                if kind == KIND_DOWN and _dist(x[m], xs) < eta:
                    status[m] = ST_FROZEN
                elif t[m] >= tstop:
                    status[m] = ST_DONE
        if nact == 0:
            break
        nsteps = step + 1
        if record:
            for m in range(M):
                for j in range(d):
                    hist_x[step + 1, m, j] = x[m, j]
                hist_t[step + 1, m] = t[m]
                hist_anc[step + 1, m] = m
        ramp = min(1.0, ramp * 1.2)
        if (step + 1) % K == 0:
            tot = 0.0
            sq = 0.0
            for m in range(M):
                w[m] = isw[m] * hc[m] / hb[m]
                tot += w[m]
                sq += w[m] * w[m]
            if tot <= 0.0:
                return False, np.nan, np.nan, np.nan, x[0].copy(), nsteps, 0.0, -1, -np.inf
            ess = tot * tot / sq
            if ess < ess_min:
                ess_min = ess
            if ess >= ess_frac * M:
                continue
            logz += math.log(tot / M)
            for m in range(M):
                u[m] = rng.random()
            u.sort()
            c = 0.0
            k = 0
            for m in range(M):
                c += w[m] / tot
                while k < M and u[k] < c:
                    idx[k] = m
                    k += 1
            while k < M:
                idx[k] = M - 1
                while w[idx[k]] <= 0.0 and idx[k] > 0:
                    idx[k] -= 1
                k += 1
            x[:, :] = x[idx]
            t[:] = t[idx]
            hc[:] = hc[idx]
            status[:] = status[idx]
            rT[:] = rT[idx]
            minr[:] = minr[idx]
            for m in range(M):
                hb[m] = hc[m] if hc[m] > 0 else 1.0
                isw[m] = 1.0
            if record:
                for m in range(M):
                    hist_anc[step + 1, m] = idx[m]
    # final weighted draw among eligible particles
    tot = 0.0
    for m in range(M):
        ok_m = status[m] == ST_FROZEN if kind == KIND_DOWN else (status[m] == ST_DONE or status[m] == ST_ACTIVE)
        w[m] = isw[m] * hc[m] / hb[m] if ok_m else 0.0
        tot += w[m]
    if tot <= 0.0:
        return False, np.nan, np.nan, np.nan, x[0].copy(), nsteps, ess_min, -1, -np.inf
    logz += math.log(tot / M)
    v = rng.random() * tot
    c = 0.0
    sel = M - 1
    for m in range(M):
        c += w[m]
        if v < c and w[m] > 0:
            sel = m
            break
    while w[sel] <= 0.0:
        sel -= 1
    return True, t[sel], rT[sel], minr[sel], x[sel].copy(), nsteps, ess_min, sel, logz


@njit(cache=True)
def direct_stable_block(x0, n, alpha, hc, hf, kappa, T, log_margin, ramp0, maxsteps, rng):
    """Direct simulation of n paths with minimum-adaptive steps.

    Each path runs past T until log(r/min r) exceeds log_margin. Returns
    arrays (minr, argmin point (n,d), g, rT, ok).
    """
    d = x0.shape[0]
    minr = np.empty(n)
    xmin = np.empty((n, d))
    g = np.zeros(n)
    rT = np.full(n, np.nan)
    ok = np.zeros(n, np.bool_)
    x = np.empty(d)
    for i in range(n):
        for j in range(d):
            x[j] = x0[j]
            xmin[i, j] = x0[j]
        r = _norm(x)
        m = r
        t = 0.0
        ramp = ramp0
        for _ in range(maxsteps):
            rel = (r - m) / r
            hh = hc * (rel / kappa) ** alpha
            if hh < hf:
                hh = hf
            if hh > hc:
                hh = hc
            dt = hh * ramp * r ** alpha
            cross = t < T and t + dt >= T
            if cross:
                dt = T - t
            add_increment(x, alpha, dt, rng)
            t = T if cross else t + dt
            r = _norm(x)
            if cross:
                rT[i] = r
            if r < m:
                m = r
                g[i] = t
                for j in range(d):
                    xmin[i, j] = x[j]
            ramp = min(1.0, ramp * 1.2)
            if t >= T and math.log(r / m) > log_margin:
                ok[i] = True
                break
        minr[i] = m
    return minr, xmin, g, rT, ok


@njit(cache=True)
def first_entry_block(x0, n, alpha, rbar, rin, rout, h, ramp0, far, maxsteps, rng):
    """Run n paths from x0 until the radius first lies in the shell (rin, rout].

    Paths that jump below rin keep running; entering the ball of radius
    rbar kills them. Returns the landing points (n,d) and a status array:
    1 landed in the shell, 0 entered the ball, -1 escaped past far.
    Steps are h*ramp*ell**alpha with ell the distance to the nearest
    boundary of the stop set.
    """
    d = x0.shape[0]
    land = np.full((n, d), np.nan)
    st = np.full(n, -1, np.int64)
    x = np.empty(d)
    for i in range(n):
        for j in range(d):
            x[j] = x0[j]
        r = _norm(x)
        ramp = ramp0
        for _ in range(maxsteps):
            if r > rout:
                ell = min(r, r - rout)
            else:
                ell = min(r - rbar, rin - r)
            add_increment(x, alpha, h * ramp * ell ** alpha, rng)
            r = _norm(x)
            ramp = min(1.0, ramp * 1.2)
            if r <= rbar:
                st[i] = 0
                break
            if rin < r <= rout:
                st[i] = 1
                for j in range(d):
                    land[i, j] = x[j]
                break
            if r > far:
                break
    return land, st


@njit(cache=True)
def first_entry_rb_block(x0, n, alpha, rout, h, ramp0, far, maxsteps, rng, th, delta, qy, qw,
                         mode, tab_s, tab_logf, rcut):
    """first_entry_block for the stop set (1, rout] with the disk D=|y-th|<delta integrated out.

    Before every step from x the expected value of landing in D on that
    step, sum_j qw[j]*p_dt(qy[j]-x), is added to jsum; a realised landing
    in D gets status 2 and contributes nothing further. Steps taken farther
    than rcut from th skip the sum.
    """
    d = x0.shape[0]
    m = qw.shape[0]
    land = np.full((n, d), np.nan)
    st = np.full(n, -1, np.int64)
    jsum = np.zeros(n)
    x = np.empty(d)
    for i in range(n):
        for j in range(d):
            x[j] = x0[j]
        r = _norm(x)
        ramp = ramp0
        acc = 0.0
        for _ in range(maxsteps):
            dt = h * ramp * min(r, r - rout) ** alpha
            if _dist(x, th) < rcut:
                for k in range(m):
                    z2 = 0.0
                    for j in range(d):
                        z2 += (qy[k, j] - x[j]) ** 2
                    acc += qw[k] * math.exp(log_step_density(z2, dt, d, alpha, mode, tab_s, tab_logf))
            add_increment(x, alpha, dt, rng)
            r = _norm(x)
            ramp = min(1.0, ramp * 1.2)
            if r <= 1.0:
                st[i] = 0
                break
            if r <= rout:
                st[i] = 2 if _dist(x, th) < delta else 1
                for j in range(d):
                    land[i, j] = x[j]
                break
            if r > far:
                break
        jsum[i] = acc
    return land, st, jsum


@njit(cache=True)
def killed_stable_checkpoints(x0, n, alpha, rs, h, hmax, ramp0, checkpoints, rng):
    """Paths from x0 killed on entering the ball of radius rs.

    Steps are min(h*ramp*(r-rs)**alpha, hmax) and land exactly on each
    checkpoint. Returns radii at the checkpoints (0 once killed).
    """
    d = x0.shape[0]
    nc = checkpoints.shape[0]
    out = np.zeros((n, nc))
    x = np.empty(d)
    for i in range(n):
        for j in range(d):
            x[j] = x0[j]
        r = _norm(x)
        t = 0.0
        ramp = ramp0
        c = 0
        while c < nc:
            dt = h * ramp * (r - rs) ** alpha
            if dt > hmax:
                dt = hmax
            hit = t + dt >= checkpoints[c]
            if hit:
                dt = checkpoints[c] - t
            add_increment(x, alpha, dt, rng)
            t = checkpoints[c] if hit else t + dt
            ramp = min(1.0, ramp * 1.2)
            r = _norm(x)
            if r <= rs:
                break
            if hit:
                out[i, c] = r
                c += 1
    return out

"""Compiled per-sample sampler and evaluator.

Both routes share :func:`_run`.  Rows are kept sorted by current row sum
through an incremental swap scheme; each column runs a backward pass over
partial sums followed by a forward pass that samples or scores the column.
"""

import numba
import numpy as np

MODE_SAMPLE = 0
MODE_EVALUATE = 1

APPROX_CANFIELD = 1
APPROX_GREENHILL = 2


@numba.njit(cache=True, nogil=True)
def _div(a, b):
    if b == 0.0:
        return 0.0
    return a / b


@numba.njit(cache=True, nogil=True)
def _run(mode, gen, z, r0, c, rndx0, cconj0, approx, use_w, logw, use_v, wbar,
         logwbar, gvals, goffs, out_rows, out_cols, P1, P0, LO, HI, msg):
    """Sample (mode 0) or score ``z`` (mode 1) one matrix.

    Returns ``(alive, log_q, log_p, n_placed)`` where ``log_p`` is the sum of
    ``logw`` over the ones.  Column indices refer to the sampling order.
    """
    m = r0.shape[0]
    n = c.shape[0]
    r = r0.copy()
    rndx = rndx0.copy()
    irndx = np.empty(m, dtype=np.int64)
    for pos in range(m):
        irndx[rndx[pos]] = pos
    cconj = cconj0.copy()
    sel = np.empty(m, dtype=np.int64)

    count = 0
    for i in range(m):
        count += r[i]
    ccount2 = 0.0
    ccount2c = 0.0
    ccount3c = 0.0
    for jj in range(n):
        cv = float(c[jj])
        ccount2 += cv * cv
        ccount2c += cv * (cv - 1.0)
        ccount3c += cv * (cv - 1.0) * (cv - 2.0)
    rcount2c = 0.0
    for i in range(m):
        rv = float(r[i])
        rcount2c += rv * (rv - 1.0)

    log_q = 0.0
    log_p = 0.0
    placed = 0

    for jj in range(n):
        colval = c[jj]
        n_after = n - jj - 1
        if colval == 0:
            if mode == MODE_EVALUATE:
                for i in range(m):
                    if z[i, jj]:
                        return False, -np.inf, log_p, placed
            continue

        for ell in range(colval):
            cconj[ell] -= 1
        count_after = count - colval
        cv = float(colval)
        ccount2 -= cv * cv
        ccount2c -= cv * (cv - 1.0)
        ccount3c -= cv * (cv - 1.0) * (cv - 2.0)
        ca = float(count_after)

        expo = 0.0
        a1 = 0.0
        a2 = 0.0
        a3 = 0.0
        if approx == APPROX_CANFIELD:
            mn = float(m * n_after)
            if count_after > 0 and mn != ca:
                eta = mn / (ca * (mn - ca))
                nu = eta * (ccount2 - ca * ca / n_after)
                expo = eta * (1.0 - nu)
        else:
            a1 = (_div(ccount2c, 2 * ca**2) + _div(ccount2c, 2 * ca**3)
                  + _div(ccount2c**2, 4 * ca**4))
            a2 = -_div(ccount3c, 3 * ca**3) + _div(ccount2c**2, 2 * ca**4)
            a3 = (_div(ccount2c, 4 * ca**4) + _div(ccount3c, 2 * ca**4)
                  - _div(ccount2c**2, 2 * ca**5))

        # backward messages over partial sums, msg[s + 1] holds state s
        msg[colval] = 0.0
        msg[colval + 1] = 1.0
        msg[colval + 2] = 0.0
        lo = colval
        hi = colval
        cumsums = count
        cumconj = count_after
        dead = False
        for pos in range(m - 1, -1, -1):
            row = rndx[pos]
            val = r[row]
            if val == 0:
                p = 0.0
                q = 1.0
            elif val == n_after + 1:
                p = 1.0
                q = 0.0
                if use_v and wbar[row, jj] == 0.0:
                    p = 0.0
            else:
                fv = float(val)
                if approx == APPROX_CANFIELD:
                    lam = (np.log(fv) - np.log(n_after + 1.0 - fv)
                           + expo * (0.5 - fv + ca / m))
                else:
                    lam = np.log(fv) + (fv - 1.0) * (
                        2.0 * a1 + 3.0 * a2 * (fv - 2.0)
                        + 4.0 * a3 * (rcount2c - fv + 1.0))
                forced = False
                if use_v:
                    off = goffs[row]
                    den = gvals[jj + 1, off + val]
                    if den == -np.inf:
                        forced = True
                    elif wbar[row, jj] == 0.0:
                        lam = -np.inf
                    else:
                        lam += (logwbar[row, jj] + gvals[jj + 1, off + val - 1] - den
                                + np.log(n_after - fv + 1.0) - np.log(fv))
                if forced:
                    q = 0.0
                    p = 1.0 if wbar[row, jj] > 0.0 else 0.0
                elif lam == -np.inf:
                    p = 0.0
                    q = 1.0
                elif lam > 0.0:
                    e = np.exp(-lam)
                    p = 1.0 / (1.0 + e)
                    q = e / (1.0 + e)
                else:
                    e = np.exp(lam)
                    p = e / (1.0 + e)
                    q = 1.0 / (1.0 + e)

            cumsums -= val
            cumconj -= cconj[pos]
            nlo = lo - 1
            if cumsums - cumconj > nlo:
                nlo = cumsums - cumconj
            if nlo < 0:
                nlo = 0
            nhi = hi if hi < pos else pos
            tot = 0.0
            for s in range(nlo, nhi + 1):
                b0 = q * msg[s + 1]
                b1 = p * msg[s + 2]
                t = b0 + b1
                msg[s + 1] = t
                if t > 0.0:
                    P1[pos, s] = b1 / t
                    P0[pos, s] = b0 / t
                else:
                    P1[pos, s] = 0.0
                    P0[pos, s] = 0.0
                tot += t
            LO[pos] = nlo
            HI[pos] = nhi
            if not tot > 0.0:
                dead = True
                break
            msg[nlo] = 0.0
            msg[nhi + 2] = 0.0
            for s in range(nlo, nhi + 1):
                msg[s + 1] /= tot
            lo = nlo
            hi = nhi

        if dead:
            if mode == MODE_EVALUATE:
                return False, -np.inf, log_p, placed
            return False, log_q, log_p, placed

        # forward pass
        s = 0
        nsel = 0
        if mode == MODE_SAMPLE:
            for pos in range(m):
                if s == colval:
                    break
                pr = P1[pos, s]
                if gen.random() < pr:
                    log_q += np.log(pr)
                    sel[nsel] = rndx[pos]
                    nsel += 1
                    s += 1
                else:
                    log_q += np.log(P0[pos, s])
        else:
            for pos in range(m):
                row = rndx[pos]
                if s < LO[pos] or s > HI[pos]:
                    return False, -np.inf, log_p, placed
                if z[row, jj]:
                    pr = P1[pos, s]
                else:
                    pr = P0[pos, s]
                if not pr > 0.0:
                    return False, -np.inf, log_p, placed
                log_q += np.log(pr)
                if z[row, jj]:
                    sel[nsel] = row
                    nsel += 1
                    s += 1
            if s != colval:
                return False, -np.inf, log_p, placed

        for idx in range(nsel):
            row = sel[idx]
            val = r[row]
            r[row] = val - 1
            rcount2c -= 2.0 * (val - 1.0)
            if use_w:
                log_p += logw[row, jj]
            out_rows[placed] = row
            out_cols[placed] = jj
            placed += 1
        count = count_after

        # restore descending order of r along rndx
        for idx in range(nsel - 1, -1, -1):
            k = sel[idx]
            val = r[k]
            pk = irndx[k]
            p1 = pk + 1
            if p1 >= m or r[rndx[p1]] <= val:
                continue
            p1 += 1
            while p1 < m and r[rndx[p1]] > val:
                p1 += 1
            p1 -= 1
            other = rndx[p1]
            rndx[pk] = other
            rndx[p1] = k
            irndx[k] = p1
            irndx[other] = pk

    return True, log_q, log_p, placed


@numba.njit(cache=True, nogil=True)
def sample_many(gens, r0, c, rndx0, cconj0, approx, use_w, logw, use_v, wbar,
                logwbar, gvals, goffs, keep, out_alive, out_logq, out_logp,
                out_rows, out_cols):
    """Draw one matrix per generator; results go into the ``out_*`` arrays.

    ``out_rows`` / ``out_cols`` have shape ``(len(gens), d)`` and are filled
    only when ``keep`` is true.
    """
    m = r0.shape[0]
    cmax = 0
    for jj in range(c.shape[0]):
        if c[jj] > cmax:
            cmax = c[jj]
    d = 0
    for i in range(m):
        d += r0[i]
    P1 = np.zeros((m, cmax + 1))
    P0 = np.zeros((m, cmax + 1))
    LO = np.zeros(m, dtype=np.int64)
    HI = np.zeros(m, dtype=np.int64)
    msg = np.zeros(cmax + 3)
    rows = np.empty(d, dtype=np.int64)
    cols = np.empty(d, dtype=np.int64)
    z = np.zeros((1, 1), dtype=np.bool_)
    for t in range(len(gens)):
        alive, lq, lp, placed = _run(MODE_SAMPLE, gens[t], z, r0, c, rndx0, cconj0,
                                     approx, use_w, logw, use_v, wbar, logwbar,
                                     gvals, goffs, rows, cols, P1, P0, LO, HI, msg)
        out_alive[t] = alive
        out_logq[t] = lq
        out_logp[t] = lp
        if keep:
            for k in range(placed):
                out_rows[t, k] = rows[k]
                out_cols[t, k] = cols[k]
            for k in range(placed, d):
                out_rows[t, k] = -1
                out_cols[t, k] = -1


@numba.njit(cache=True, nogil=True)
def evaluate_one(gen, z, r0, c, rndx0, cconj0, approx, use_w, logw, use_v, wbar,
                 logwbar, gvals, goffs):
    m = r0.shape[0]
    cmax = 0
    for jj in range(c.shape[0]):
        if c[jj] > cmax:
            cmax = c[jj]
    d = 0
    for i in range(m):
        d += r0[i]
    P1 = np.zeros((m, cmax + 1))
    P0 = np.zeros((m, cmax + 1))
    LO = np.zeros(m, dtype=np.int64)
    HI = np.zeros(m, dtype=np.int64)
    msg = np.zeros(cmax + 3)
    rows = np.empty(d + 1, dtype=np.int64)
    cols = np.empty(d + 1, dtype=np.int64)
    return _run(MODE_EVALUATE, gen, z, r0, c, rndx0, cconj0, approx, use_w, logw,
                use_v, wbar, logwbar, gvals, goffs, rows, cols, P1, P0, LO, HI, msg)

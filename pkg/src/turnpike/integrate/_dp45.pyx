# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dormand-Prince 5(4) kernel.

Twin of `turnpike.integrate._dp45_py`; both expose `integrate_kernel`
with identical semantics and are expected to agree step-for-step (the
extension is built with -ffp-contract=off so the arithmetic matches the
interpreter bit for bit). Unlike the Python twin it only evaluates the
builtin zeta/g forms; callable kinds (code -1) are rejected.
"""

from libc.math cimport exp, fabs, pow, sqrt

__all__ = ["integrate_kernel", "BACKEND"]

BACKEND = "compiled"

cdef double _EXP_UNDERFLOW = 745.0
cdef double _SAFETY = 0.9
cdef double _MIN_FACTOR = 0.2
cdef double _MAX_FACTOR = 10.0
cdef double _ALPHA = 0.7 / 5.0
cdef double _BETA = 0.4 / 5.0

# Dormand-Prince 5(4) tableau
cdef double _A21 = 0.2
cdef double _A31 = 3.0 / 40.0, _A32 = 9.0 / 40.0
cdef double _A41 = 44.0 / 45.0, _A42 = -56.0 / 15.0, _A43 = 32.0 / 9.0
cdef double _A51 = 19372.0 / 6561.0, _A52 = -25360.0 / 2187.0
cdef double _A53 = 64448.0 / 6561.0, _A54 = -212.0 / 729.0
cdef double _A61 = 9017.0 / 3168.0, _A62 = -355.0 / 33.0
cdef double _A63 = 46732.0 / 5247.0, _A64 = 49.0 / 176.0
cdef double _A65 = -5103.0 / 18656.0
cdef double _B1 = 35.0 / 384.0, _B3 = 500.0 / 1113.0, _B4 = 125.0 / 192.0
cdef double _B5 = -2187.0 / 6784.0, _B6 = 11.0 / 84.0
cdef double _E1 = -71.0 / 57600.0, _E3 = 71.0 / 16695.0, _E4 = -71.0 / 1920.0
cdef double _E5 = 17253.0 / 339200.0, _E6 = -22.0 / 525.0, _E7 = 1.0 / 40.0

# dense-output coefficients: u(theta) = u0 + h * sum_j theta^(j+1) * (K^T P)_j
_P_ROWS = (
    (1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0),
    (0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0),
    (0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0),
    (0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0),
    (0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0,
     69997945.0 / 29380423.0),
)

cdef double _P[7][4]
cdef int _pi, _pj
for _pi in range(7):
    for _pj in range(4):
        _P[_pi][_pj] = _P_ROWS[_pi][_pj]

cdef enum:
    MAX_PARAMS = 32
    MAX_EVENTS = 16


cdef inline double _zeta_eval(int zk, const double* zp, int nzp, double x) noexcept nogil:
    cdef double acc
    cdef int i
    if zk == 0:
        return -1.0
    if zk == 1:
        return -1.0 + zp[0] * x
    acc = 0.0
    for i in range(nzp - 1, -1, -1):
        acc = acc * x + zp[i]
    return acc


cdef inline void _rhs(int mode, int two_n, const double* wlam, double eps,
                      int zk, const double* zp, int nzp, double g_const,
                      double sign, double x, double w,
                      double* dx_out, double* dw_out) noexcept nogil:
    cdef double acc = 0.0
    cdef double f, y, dx, dw
    cdef int i
    for i in range(two_n - 1, -1, -1):
        acc = acc * x + wlam[i]
    f = acc + pow(x, <double> two_n) * _zeta_eval(zk, zp, nzp, x)
    if mode == 0:  # (x, z), y = exp(-1/z)
        if w <= 0.0 or 1.0 / w > _EXP_UNDERFLOW:
            y = 0.0
        else:
            y = exp(-1.0 / w)
        dx = eps * f + (y * g_const if y != 0.0 else 0.0)
        dw = -x * w * w
    else:  # raw (x, y)
        dx = eps * f + w * g_const
        dw = -x * w
    dx_out[0] = sign * dx
    dw_out[0] = sign * dw


cdef inline double _ev_g(int kind, double value, double x, double w) noexcept nogil:
    if kind == 0:
        return x
    if kind == 2:
        return x - value
    return w - value  # kinds 1 and 3


cdef inline double _dense_eval(double base, double h, const double* q,
                               double th) noexcept nogil:
    return base + h * th * (q[0] + th * (q[1] + th * (q[2] + th * q[3])))


def integrate_kernel(int mode, int n, lam, double eps,
                     int zeta_kind, zeta_params, int g_kind, g_params,
                     zeta_fn, g_fn,
                     double x0, double w0, double t_max, double time_sign,
                     double rtol, double atol, double max_step,
                     double first_step,
                     ev_kind, ev_value, ev_dir, ev_term, double event_tol,
                     long max_steps):
    """Integrate from (x0, w0) at t = 0 until a terminal event or t_max.

    Returns a dict with nodes, per-step dense coefficients, localized
    events, counters, and a status string ('event', 't_end', 'max_steps',
    'step_underflow').
    """
    if zeta_kind < 0 or g_kind != 0:
        raise ValueError("compiled kernel requires builtin zeta/g forms")

    cdef int two_n = 2 * n
    cdef double wlam[MAX_PARAMS]
    cdef double zp[MAX_PARAMS]
    cdef int nzp = len(zeta_params)
    cdef int i, j, s
    if two_n > MAX_PARAMS or nzp > MAX_PARAMS:
        raise ValueError("too many polynomial coefficients for the compiled kernel")
    for i in range(two_n):
        wlam[i] = (<double> lam[i]) * pow(eps, <double> (two_n - i))
    for i in range(nzp):
        zp[i] = <double> zeta_params[i]
    cdef double g_const = <double> g_params[0]

    cdef int nev = len(ev_kind)
    cdef int evk[MAX_EVENTS]
    cdef double evv[MAX_EVENTS]
    cdef int evd[MAX_EVENTS]
    cdef int evt[MAX_EVENTS]
    if nev > MAX_EVENTS:
        raise ValueError("too many events for the compiled kernel")
    for i in range(nev):
        evk[i] = <int> ev_kind[i]
        evv[i] = <double> ev_value[i]
        evd[i] = <int> ev_dir[i]
        evt[i] = <int> ev_term[i]

    ts = [0.0]
    xs = [x0]
    ws = [w0]
    hs = []
    qs = []
    events = []
    cdef long n_rejected = 0
    cdef long n_rhs = 0
    cdef long n_steps = 0
    cdef double err_acc_x = 0.0
    cdef double err_acc_w = 0.0

    cdef double t = 0.0
    cdef double x = x0
    cdef double w = w0
    cdef double fx, fw
    _rhs(mode, two_n, wlam, eps, zeta_kind, zp, nzp, g_const, time_sign,
         x, w, &fx, &fw)
    n_rhs += 1

    # initial step selection (Hairer-style trial Euler step)
    cdef double h, sc_x, sc_w, d0, d1, d2, h0, h1, x1, w1, f1x, f1w
    if first_step > 0.0:
        h = first_step
    else:
        sc_x = atol + rtol * fabs(x)
        sc_w = atol + rtol * fabs(w)
        d0 = sqrt(0.5 * ((x / sc_x) ** 2 + (w / sc_w) ** 2))
        d1 = sqrt(0.5 * ((fx / sc_x) ** 2 + (fw / sc_w) ** 2))
        h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        x1 = x + h0 * fx
        w1 = w + h0 * fw
        _rhs(mode, two_n, wlam, eps, zeta_kind, zp, nzp, g_const, time_sign,
             x1, w1, &f1x, &f1w)
        n_rhs += 1
        d2 = sqrt(0.5 * (((f1x - fx) / sc_x) ** 2 + ((f1w - fw) / sc_w) ** 2)) / h0
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = pow(0.01 / max(d1, d2), 0.2)
        h = min(100.0 * h0, h1)
    h = min(h, max_step, t_max)

    cdef double err_prev = 1e-4
    cdef bint last_rejected = False
    status = "t_end"

    cdef double k1x, k1w, k2x, k2w, k3x, k3w, k4x, k4w
    cdef double k5x, k5w, k6x, k6w, k7x, k7w
    cdef double ax, aw, x_new, w_new, err_x, err_w, err_norm, factor, t_next
    cdef bint last_step
    cdef double qx[4]
    cdef double qw[4]
    cdef double kx[7]
    cdef double kw[7]
    cdef double hit_th[MAX_EVENTS]
    cdef int hit_ie[MAX_EVENTS]
    cdef double hit_x[MAX_EVENTS]
    cdef double hit_w[MAX_EVENTS]
    cdef int n_hits, kind, d, comp, it
    cdef double g0, g1, target, a, b, ga, m, gm, th, gv, dgv, nstep, tn
    cdef double x_ev, w_ev, t_ev, tmp_th, tmp_x, tmp_w
    cdef int tmp_ie, terminal_idx
    cdef double terminal_theta
    cdef bint have_terminal, crossed, up

    while True:
        if t >= t_max:
            status = "t_end"
            break
        if n_steps >= max_steps:
            status = "max_steps"
            break
        last_step = False
        if h >= t_max - t:
            h = t_max - t
            last_step = True
        if h < 1e-15 * max(fabs(t), 1.0):
            status = "step_underflow"
            break

        # stages (k1 = FSAL carry)
        k1x = fx
        k1w = fw
        ax = x + h * _A21 * k1x
        aw = w + h * _A21 * k1w
        _rhs(mode, two_n, wlam, eps, zeta_kind, zp, nzp, g_const, time_sign,
             ax, aw, &k2x, &k2w)
        ax = x + h * (_A31 * k1x + _A32 * k2x)
        aw = w + h * (_A31 * k1w + _A32 * k2w)
        _rhs(mode, two_n, wlam, eps, zeta_kind, zp, nzp, g_const, time_sign,
             ax, aw, &k3x, &k3w)
        ax = x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
        aw = w + h * (_A41 * k1w + _A42 * k2w + _A43 * k3w)
        _rhs(mode, two_n, wlam, eps, zeta_kind, zp, nzp, g_const, time_sign,
             ax, aw, &k4x, &k4w)
        ax = x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
        aw = w + h * (_A51 * k1w + _A52 * k2w + _A53 * k3w + _A54 * k4w)
        _rhs(mode, two_n, wlam, eps, zeta_kind, zp, nzp, g_const, time_sign,
             ax, aw, &k5x, &k5w)
        ax = x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x + _A65 * k5x)
        aw = w + h * (_A61 * k1w + _A62 * k2w + _A63 * k3w + _A64 * k4w + _A65 * k5w)
        _rhs(mode, two_n, wlam, eps, zeta_kind, zp, nzp, g_const, time_sign,
             ax, aw, &k6x, &k6w)
        x_new = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
        w_new = w + h * (_B1 * k1w + _B3 * k3w + _B4 * k4w + _B5 * k5w + _B6 * k6w)
        _rhs(mode, two_n, wlam, eps, zeta_kind, zp, nzp, g_const, time_sign,
             x_new, w_new, &k7x, &k7w)
        n_rhs += 6

        err_x = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x
                     + _E6 * k6x + _E7 * k7x)
        err_w = h * (_E1 * k1w + _E3 * k3w + _E4 * k4w + _E5 * k5w
                     + _E6 * k6w + _E7 * k7w)
        sc_x = atol + rtol * max(fabs(x), fabs(x_new))
        sc_w = atol + rtol * max(fabs(w), fabs(w_new))
        err_norm = sqrt(0.5 * ((err_x / sc_x) ** 2 + (err_w / sc_w) ** 2))

        # the transformed system lives on z >= 0
        if mode == 0 and w_new < 0.0:
            h *= 0.5
            n_rejected += 1
            last_rejected = True
            continue

        if err_norm > 1.0:
            factor = max(_MIN_FACTOR, _SAFETY * pow(err_norm, -_ALPHA))
            h *= factor
            n_rejected += 1
            last_rejected = True
            continue

        # accepted: dense coefficients Q = K^T P
        kx[0] = k1x; kx[1] = k2x; kx[2] = k3x; kx[3] = k4x
        kx[4] = k5x; kx[5] = k6x; kx[6] = k7x
        kw[0] = k1w; kw[1] = k2w; kw[2] = k3w; kw[3] = k4w
        kw[4] = k5w; kw[5] = k6w; kw[6] = k7w
        for j in range(4):
            qx[j] = 0.0
            qw[j] = 0.0
        for s in range(7):
            for j in range(4):
                qx[j] += kx[s] * _P[s][j]
                qw[j] += kw[s] * _P[s][j]

        # event scan over this step
        have_terminal = False
        terminal_theta = 0.0
        terminal_idx = -1
        n_hits = 0
        for i in range(nev):
            kind = evk[i]
            g0 = _ev_g(kind, evv[i], x, w)
            g1 = _ev_g(kind, evv[i], x_new, w_new)
            if g0 == 0.0:
                continue
            crossed = False
            if g1 == 0.0:
                crossed = True
            elif (g0 < 0.0) != (g1 < 0.0):
                crossed = True
            if not crossed:
                continue
            up = g0 < 0.0
            d = evd[i]
            if d > 0 and not up:
                continue
            if d < 0 and up:
                continue
            comp = 0 if (kind == 0 or kind == 2) else 1
            target = 0.0 if kind == 0 else evv[i]
            # bisection on the dense polynomial, to event_tol in local theta
            a = 0.0
            b = 1.0
            ga = g0
            for it in range(60):
                m = 0.5 * (a + b)
                if comp == 0:
                    gm = _dense_eval(x, h, qx, m) - target
                else:
                    gm = _dense_eval(w, h, qw, m) - target
                if gm == 0.0:
                    a = m
                    b = m
                    break
                if (ga < 0.0) != (gm < 0.0):
                    b = m
                else:
                    a = m
                    ga = gm
                if b - a < event_tol:
                    break
            th = 0.5 * (a + b)
            # Newton polish on the quartic
            for it in range(4):
                if comp == 0:
                    gv = _dense_eval(x, h, qx, th) - target
                    dgv = h * (qx[0] + th * (2.0 * qx[1] + th * (3.0 * qx[2]
                               + th * 4.0 * qx[3])))
                else:
                    gv = _dense_eval(w, h, qw, th) - target
                    dgv = h * (qw[0] + th * (2.0 * qw[1] + th * (3.0 * qw[2]
                               + th * 4.0 * qw[3])))
                if dgv == 0.0:
                    break
                nstep = gv / dgv
                tn = th - nstep
                if tn < 0.0 or tn > 1.0:
                    break
                th = tn
                if fabs(nstep) < 1e-17:
                    break
            x_ev = _dense_eval(x, h, qx, th)
            w_ev = _dense_eval(w, h, qw, th)
            if kind == 1 and not (x_ev < 0.0):
                continue  # return-section crossing requires x < 0
            hit_th[n_hits] = th
            hit_ie[n_hits] = i
            hit_x[n_hits] = x_ev
            hit_w[n_hits] = w_ev
            n_hits += 1

        if n_hits > 0:
            # insertion sort by (theta, event index), as the tuple sort does
            for i in range(1, n_hits):
                tmp_th = hit_th[i]
                tmp_ie = hit_ie[i]
                tmp_x = hit_x[i]
                tmp_w = hit_w[i]
                j = i - 1
                while j >= 0 and (hit_th[j] > tmp_th or
                                  (hit_th[j] == tmp_th and hit_ie[j] > tmp_ie)):
                    hit_th[j + 1] = hit_th[j]
                    hit_ie[j + 1] = hit_ie[j]
                    hit_x[j + 1] = hit_x[j]
                    hit_w[j + 1] = hit_w[j]
                    j -= 1
                hit_th[j + 1] = tmp_th
                hit_ie[j + 1] = tmp_ie
                hit_x[j + 1] = tmp_x
                hit_w[j + 1] = tmp_w
            for i in range(n_hits):
                if have_terminal and hit_th[i] > terminal_theta:
                    break
                events.append((hit_ie[i], t + hit_th[i] * h, hit_x[i], hit_w[i]))
                if evt[hit_ie[i]]:
                    have_terminal = True
                    terminal_theta = hit_th[i]
                    terminal_idx = hit_ie[i]
                    break

        if have_terminal:
            t_ev = t + terminal_theta * h
            x_ev = _dense_eval(x, h, qx, terminal_theta)
            w_ev = _dense_eval(w, h, qw, terminal_theta)
            ts.append(t_ev)
            xs.append(x_ev)
            ws.append(w_ev)
            hs.append(h)
            qs.append((qx[0], qx[1], qx[2], qx[3], qw[0], qw[1], qw[2], qw[3]))
            err_acc_x += fabs(err_x)
            err_acc_w += fabs(err_w)
            n_steps += 1
            status = "event"
            break

        t_next = t_max if last_step else t + h
        ts.append(t_next)
        xs.append(x_new)
        ws.append(w_new)
        hs.append(h)
        qs.append((qx[0], qx[1], qx[2], qx[3], qw[0], qw[1], qw[2], qw[3]))
        err_acc_x += fabs(err_x)
        err_acc_w += fabs(err_w)
        n_steps += 1

        # PI controller
        if err_norm == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = _SAFETY * pow(err_norm, -_ALPHA) * pow(err_prev, _BETA)
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        if last_rejected:
            factor = min(factor, 1.0)
        t = t_next
        x = x_new
        w = w_new
        fx = k7x
        fw = k7w
        h = min(h * factor, max_step)
        err_prev = max(err_norm, 1e-10)
        last_rejected = False

    return {
        "status": status,
        "t": ts,
        "x": xs,
        "w": ws,
        "h": hs,
        "q": qs,
        "events": events,
        "n_steps": n_steps,
        "n_rejected": n_rejected,
        "n_rhs": n_rhs,
        "err_accum": (err_acc_x, err_acc_w),
        # wraparound is disabled in this module: index from the front
        "t_final": ts[len(ts) - 1],
        "x_final": xs[len(xs) - 1],
        "w_final": ws[len(ws) - 1],
    }

"""Numba kernels for the shallow-water solver.

Scheme: first-order finite volume with a Rusanov (local Lax-Friedrichs)
interface flux on hydrostatically reconstructed states.  The interface
pressure is carried as an imbalance term p = g/4 (hR*^2 - hL*^2) added to
the left cell's flux and subtracted from the right cell's, which is
algebraically the classical hydrostatic-reconstruction source splitting
but makes a lake at rest an exact floating-point fixed point.

Friction is a semi-implicit Strickler source (never reverses momentum).
Walls are mirror ghost cells; the outlet edge imposes a stage through a
ghost column; inflow enters as a volume source over the inlet cells.
"""

import numpy as np
from numba import njit

G = 9.81

STATUS_OK = 0
STATUS_NONFINITE = 1


@njit(cache=True, nogil=True)
def max_wave_speed(h, qx, qy, eps):
    """Largest |u| + sqrt(g h) over wet cells; 0.0 if everything is dry."""
    ny, nx = h.shape
    s = 0.0
    for j in range(ny):
        for i in range(nx):
            hc = h[j, i]
            if hc >= eps:
                u = qx[j, i] / hc
                v = qy[j, i] / hc
                c = np.sqrt(u * u + v * v) + np.sqrt(G * hc)
                if c > s:
                    s = c
    return s


@njit(cache=True, nogil=True)
def _fill_ghosts(h, qx, qy, z, hp, qxp, qyp, zp, outlet_j, outlet_stage):
    ny, nx = h.shape
    hp[1:ny + 1, 1:nx + 1] = h
    qxp[1:ny + 1, 1:nx + 1] = qx
    qyp[1:ny + 1, 1:nx + 1] = qy
    zp[1:ny + 1, 1:nx + 1] = z
    # mirror walls (normal momentum reversed)
    for j in range(ny):
        hp[j + 1, 0] = h[j, 0]
        zp[j + 1, 0] = z[j, 0]
        qxp[j + 1, 0] = -qx[j, 0]
        qyp[j + 1, 0] = qy[j, 0]
        hp[j + 1, nx + 1] = h[j, nx - 1]
        zp[j + 1, nx + 1] = z[j, nx - 1]
        qxp[j + 1, nx + 1] = -qx[j, nx - 1]
        qyp[j + 1, nx + 1] = qy[j, nx - 1]
    for i in range(nx):
        hp[0, i + 1] = h[0, i]
        zp[0, i + 1] = z[0, i]
        qxp[0, i + 1] = qx[0, i]
        qyp[0, i + 1] = -qy[0, i]
        hp[ny + 1, i + 1] = h[ny - 1, i]
        zp[ny + 1, i + 1] = z[ny - 1, i]
        qxp[ny + 1, i + 1] = qx[ny - 1, i]
        qyp[ny + 1, i + 1] = -qy[ny - 1, i]
    # outlet ghost column (east edge): imposed stage, zero-gradient velocity
    for n in range(outlet_j.size):
        j = outlet_j[n]
        zc = z[j, nx - 1]
        hc = h[j, nx - 1]
        hg = outlet_stage - zc
        if hg < 0.0:
            hg = 0.0
        hp[j + 1, nx + 1] = hg
        zp[j + 1, nx + 1] = zc
        if hc > 0.0:
            qxp[j + 1, nx + 1] = hg * (qx[j, nx - 1] / hc)
        else:
            qxp[j + 1, nx + 1] = 0.0
        qyp[j + 1, nx + 1] = 0.0


@njit(cache=True, nogil=True)
def single_step(h, qx, qy, z, kcell, dx, dy, eps, dt,
                inlet_j, inlet_i, inflow_rate,
                outlet_j, outlet_stage,
                hp, qxp, qyp, zp, dh, dqx, dqy):
    """One explicit step of size dt.  Returns (outflow volume, status, j, i).

    ``inflow_rate`` is the depth source rate (m/s) added to each inlet cell;
    ``outlet_stage`` the water-surface elevation imposed in the outlet ghosts.
    Work arrays hp..dqy are provided by the caller and overwritten.
    """
    ny, nx = h.shape
    _fill_ghosts(h, qx, qy, z, hp, qxp, qyp, zp, outlet_j, outlet_stage)
    dh[:, :] = 0.0
    dqx[:, :] = 0.0
    dqy[:, :] = 0.0
    rx = dt / dx
    ry = dt / dy
    vol_out = 0.0

    # x-direction interfaces between padded columns i-1 and i
    for j in range(1, ny + 1):
        for i in range(1, nx + 2):
            hl = hp[j, i - 1]
            hr = hp[j, i]
            if hl < eps and hr < eps:
                continue
            zl = zp[j, i - 1]
            zr = zp[j, i]
            ul = qxp[j, i - 1] / hl if hl >= eps else 0.0
            vl = qyp[j, i - 1] / hl if hl >= eps else 0.0
            ur = qxp[j, i] / hr if hr >= eps else 0.0
            vr = qyp[j, i] / hr if hr >= eps else 0.0
            zf = zl if zl > zr else zr
            hls = zl + hl - zf
            if hls < 0.0:
                hls = 0.0
            hrs = zr + hr - zf
            if hrs < 0.0:
                hrs = 0.0
            al = abs(ul) + np.sqrt(G * hls)
            ar = abs(ur) + np.sqrt(G * hrs)
            a = al if al > ar else ar
            qls = hls * ul
            qrs = hrs * ur
            fmass = 0.5 * (qls + qrs) - 0.5 * a * (hrs - hls)
            fadv = 0.5 * (qls * ul + qrs * ur) - 0.5 * a * (qrs - qls)
            p = 0.25 * G * (hrs * hrs - hls * hls)
            ftr = 0.5 * (qls * vl + qrs * vr) - 0.5 * a * (hrs * vr - hls * vl)
            if i >= 2:  # left cell is interior
                dh[j - 1, i - 2] -= rx * fmass
                dqx[j - 1, i - 2] -= rx * (fadv + p)
                dqy[j - 1, i - 2] -= rx * ftr
            if i <= nx:  # right cell is interior
                dh[j - 1, i - 1] += rx * fmass
                dqx[j - 1, i - 1] += rx * (fadv - p)
                dqy[j - 1, i - 1] += rx * ftr
            elif fmass != 0.0:  # east boundary face: only open at outlet ghosts
                vol_out += fmass * dy * dt

    # y-direction interfaces between padded rows j-1 and j
    for j in range(1, ny + 2):
        for i in range(1, nx + 1):
            hl = hp[j - 1, i]
            hr = hp[j, i]
            if hl < eps and hr < eps:
                continue
            zl = zp[j - 1, i]
            zr = zp[j, i]
            ul = qyp[j - 1, i] / hl if hl >= eps else 0.0  # normal velocity
            vl = qxp[j - 1, i] / hl if hl >= eps else 0.0  # transverse
            ur = qyp[j, i] / hr if hr >= eps else 0.0
            vr = qxp[j, i] / hr if hr >= eps else 0.0
            zf = zl if zl > zr else zr
            hls = zl + hl - zf
            if hls < 0.0:
                hls = 0.0
            hrs = zr + hr - zf
            if hrs < 0.0:
                hrs = 0.0
            al = abs(ul) + np.sqrt(G * hls)
            ar = abs(ur) + np.sqrt(G * hrs)
            a = al if al > ar else ar
            qls = hls * ul
            qrs = hrs * ur
            fmass = 0.5 * (qls + qrs) - 0.5 * a * (hrs - hls)
            fadv = 0.5 * (qls * ul + qrs * ur) - 0.5 * a * (qrs - qls)
            p = 0.25 * G * (hrs * hrs - hls * hls)
            ftr = 0.5 * (qls * vl + qrs * vr) - 0.5 * a * (hrs * vr - hls * vl)
            if j >= 2:
                dh[j - 2, i - 1] -= ry * fmass
                dqy[j - 2, i - 1] -= ry * (fadv + p)
                dqx[j - 2, i - 1] -= ry * ftr
            if j <= ny:
                dh[j - 1, i - 1] += ry * fmass
                dqy[j - 1, i - 1] += ry * (fadv - p)
                dqx[j - 1, i - 1] += ry * ftr

    vol_in = 0.0
    for n in range(inlet_j.size):
        dh[inlet_j[n], inlet_i[n]] += dt * inflow_rate
        vol_in += dt * inflow_rate * dx * dy

    status = STATUS_OK
    bad_j = -1
    bad_i = -1
    for j in range(ny):
        for i in range(nx):
            hn = h[j, i] + dh[j, i]
            if hn < 0.0:
                hn = 0.0
            qxn = qx[j, i] + dqx[j, i]
            qyn = qy[j, i] + dqy[j, i]
            if hn < eps:
                qxn = 0.0
                qyn = 0.0
            else:
                kc = kcell[j, i]
                qmag = np.sqrt(qxn * qxn + qyn * qyn)
                if qmag > 0.0:
                    denom = 1.0 + dt * G * qmag / (kc * kc * hn ** 2.3333333333333335)
                    qxn = qxn / denom
                    qyn = qyn / denom
            if status == STATUS_OK and not (np.isfinite(hn) and np.isfinite(qxn) and np.isfinite(qyn)):
                status = STATUS_NONFINITE
                bad_j = j
                bad_i = i
            h[j, i] = hn
            qx[j, i] = qxn
            qy[j, i] = qyn
    return vol_in, vol_out, status, bad_j, bad_i


@njit(cache=True, nogil=True)
def advance(h, qx, qy, z, kcell, dx, dy, eps, cfl, dt_max,
            t, t_target,
            inlet_j, inlet_i, n_inlet_q0, n_inlet_slope,
            outlet_j, outlet_mode, rating_a, rating_b, rating_z0, fixed_stage,
            hp, qxp, qyp, zp, dh, dqx, dqy):
    """March from t to t_target with adaptive CFL steps, landing exactly.

    Inflow within the call is linear in time: Q(t)/n_inlet = q0 + slope*(t-t0)
    (already divided by the inlet cell count).  Returns
    (t, vol_in, vol_out, n_steps, status, bad_j, bad_i, bad_t).
    """
    ny, nx = h.shape
    t0 = t
    vol_in = 0.0
    vol_out = 0.0
    nsteps = 0
    cell_area = dx * dy
    dmin = dx if dx < dy else dy
    while t < t_target:
        s = max_wave_speed(h, qx, qy, eps)
        dt = dt_max if s <= 0.0 else min(cfl * dmin / s, dt_max)
        landing = t + dt >= t_target
        if landing:
            dt = t_target - t
        # outlet stage for this step
        if outlet_mode == 1:
            stage = fixed_stage
        else:
            qout = 0.0
            for n in range(outlet_j.size):
                qout += qx[outlet_j[n], nx - 1] * dy
            if qout < 0.0:
                qout = 0.0
            stage = rating_z0 + rating_a * qout ** rating_b
        tm = t + 0.5 * dt
        q_in = n_inlet_q0 + n_inlet_slope * (tm - t0)
        rate = q_in / cell_area
        vi, vo, status, bj, bi = single_step(
            h, qx, qy, z, kcell, dx, dy, eps, dt,
            inlet_j, inlet_i, rate, outlet_j, stage,
            hp, qxp, qyp, zp, dh, dqx, dqy)
        t = t_target if landing else t + dt
        vol_in += vi
        vol_out += vo
        nsteps += 1
        if status != STATUS_OK:
            return t, vol_in, vol_out, nsteps, status, bj, bi, t
    return t, vol_in, vol_out, nsteps, STATUS_OK, -1, -1, t

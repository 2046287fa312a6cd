"""Method of moving asymptotes with the primal-dual interior point subproblem solver

The subproblem is

    min  f0(x) + a0 z + Σ (c_i y_i + d_i y_i²/2)
    s.t. f_i(x) - a_i z - y_i <= 0,  xmin <= x <= xmax,  y, z >= 0

with every f replaced by its convex moving-asymptote approximation.
"""
from numpy import ones, zeros, maximum, minimum, concatenate, diag, outer
from numpy.linalg import norm, solve
import numpy as np

from .tools import NumericalError, logger

ASYINIT = 0.5
ASYINCR = 1.2
ASYDECR = 0.7
ALBEFA = 0.1
RAA0 = 1e-5
EPSIMIN = 1e-7


def mmasub(m, n, iteration, xval, xmin, xmax, xold1, xold2, f0val, df0dx, fval, dfdx,
           low, upp, a0, a, c, d, move=0.5, raa0=RAA0, raa=None):
    """mmasub: one MMA step

    :param iteration: 1 on the first call, asymptotes are initialised for the first two
    :param move: move limit as a fraction of xmax - xmin
    :param raa0: curvature term of the objective approximation
    :param raa: curvature terms of the m constraint approximations, RAA0 each by default
    :returns: xmma, ymma, zmma, lam, xsi, eta, mu, zet, s, low, upp
    """
    raa = RAA0*ones(m) if raa is None else np.asarray(raa, dtype=float)
    een = ones(n)
    span = xmax-xmin
    if iteration <= 2:
        low = xval-ASYINIT*span
        upp = xval+ASYINIT*span
    else:
        zzz = (xval-xold1)*(xold1-xold2)
        factor = een.copy()
        factor[zzz > 0] = ASYINCR
        factor[zzz < 0] = ASYDECR
        low = xval-factor*(xold1-low)
        upp = xval+factor*(upp-xold1)
        low = minimum(maximum(low, xval-10*span), xval-0.01*span)
        upp = maximum(minimum(upp, xval+10*span), xval+0.01*span)

    alfa = maximum(maximum(low+ALBEFA*(xval-low), xval-move*span), xmin)
    beta = minimum(minimum(upp-ALBEFA*(upp-xval), xval+move*span), xmax)

    xmamiinv = een/maximum(span, 1e-5*een)
    ux2 = (upp-xval)**2
    xl2 = (xval-low)**2
    uxinv = een/(upp-xval)
    xlinv = een/(xval-low)

    p0 = maximum(df0dx, 0)
    q0 = maximum(-df0dx, 0)
    pq0 = 0.001*(p0+q0)+raa0*xmamiinv
    p0 = (p0+pq0)*ux2
    q0 = (q0+pq0)*xl2

    P = maximum(dfdx, 0)
    Q = maximum(-dfdx, 0)
    PQ = 0.001*(P+Q)+outer(raa, xmamiinv)
    P = (P+PQ)*ux2
    Q = (Q+PQ)*xl2
    b = P @ uxinv+Q @ xlinv-fval

    xmma, ymma, zmma, lam, xsi, eta, mu, zet, s = subsolv(m, n, EPSIMIN, low, upp, alfa, beta,
                                                          p0, q0, P, Q, a0, a, b, c, d)
    return xmma, ymma, zmma, lam, xsi, eta, mu, zet, s, low, upp


def _subsolv_residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi, low, upp, alfa, beta,
                      p0, q0, P, Q, a0, a, b, c, d):
    ux1 = upp-x
    xl1 = x-low
    plam = p0+P.T @ lam
    qlam = q0+Q.T @ lam
    gvec = P @ (1/ux1)+Q @ (1/xl1)
    dpsidx = plam/ux1**2-qlam/xl1**2
    return concatenate([dpsidx-xsi+eta,
                        c+d*y-mu-lam,
                        [a0-zet-a @ lam],
                        gvec-a*z-y+s-b,
                        xsi*(x-alfa)-epsi,
                        eta*(beta-x)-epsi,
                        mu*y-epsi,
                        [zet*z-epsi],
                        lam*s-epsi])


def subsolv(m, n, epsimin, low, upp, alfa, beta, p0, q0, P, Q, a0, a, b, c, d):
    """subsolv: primal-dual Newton method on the MMA subproblem, barrier driven to epsimin"""
    een = ones(n)
    eem = ones(m)
    epsi = 1.
    x = 0.5*(alfa+beta)
    y = eem.copy()
    z = 1.
    lam = eem.copy()
    xsi = maximum(een/(x-alfa), een)
    eta = maximum(een/(beta-x), een)
    mu = maximum(eem, 0.5*c)
    zet = 1.
    s = eem.copy()

    def residual(x, y, z, lam, xsi, eta, mu, zet, s):
        return _subsolv_residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi, low, upp, alfa, beta,
                                 p0, q0, P, Q, a0, a, b, c, d)

    while epsi > epsimin:
        res = residual(x, y, z, lam, xsi, eta, mu, zet, s)
        residunorm = norm(res)
        residumax = np.max(np.abs(res))
        ittt = 0
        while residumax > 0.9*epsi and ittt < 200:
            ittt += 1
            ux1 = upp-x
            xl1 = x-low
            ux2, xl2 = ux1**2, xl1**2
            plam = p0+P.T @ lam
            qlam = q0+Q.T @ lam
            gvec = P @ (1/ux1)+Q @ (1/xl1)
            GG = P/ux2-Q/xl2
            dpsidx = plam/ux2-qlam/xl2
            delx = dpsidx-epsi/(x-alfa)+epsi/(beta-x)
            dely = c+d*y-lam-epsi/y
            delz = a0-a @ lam-epsi/z
            dellam = gvec-a*z-y-b+epsi/lam
            diagx = 2*(plam/(ux1*ux2)+qlam/(xl1*xl2))+xsi/(x-alfa)+eta/(beta-x)
            diagy = d+mu/y
            diaglamyi = s/lam+1/diagy

            if m < n:
                blam = dellam+dely/diagy-GG @ (delx/diagx)
                AA = zeros((m+1, m+1))
                AA[:m, :m] = diag(diaglamyi)+(GG/diagx) @ GG.T
                AA[:m, m] = a
                AA[m, :m] = a
                AA[m, m] = -zet/z
                solut = solve(AA, concatenate([blam, [delz]]))
                dlam, dz = solut[:m], solut[m]
                dx = -delx/diagx-(GG.T @ dlam)/diagx
            else:
                dellamyi = dellam+dely/diagy
                AA = zeros((n+1, n+1))
                AA[:n, :n] = diag(diagx)+(GG.T/diaglamyi) @ GG
                axz = -GG.T @ (a/diaglamyi)
                AA[:n, n] = axz
                AA[n, :n] = axz
                AA[n, n] = zet/z+a @ (a/diaglamyi)
                bx = delx+GG.T @ (dellamyi/diaglamyi)
                bz = delz-a @ (dellamyi/diaglamyi)
                solut = solve(AA, -concatenate([bx, [bz]]))
                dx, dz = solut[:n], solut[n]
                dlam = (GG @ dx)/diaglamyi-dz*(a/diaglamyi)+dellamyi/diaglamyi

            dy = -dely/diagy+dlam/diagy
            dxsi = -xsi+epsi/(x-alfa)-(xsi*dx)/(x-alfa)
            deta = -eta+epsi/(beta-x)+(eta*dx)/(beta-x)
            dmu = -mu+epsi/y-(mu*dy)/y
            dzet = -zet+epsi/z-zet*dz/z
            ds = -s+epsi/lam-(s*dlam)/lam

            xx = concatenate([y, [z], lam, xsi, eta, mu, [zet], s])
            dxx = concatenate([dy, [dz], dlam, dxsi, deta, dmu, [dzet], ds])
            stmxx = np.max(-1.01*dxx/xx)
            stmalfa = np.max(-1.01*dx/(x-alfa))
            stmbeta = np.max(1.01*dx/(beta-x))
            steg = 1/max(stmalfa, stmbeta, stmxx, 1.)

            old = (x, y, z, lam, xsi, eta, mu, zet, s)
            step = (dx, dy, dz, dlam, dxsi, deta, dmu, dzet, ds)
            itto = 0
            resinew = 2*residunorm
            while resinew > residunorm and itto < 50:
                itto += 1
                x, y, z, lam, xsi, eta, mu, zet, s = [o+steg*δ for o, δ in zip(old, step)]
                res = residual(x, y, z, lam, xsi, eta, mu, zet, s)
                resinew = norm(res)
                steg = steg/2
            residunorm = resinew
            residumax = np.max(np.abs(res))
        epsi = 0.1*epsi

    if not np.all(np.isfinite(x)):
        raise NumericalError('MMA subproblem diverged')
    return x, y, z, lam, xsi, eta, mu, zet, s


def kktcheck(m, n, x, y, z, lam, xsi, eta, mu, zet, s, xmin, xmax, df0dx, fval, dfdx, a0, a, c, d):
    """kktcheck: residual norm of the KKT conditions of the original problem at a candidate point"""
    res = concatenate([df0dx+dfdx.T @ lam-xsi+eta,
                       c+d*y-mu-lam,
                       [a0-zet-a @ lam],
                       fval-a*z-y+s,
                       xsi*(x-xmin),
                       eta*(xmax-x),
                       mu*y,
                       [zet*z],
                       lam*s])
    return norm(res), np.max(np.abs(res))


class MMA:
    """MMA: moving asymptote state carried between iterations

    The move limit acts on the subproblem box around every iterate, the
    asymptotes are sized from the full variable range. Every approximation
    gets a curvature term of a tenth of its mean gradient magnitude, floored
    at RAA0.

    :param n: number of design variables
    :param m: number of constraints
    :param move: external move limit, largest change of a variable per step as a fraction of xmax - xmin
    """
    def __init__(self, n, m, move=0.1, a0=1., a=None, c=None, d=None):
        self.n = n
        self.m = m
        self.move = move
        self.a0 = a0
        self.a = zeros(m) if a is None else np.asarray(a, dtype=float)
        self.c = 1000*ones(m) if c is None else np.asarray(c, dtype=float)
        self.d = ones(m) if d is None else np.asarray(d, dtype=float)
        self.iter = 0
        self.xold1 = None
        self.xold2 = None
        self.low = None
        self.upp = None
        self.y = zeros(m)
        self.z = 0.
        self.lam = zeros(m)
        self.duals = None
        self.bounds = None
        self.shift = None
        self.kkt = None

    def curvature(self, df0dx, dfdx, span):
        """curvature: raa0 and raa, 0.1/n Σ|∂f/∂x| (xmax - xmin) per function"""
        raa0 = max(0.1*np.mean(np.abs(df0dx)*span), RAA0)
        raa = maximum(0.1*np.mean(np.abs(dfdx)*span, axis=1), RAA0)
        return raa0, raa

    def update(self, x, f0val, df0dx, fval, dfdx, xmin=0., xmax=1.):
        """update: one step from x, returns the new iterate"""
        x = np.asarray(x, dtype=float)
        assert x.shape == (self.n,)
        df0dx = np.asarray(df0dx, dtype=float)
        dfdx = np.asarray(dfdx, dtype=float).reshape(self.m, self.n)
        self.iter += 1
        if self.xold1 is None:
            self.xold1 = x.copy()
            self.xold2 = x.copy()
        xmin = xmin*ones(self.n)
        xmax = xmax*ones(self.n)
        span = xmax-xmin
        raa0, raa = self.curvature(df0dx, dfdx, span)
        xnew, y, z, lam, xsi, eta, mu, zet, s, low, upp = mmasub(
            self.m, self.n, self.iter, x, xmin, xmax, self.xold1, self.xold2,
            f0val, df0dx, np.asarray(fval, dtype=float), dfdx, self.low, self.upp,
            self.a0, self.a, self.c, self.d, move=self.move, raa0=raa0, raa=raa)
        self.xold2 = self.xold1
        self.xold1 = x.copy()
        self.low, self.upp = low, upp
        self.y, self.z, self.lam = y, z, lam
        self.duals = (xsi, eta, mu, zet, s)
        self.bounds = (xmin, xmax)
        return xnew

    def kkt_residual(self, x, df0dx, fval, dfdx):
        """kkt_residual: KKT norm of the last step's multipliers at the newly evaluated point"""
        xsi, eta, mu, zet, s = self.duals
        lo, hi = self.bounds
        return kktcheck(self.m, self.n, np.asarray(x, dtype=float), self.y, self.z, self.lam, xsi, eta, mu, zet, s,
                        lo, hi, np.asarray(df0dx, dtype=float), np.asarray(fval, dtype=float),
                        np.asarray(dfdx, dtype=float), self.a0, self.a, self.c, self.d)


def minmax_update(x, objectives, constraints, mma, active=None):
    """minmax_update: MMA step on min max_l f_l(x) subject to g_j(x) <= 0

    The objectives enter as f_l - z <= 0. They are shifted by a positive
    constant since z is bounded below by zero. The shift is set on the first
    call and raised only when an objective would drop below zero.

    :param objectives: list of (value, gradient) pairs
    :param constraints: list of (value, gradient) pairs
    :param mma: MMA with m = len(objectives)+len(constraints) and a_i = 1 on the objective rows
    :param active: mask of design variables, the rest are returned unchanged
    """
    x = np.asarray(x, dtype=float)
    active = np.ones(len(x), dtype=bool) if active is None else np.asarray(active, dtype=bool)
    f = np.array([v for v, _ in objectives], dtype=float)
    if mma.shift is None or np.min(f)+mma.shift <= 0:
        mma.shift = 2*np.max(np.abs(f))+1.
    fval = concatenate([f+mma.shift, [v for v, _ in constraints]])
    dfdx = np.array([np.asarray(g)[active] for _, g in objectives+constraints])
    xa = x[active]
    df0dx = zeros(len(xa))
    if mma.duals is not None:
        mma.kkt, _ = mma.kkt_residual(xa, df0dx, fval, dfdx)
        logger.debug(f'MMA iteration {mma.iter}: KKT residual {mma.kkt:.3e}')
    xnew = x.copy()
    xnew[active] = mma.update(xa, 0., df0dx, fval, dfdx)
    if np.any(mma.y > 1e-6):
        logger.warning(f'MMA subproblem infeasible, slack {mma.y.round(8).tolist()} '
                       f'for constraint values {fval.round(8).tolist()}')
    return xnew


def minmax_mma(n, n_objectives, n_constraints, move=0.1):
    """MMA set up for minmax_update: a0 = 1, a = 1 on objective rows, c = 1000, d = 1"""
    a = concatenate([ones(n_objectives), zeros(n_constraints)])
    return MMA(n, n_objectives+n_constraints, move=move, a=a)

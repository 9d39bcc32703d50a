# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: erfc, coefficient-program evaluation, the Thomas
solve, the fused implicit time march and the union-grid comparison.

Same algorithms as kernels.py_backend; that module is the reference
these are tested against.
"""

import numpy as np

from cornerlayer.expr import EvalError
from cornerlayer.kernels.py_backend import PivotError

from libc.math cimport cos, exp, fabs, log, pow, sin, sqrt

cdef double SQRT_PI = 1.7724538509055160273
cdef double SERIES_CUT = 1.3
cdef double TAIL = 1e-17
cdef double EXP_FLUSH = -745.0

# Opcodes; keep in sync with cornerlayer.expr.
cdef int OP_CONST = 0
cdef int OP_VAR_X = 1
cdef int OP_VAR_T = 2
cdef int OP_ADD = 3
cdef int OP_SUB = 4
cdef int OP_MUL = 5
cdef int OP_DIV = 6
cdef int OP_NEG = 7
cdef int OP_POW = 8
cdef int OP_EXP = 9
cdef int OP_SIN = 10
cdef int OP_COS = 11
cdef int OP_SQRT = 12
cdef int OP_LN = 13


cdef double erfc_series_c(double z) noexcept nogil:
    cdef double z2 = 2.0 * z * z
    cdef double term = 1.0
    cdef double s = 1.0
    cdef int n
    for n in range(1, 200):
        term *= z2 / (2 * n + 1)
        s += term
        if term <= TAIL * s:
            break
    return 1.0 - (2.0 / SQRT_PI) * z * exp(-z * z) * s


cdef double erfc_cf_c(double z) noexcept nogil:
    cdef double tiny = 1e-300
    cdef double f = z
    cdef double c = z
    cdef double d = 0.0
    cdef double a, delta
    cdef int n
    for n in range(1, 400):
        a = 0.5 * n
        d = z + a * d
        if d == 0.0:
            d = tiny
        c = z + a / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if fabs(delta - 1.0) < TAIL:
            break
    return exp(-z * z) / (SQRT_PI * f)


cdef double erfc_c(double z) noexcept nogil:
    if z != z:
        return z
    if z < 0.0:
        return 2.0 - erfc_c(-z)
    if z <= SERIES_CUT:
        return erfc_series_c(z)
    return erfc_cf_c(z)


def erfc(double z):
    return erfc_c(z)


def erfc_vec(zs):
    zs_arr = np.ascontiguousarray(zs, dtype=np.float64)
    out_arr = np.empty(zs_arr.shape, dtype=np.float64)
    cdef const double[::1] z = zs_arr.ravel()
    cdef double[::1] out = out_arr.reshape(-1)
    cdef Py_ssize_t i
    with nogil:
        for i in range(z.shape[0]):
            out[i] = erfc_c(z[i])
    return out_arr


cdef double eval_prog(const int* ops, const double* args, Py_ssize_t nops,
                      double x, double t, double* stack, int* err) noexcept nogil:
    cdef Py_ssize_t ip
    cdef int sp = 0
    cdef int op
    cdef double a
    for ip in range(nops):
        op = ops[ip]
        a = args[ip]
        if op == OP_CONST:
            stack[sp] = a
            sp += 1
        elif op == OP_VAR_X:
            stack[sp] = x
            sp += 1
        elif op == OP_VAR_T:
            stack[sp] = t
            sp += 1
        elif op == OP_ADD:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] + stack[sp]
        elif op == OP_SUB:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] - stack[sp]
        elif op == OP_MUL:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] * stack[sp]
        elif op == OP_DIV:
            sp -= 1
            if stack[sp] == 0.0:
                err[0] = 1
                return 0.0
            stack[sp - 1] = stack[sp - 1] / stack[sp]
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_POW:
            if a < 0.0 and stack[sp - 1] == 0.0:
                err[0] = 4
                return 0.0
            stack[sp - 1] = pow(stack[sp - 1], a)
        elif op == OP_EXP:
            stack[sp - 1] = exp(stack[sp - 1])
        elif op == OP_SIN:
            stack[sp - 1] = sin(stack[sp - 1])
        elif op == OP_COS:
            stack[sp - 1] = cos(stack[sp - 1])
        elif op == OP_SQRT:
            if stack[sp - 1] < 0.0:
                err[0] = 2
                return 0.0
            stack[sp - 1] = sqrt(stack[sp - 1])
        elif op == OP_LN:
            if stack[sp - 1] <= 0.0:
                err[0] = 3
                return 0.0
            stack[sp - 1] = log(stack[sp - 1])
    return stack[0]


def eval_program(ops, args, xs, ts, out):
    """Evaluate a program at paired points; returns 0 or an error code."""
    cdef const int[::1] o = np.ascontiguousarray(ops, dtype=np.int32)
    cdef const double[::1] a = np.ascontiguousarray(args, dtype=np.float64)
    cdef const double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] t = np.ascontiguousarray(ts, dtype=np.float64)
    cdef double[::1] res = out
    stack_arr = np.empty(o.shape[0] + 1, dtype=np.float64)
    cdef double[::1] stack = stack_arr
    cdef int err = 0
    cdef Py_ssize_t i
    with nogil:
        for i in range(x.shape[0]):
            res[i] = eval_prog(&o[0], &a[0], o.shape[0], x[i], t[i], &stack[0], &err)
            if err != 0:
                break
    return err


cdef Py_ssize_t thomas_c(const double* sub, const double* diag, const double* sup,
                         const double* rhs, double* piv, double* w, double* out,
                         Py_ssize_t n) noexcept nogil:
    """Returns -1 on success or the index of a nonpositive pivot."""
    cdef Py_ssize_t i
    cdef double m, p
    p = diag[0]
    if p <= 0.0:
        return 0
    piv[0] = p
    w[0] = rhs[0]
    for i in range(1, n):
        m = sub[i] / piv[i - 1]
        p = diag[i] - m * sup[i - 1]
        if p <= 0.0:
            return i
        piv[i] = p
        w[i] = rhs[i] - m * w[i - 1]
    out[n - 1] = w[n - 1] / piv[n - 1]
    for i in range(n - 2, -1, -1):
        out[i] = (w[i] - sup[i] * out[i + 1]) / piv[i]
    return -1


def thomas(sub, diag, sup, rhs, out):
    """Solve one tridiagonal system; returns -1 or the bad pivot index."""
    cdef const double[::1] a = sub
    cdef const double[::1] d = diag
    cdef const double[::1] c = sup
    cdef const double[::1] r = rhs
    cdef double[::1] x = out
    cdef Py_ssize_t n = d.shape[0]
    piv_arr = np.empty(n, dtype=np.float64)
    w_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] piv = piv_arr
    cdef double[::1] w = w_arr
    cdef Py_ssize_t bad
    with nogil:
        bad = thomas_c(&a[0], &d[0], &c[0], &r[0], &piv[0], &w[0], &x[0], n)
    return bad


def march_programs(double eps, double b00, double A0,
                   xs, hs, hbars, ts, ks,
                   ops_b, args_b, ops_f, args_f, int stack_need,
                   lefts, rights, inits):
    """Run the whole implicit march in C; returns the (N+1, M+1) grid."""
    cdef const double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] h = np.ascontiguousarray(hs, dtype=np.float64)
    cdef const double[::1] hbar = np.ascontiguousarray(hbars, dtype=np.float64)
    cdef const double[::1] t = np.ascontiguousarray(ts, dtype=np.float64)
    cdef const double[::1] k = np.ascontiguousarray(ks, dtype=np.float64)
    cdef const int[::1] ob = np.ascontiguousarray(ops_b, dtype=np.int32)
    cdef const double[::1] ab = np.ascontiguousarray(args_b, dtype=np.float64)
    cdef const int[::1] of = np.ascontiguousarray(ops_f, dtype=np.int32)
    cdef const double[::1] af = np.ascontiguousarray(args_f, dtype=np.float64)
    cdef const double[::1] left = np.ascontiguousarray(lefts, dtype=np.float64)
    cdef const double[::1] right = np.ascontiguousarray(rights, dtype=np.float64)
    cdef const double[::1] init = np.ascontiguousarray(inits, dtype=np.float64)

    cdef Py_ssize_t N = x.shape[0] - 1
    cdef Py_ssize_t M = t.shape[0] - 1
    cdef Py_ssize_t n = N - 1
    Y_arr = np.empty((N + 1, M + 1), dtype=np.float64)
    cdef double[:, ::1] Y = Y_arr

    scratch = np.empty((7, n), dtype=np.float64)
    cdef double[:, ::1] S = scratch
    stack_arr = np.empty(stack_need + 4, dtype=np.float64)
    cdef double[::1] stack = stack_arr

    cdef int err = 0
    cdef Py_ssize_t bad = -1
    cdef Py_ssize_t i, j
    cdef double tj, kj, epk, bij, fij, zij, ex, decay, inv2rt
    with nogil:
        for j in range(M + 1):
            Y[0, j] = left[j]
            Y[N, j] = right[j]
        for i in range(N + 1):
            Y[i, 0] = init[i]
        for i in range(n):
            S[0, i] = -eps / (h[i] * hbar[i])            # sub
            S[1, i] = -eps / (h[i + 1] * hbar[i])        # sup
            S[2, i] = eps * (1.0 / (h[i] * hbar[i]) + 1.0 / (h[i + 1] * hbar[i]))
        for j in range(1, M + 1):
            tj = t[j]
            kj = k[j - 1]
            epk = eps / kj
            inv2rt = 1.0 / (2.0 * sqrt(tj))
            ex = -b00 * tj / eps
            decay = exp(ex) if ex >= EXP_FLUSH else 0.0
            for i in range(1, N):
                bij = eval_prog(&ob[0], &ab[0], ob.shape[0], x[i], tj, &stack[0], &err)
                fij = eval_prog(&of[0], &af[0], of.shape[0], x[i], tj, &stack[0], &err)
                if err != 0:
                    break
                zij = decay * erfc_c(x[i] * inv2rt) if decay != 0.0 else 0.0
                S[3, i - 1] = epk + S[2, i - 1] + bij     # diag
                S[4, i - 1] = fij - A0 * (bij - b00) * zij + epk * Y[i, j - 1]
            if err != 0:
                break
            S[4, 0] -= S[0, 0] * Y[0, j]
            S[4, n - 1] -= S[1, n - 1] * Y[N, j]
            bad = thomas_c(&S[0, 0], &S[3, 0], &S[1, 0], &S[4, 0],
                           &S[5, 0], &S[6, 0], &S[4, 0], n)
            if bad >= 0:
                break
            for i in range(n):
                Y[i + 1, j] = S[4, i]
    if err != 0:
        msgs = {1: "division by zero", 2: "sqrt of a negative value",
                3: "ln of a nonpositive value", 4: "zero raised to a negative power"}
        raise EvalError(msgs.get(err, f"evaluation error {err}"))
    if bad >= 0:
        raise PivotError(bad)
    return Y_arr


cdef void locate_c(const double[::1] nodes, const double[::1] q,
                   Py_ssize_t[::1] idx, double[::1] w) noexcept nogil:
    """Cells left-closed/right-open, last cell right-closed; q ascending."""
    cdef Py_ssize_t pos = 0
    cdef Py_ssize_t last = nodes.shape[0] - 2
    cdef Py_ssize_t i
    cdef double v
    for i in range(q.shape[0]):
        v = q[i]
        while pos < last and nodes[pos + 1] <= v:
            pos += 1
        idx[i] = pos
        w[i] = (v - nodes[pos]) / (nodes[pos + 1] - nodes[pos])


def bilinear_max_diff(xa, ta, Ya_arr, xb, tb, Yb_arr, xq, tq):
    """Max over the query tensor grid of |interp(Ya) - interp(Yb)|."""
    cdef const double[::1] xav = np.ascontiguousarray(xa, dtype=np.float64)
    cdef const double[::1] tav = np.ascontiguousarray(ta, dtype=np.float64)
    cdef const double[:, ::1] Ya = np.ascontiguousarray(Ya_arr, dtype=np.float64)
    cdef const double[::1] xbv = np.ascontiguousarray(xb, dtype=np.float64)
    cdef const double[::1] tbv = np.ascontiguousarray(tb, dtype=np.float64)
    cdef const double[:, ::1] Yb = np.ascontiguousarray(Yb_arr, dtype=np.float64)
    cdef const double[::1] xqv = np.ascontiguousarray(xq, dtype=np.float64)
    cdef const double[::1] tqv = np.ascontiguousarray(tq, dtype=np.float64)

    cdef Py_ssize_t nq = xqv.shape[0]
    cdef Py_ssize_t mq = tqv.shape[0]
    ia_arr = np.empty(nq, dtype=np.intp)
    ib_arr = np.empty(nq, dtype=np.intp)
    ja_arr = np.empty(mq, dtype=np.intp)
    jb_arr = np.empty(mq, dtype=np.intp)
    wa_arr = np.empty(nq, dtype=np.float64)
    wb_arr = np.empty(nq, dtype=np.float64)
    va_arr = np.empty(mq, dtype=np.float64)
    vb_arr = np.empty(mq, dtype=np.float64)
    cdef Py_ssize_t[::1] ia = ia_arr
    cdef Py_ssize_t[::1] ib = ib_arr
    cdef Py_ssize_t[::1] ja = ja_arr
    cdef Py_ssize_t[::1] jb = jb_arr
    cdef double[::1] wa = wa_arr
    cdef double[::1] wb = wb_arr
    cdef double[::1] va = va_arr
    cdef double[::1] vb = vb_arr

    cdef double best = 0.0
    cdef double A, B, d, u, v
    cdef Py_ssize_t i, j, i0, j0
    with nogil:
        locate_c(xav, xqv, ia, wa)
        locate_c(xbv, xqv, ib, wb)
        locate_c(tav, tqv, ja, va)
        locate_c(tbv, tqv, jb, vb)
        for j in range(mq):
            for i in range(nq):
                i0 = ia[i]
                j0 = ja[j]
                u = wa[i]
                v = va[j]
                A = (Ya[i0, j0] * (1.0 - u) + Ya[i0 + 1, j0] * u) * (1.0 - v) \
                    + (Ya[i0, j0 + 1] * (1.0 - u) + Ya[i0 + 1, j0 + 1] * u) * v
                i0 = ib[i]
                j0 = jb[j]
                u = wb[i]
                v = vb[j]
                B = (Yb[i0, j0] * (1.0 - u) + Yb[i0 + 1, j0] * u) * (1.0 - v) \
                    + (Yb[i0, j0 + 1] * (1.0 - u) + Yb[i0 + 1, j0 + 1] * u) * v
                d = fabs(A - B)
                if d > best:
                    best = d
    return best

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled projection/quantile kernel. Mirrors ``nrcdt._fallback``.

Projections are ordered with a bucket sort (one bucket per atom, insertion
sort inside buckets), which is linear for the near-uniform projections of
image measures. Ties are ordered by atom index, reproducing a stable argsort.
"""

import numpy as np
cimport numpy as cnp
from libcpp.vector cimport vector
from libc.math cimport floor

cnp.import_array()


cdef inline bint _before(double pa, Py_ssize_t ia, double pb, Py_ssize_t ib) noexcept nogil:
    return pa < pb or (pa == pb and ia < ib)


cdef void _bucket_sort(
    vector[double]& proj, vector[Py_ssize_t]& order, vector[Py_ssize_t]& bucket,
    vector[Py_ssize_t]& start, vector[double]& sorted_pos,
) noexcept nogil:
    cdef Py_ssize_t n = proj.size(), i, j, j2, b, ib
    cdef double lo = proj[0], hi = proj[0], scale, p
    for i in range(1, n):
        if proj[i] < lo:
            lo = proj[i]
        elif proj[i] > hi:
            hi = proj[i]
    scale = (n - 1) / (hi - lo) if hi > lo else 0.0
    for i in range(n + 1):
        start[i] = 0
    for i in range(n):
        # monotone in proj[i], so bucket order agrees with position order
        b = <Py_ssize_t>floor((proj[i] - lo) * scale)
        if b >= n:
            b = n - 1
        bucket[i] = b
        start[b + 1] += 1
    for b in range(n):
        start[b + 1] += start[b]
    for i in range(n):
        b = bucket[i]
        order[start[b]] = i
        start[b] += 1
    # start[b] now marks the end of bucket b; insertion sort each bucket
    j = 0
    for b in range(n):
        for i in range(j + 1, start[b]):
            ib = order[i]
            p = proj[ib]
            j2 = i - 1
            while j2 >= j and _before(p, ib, proj[order[j2]], order[j2]):
                order[j2 + 1] = order[j2]
                j2 -= 1
            order[j2 + 1] = ib
        j = start[b]
    for i in range(n):
        sorted_pos[i] = proj[order[i]]


cdef void _one_direction(
    const double[::1] x, const double[::1] y, const double[::1] w,
    double c, double s, const double[::1] levels,
    double merge_tol, bint antipode,
    double[::1] fwd, double[::1] bwd,
    vector[double]& proj, vector[Py_ssize_t]& order, vector[Py_ssize_t]& bucket,
    vector[Py_ssize_t]& start, vector[double]& sorted_pos,
    vector[double]& pos, vector[double]& mass,
) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], m = levels.shape[0]
    cdef Py_ssize_t i, k, g, last
    cdef double acc
    for i in range(n):
        proj[i] = x[i] * c + y[i] * s
    _bucket_sort(proj, order, bucket, start, sorted_pos)

    pos.clear()
    mass.clear()
    pos.push_back(sorted_pos[0])
    mass.push_back(w[order[0]])
    for i in range(1, n):
        if sorted_pos[i] - sorted_pos[i - 1] > merge_tol:
            pos.push_back(sorted_pos[i])
            mass.push_back(w[order[i]])
        else:
            mass[mass.size() - 1] += w[order[i]]
    g = <Py_ssize_t>pos.size()
    last = g - 1

    # levels are increasing, so one sweep per curve suffices
    i = 0
    acc = mass[0]
    for k in range(m):
        while i < last and not (acc > levels[k]):
            i += 1
            acc += mass[i]
        fwd[k] = pos[i]
    if antipode:
        i = last
        acc = mass[last]
        for k in range(m):
            while i > 0 and not (acc > levels[k]):
                i -= 1
                acc += mass[i]
            bwd[k] = -pos[i]


def radon_quantiles(points, weights, cosines, sines, levels, bint antipodes,
                    double merge_tol, double tie_tol):
    """See :func:`nrcdt._fallback.radon_quantiles`."""
    pts = np.asarray(points, dtype=np.float64)
    w_all = np.asarray(weights, dtype=np.float64)
    keep = w_all > 0
    cdef const double[::1] x = np.ascontiguousarray(pts[keep, 0])
    cdef const double[::1] y = np.ascontiguousarray(pts[keep, 1])
    cdef const double[::1] w = np.ascontiguousarray(w_all[keep])
    cdef const double[::1] cs = np.ascontiguousarray(cosines, dtype=np.float64)
    cdef const double[::1] sn = np.ascontiguousarray(sines, dtype=np.float64)
    cdef const double[::1] lv = np.ascontiguousarray(
        np.asarray(levels, dtype=np.float64) + tie_tol)
    cdef Py_ssize_t n = x.shape[0], n_dir = cs.shape[0], m = lv.shape[0], d
    out_arr = np.empty((2 * n_dir if antipodes else n_dir, m))
    cdef double[:, ::1] out = out_arr
    cdef vector[double] proj, sorted_pos, pos, mass
    cdef vector[Py_ssize_t] order, bucket, start
    if n == 0:
        raise ValueError("measure has no positive weight")
    with nogil:
        proj.resize(n)
        sorted_pos.resize(n)
        order.resize(n)
        bucket.resize(n)
        start.resize(n + 1)
        pos.reserve(n)
        mass.reserve(n)
        for d in range(n_dir):
            _one_direction(x, y, w, cs[d], sn[d], lv, merge_tol, antipodes,
                           out[d], out[n_dir + d] if antipodes else out[d],
                           proj, order, bucket, start, sorted_pos, pos, mass)
    return out_arr


cdef Py_ssize_t REFRESH = 64


def svm_subgradient(gram, labels, double reg, Py_ssize_t max_iters, double tol):
    """See :func:`nrcdt._fallback.svm_subgradient`."""
    cdef const double[:, ::1] K = np.ascontiguousarray(gram, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(labels, dtype=np.float64)
    cdef Py_ssize_t n = y.shape[0], i, j, t, steps = 0
    alpha_arr = np.zeros(n)
    best_arr = np.zeros(n)
    hist_arr = np.empty(max_iters + 1)
    cdef double[::1] alpha = alpha_arr, best_alpha = best_arr, hist = hist_arr
    cdef vector[double] f
    cdef vector[char] active
    cdef double b = 0.0, best_b = 0.0, obj, prev = 0.0, best = 0.0, hinge, quad, eta, decay, gb, m, acc, c
    with nogil:
        f.resize(n)
        active.resize(n)
        for t in range(max_iters + 1):
            if t % REFRESH == 0:
                # exact product; in between, f = K alpha is updated from the active rows
                for i in range(n):
                    acc = 0.0
                    for j in range(n):
                        acc = acc + K[i, j] * alpha[j]
                    f[i] = acc
            hinge = 0.0
            quad = 0.0
            for i in range(n):
                quad += alpha[i] * f[i]
                m = y[i] * (f[i] + b)
                active[i] = m < 1.0
                if m < 1.0:
                    hinge += 1.0 - m
            obj = hinge / n + reg * quad
            if t == 0 or obj < best:
                best = obj
                best_b = b
                for i in range(n):
                    best_alpha[i] = alpha[i]
            hist[t] = best
            steps = t
            if t > 0 and (obj - prev < tol and prev - obj < tol):
                break
            if t == max_iters:
                break
            prev = obj
            eta = 1.0 / (reg * (t + 1))
            decay = 1.0 - 2.0 * eta * reg
            gb = 0.0
            for i in range(n):
                alpha[i] = decay * alpha[i]
                f[i] = decay * f[i]
            for i in range(n):
                if active[i]:
                    c = eta / n * y[i]
                    alpha[i] += c
                    gb += y[i]
                    for j in range(n):
                        f[j] += c * K[i, j]
            b += eta / n * gb
    return best_arr, best_b, hist_arr[: steps + 1].copy()

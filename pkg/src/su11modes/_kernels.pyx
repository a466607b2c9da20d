# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled binning and co-moment kernels; same contracts as ``_kernels_py``."""
import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport dsyrk

cnp.import_array()

ctypedef fused pixel_t:
    float
    double


cdef void _scatter(pixel_t[:, ::1] frames, const long long[::1] pix,
                   const long long[::1] bins, const double[::1] wts,
                   double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t f, k
    cdef Py_ssize_t nk = pix.shape[0]
    for f in range(frames.shape[0]):
        for k in range(nk):
            out[f, bins[k]] += wts[k] * frames[f, pix[k]]


def bin_profiles(frames, pix, bins, wts, Py_ssize_t n_bins):
    """Scatter pixel values into bins: out[f, bins[k]] += wts[k] * frames[f, pix[k]]."""
    arr = np.ascontiguousarray(frames)
    if arr.dtype != np.float32:
        arr = np.ascontiguousarray(arr, dtype=np.float64)
    cdef const long long[::1] p = np.ascontiguousarray(pix, dtype=np.int64)
    cdef const long long[::1] b = np.ascontiguousarray(bins, dtype=np.int64)
    cdef const double[::1] w = np.ascontiguousarray(wts, dtype=np.float64)
    out = np.zeros((arr.shape[0], n_bins))
    cdef double[:, ::1] o = out
    cdef float[:, ::1] f32
    cdef double[:, ::1] f64
    if arr.dtype == np.float32:
        f32 = arr
        with nogil:
            _scatter(f32, p, b, w, o)
    else:
        f64 = arr
        with nogil:
            _scatter(f64, p, b, w, o)
    return out


def comoment_update(mean, comoment, Py_ssize_t n, profiles):
    """Fold a batch of profiles into running (mean, co-moment) state in place.

    Returns the new count.  The centered batch co-moment is formed with a
    symmetric rank-k BLAS update.
    """
    prof = np.array(profiles, dtype=np.float64, order="C", copy=True)
    if prof.ndim != 2:
        prof = np.atleast_2d(prof)
    return _comoment_core(mean, comoment, n, prof)


cdef Py_ssize_t _comoment_core(double[::1] mean, double[:, ::1] com, Py_ssize_t n,
                               double[:, ::1] prof):
    cdef Py_ssize_t nb = prof.shape[0]
    cdef Py_ssize_t m = prof.shape[1]
    cdef Py_ssize_t i, j, r
    cdef double total, di, cross, frac
    if nb == 0:
        return n
    delta_arr = np.empty(m)
    bcom_arr = np.zeros((m, m))
    cdef double[::1] delta = delta_arr
    cdef double[:, ::1] bcom = bcom_arr
    cdef int im = <int>m, inb = <int>nb
    cdef double one = 1.0, zero = 0.0
    cdef char uplo = b'L'
    cdef char trans = b'N'
    with nogil:
        for j in range(m):
            di = 0.0
            for r in range(nb):
                di += prof[r, j]
            di /= nb
            for r in range(nb):
                prof[r, j] -= di
            delta[j] = di - mean[j]
        # prof is (nb, m) row-major == (m, nb) column-major: C = A A^T with A = prof^T.
        # The column-major lower triangle is the row-major upper triangle of bcom.
        dsyrk(&uplo, &trans, &im, &inb, &one, &prof[0, 0], &im, &zero, &bcom[0, 0], &im)
        total = <double>(n + nb)
        cross = (<double>n) * nb / total
        frac = nb / total
        for i in range(m):
            for j in range(i, m):
                di = bcom[i, j] + delta[i] * delta[j] * cross
                com[i, j] += di
                if j != i:
                    com[j, i] += di
        for j in range(m):
            mean[j] += delta[j] * frac
    return n + nb


def binned_comoment_update(mean, comoment, Py_ssize_t n, frames, pix, bins, wts, norm):
    """Bin raw frames and fold them into the running state; returns the new count."""
    prof = bin_profiles(frames, pix, bins, wts, mean.shape[0])
    prof *= np.asarray(norm, dtype=np.float64)
    return _comoment_core(mean, comoment, n, prof)

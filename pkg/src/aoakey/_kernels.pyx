# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels (hot loops of the spectrum and bit pipeline)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

BACKEND = "compiled"

cdef inline object _c_array(object x, object dtype):
    arr = np.ascontiguousarray(x, dtype=dtype)
    if not arr.flags.writeable:
        arr = arr.copy()
    return arr



def steering_matrix(double beta_r, cnp.ndarray elem_az_in, cnp.ndarray az_in, cnp.ndarray el_in):
    cdef double[::1] elem_az = _c_array(elem_az_in, np.float64)
    cdef double[::1] az = _c_array(az_in, np.float64)
    cdef double[::1] el = _c_array(el_in, np.float64)
    cdef Py_ssize_t m_count = elem_az.shape[0]
    cdef Py_ssize_t g_count = az.shape[0]
    out_arr = np.empty((m_count, g_count), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t m, g
    cdef double radial, phase
    for g in range(g_count):
        radial = beta_r * sin(el[g])
        for m in range(m_count):
            phase = radial * cos(az[g] - elem_az[m])
            out[m, g] = cos(phase) + 1j * sin(phase)
    return out_arr


def music_power(cnp.ndarray basis_in, cnp.ndarray steering_in, double floor):
    cdef double complex[:, ::1] basis = _c_array(basis_in, np.complex128)
    cdef double complex[:, ::1] steer = _c_array(steering_in, np.complex128)
    cdef Py_ssize_t k_count = basis.shape[0]
    cdef Py_ssize_t m_count = basis.shape[1]
    cdef Py_ssize_t g_count = steer.shape[1]
    out_arr = np.empty(g_count, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t g, k, m
    cdef double complex acc
    cdef double denom
    for g in range(g_count):
        denom = floor
        for k in range(k_count):
            acc = 0
            for m in range(m_count):
                acc = acc + basis[k, m] * steer[m, g]
            denom += acc.real * acc.real + acc.imag * acc.imag
        if denom < 1e-15:
            denom = 1e-15
        out[g] = 1.0 / denom
    return out_arr


def xsbs_power(cnp.ndarray adjoint_in, cnp.ndarray steering_in):
    cdef double complex[::1] adj = _c_array(adjoint_in, np.complex128)
    cdef double complex[:, ::1] steer = _c_array(steering_in, np.complex128)
    cdef Py_ssize_t m_count = steer.shape[0]
    cdef Py_ssize_t g_count = steer.shape[1]
    out_arr = np.empty(g_count, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t g, m
    cdef double complex acc
    for g in range(g_count):
        acc = 0
        for m in range(m_count):
            acc = acc + steer[m, g].conjugate() * adj[m]
        out[g] = acc.real * acc.real + acc.imag * acc.imag
    return out_arr


def quantize_levels(cnp.ndarray values_in, double low, double high, int n_bits):
    cdef double[::1] values = _c_array(values_in, np.float64)
    cdef Py_ssize_t n = values.shape[0]
    cdef long long top = (1LL << n_bits) - 1
    cdef double scale = (1LL << n_bits) / (high - low)
    out_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t i
    cdef long long idx
    for i in range(n):
        idx = <long long>((values[i] - low) * scale)
        if (values[i] - low) * scale < 0:
            idx = 0
        if idx > top:
            idx = top
        out[i] = idx
    return out_arr


def gray_encode(cnp.ndarray levels_in, int n_bits, int repeat):
    cdef long long[::1] levels = _c_array(levels_in, np.int64)
    cdef Py_ssize_t n = levels.shape[0]
    cdef int width = n_bits + repeat - 1
    out_arr = np.empty(n * width, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t i
    cdef int j
    cdef long long gray
    cdef unsigned char msb
    for i in range(n):
        gray = levels[i] ^ (levels[i] >> 1)
        msb = <unsigned char>((gray >> (n_bits - 1)) & 1)
        for j in range(repeat):
            out[i * width + j] = msb
        for j in range(1, n_bits):
            out[i * width + repeat - 1 + j] = <unsigned char>((gray >> (n_bits - 1 - j)) & 1)
    return out_arr

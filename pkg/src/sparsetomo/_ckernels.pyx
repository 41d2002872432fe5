# cython: language_level=3
"""Compiled statevector kernels; see ``_pykernels`` for the op-table layout."""
import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx

cdef enum:
    OP_1Q = 0


cdef inline void _apply_1q(cplx* amps, Py_ssize_t size, cplx m00, cplx m01,
                           cplx m10, cplx m11, int qubit) noexcept nogil:
    cdef Py_ssize_t step = (<Py_ssize_t>1) << qubit
    cdef Py_ssize_t base, i
    cdef cplx a0, a1
    base = 0
    while base < size:
        for i in range(base, base + step):
            a0 = amps[i]
            a1 = amps[i + step]
            amps[i] = m00 * a0 + m01 * a1
            amps[i + step] = m10 * a0 + m11 * a1
        base += 2 * step


cdef inline void _apply_cnot(cplx* amps, Py_ssize_t size, int control,
                             int target) noexcept nogil:
    cdef Py_ssize_t cbit = (<Py_ssize_t>1) << control
    cdef Py_ssize_t tbit = (<Py_ssize_t>1) << target
    cdef Py_ssize_t i
    cdef cplx tmp
    for i in range(size):
        if (i & cbit) and not (i & tbit):
            tmp = amps[i]
            amps[i] = amps[i | tbit]
            amps[i | tbit] = tmp


cdef inline void _apply_pauli(cplx* amps, Py_ssize_t size, int code,
                              int qubit) noexcept nogil:
    cdef Py_ssize_t step = (<Py_ssize_t>1) << qubit
    cdef Py_ssize_t base, i
    cdef cplx a0, a1
    if code == 0:
        return
    base = 0
    while base < size:
        for i in range(base, base + step):
            a0 = amps[i]
            a1 = amps[i + step]
            if code == 1:
                amps[i] = a1
                amps[i + step] = a0
            elif code == 2:
                amps[i] = -1j * a1
                amps[i + step] = 1j * a0
            else:
                amps[i + step] = -a1
        base += 2 * step


cdef void _run(cplx* amps, Py_ssize_t size, const long long[:, ::1] ops,
               const cplx[:, ::1] mats, const signed char* codes) noexcept nogil:
    cdef Py_ssize_t j, g
    cdef int kind, a, b, code
    for j in range(ops.shape[0]):
        kind = <int>ops[j, 0]
        a = <int>ops[j, 1]
        b = <int>ops[j, 2]
        if kind == OP_1Q:
            g = b
            _apply_1q(amps, size, mats[g, 0], mats[g, 1], mats[g, 2], mats[g, 3], a)
            if codes != NULL:
                _apply_pauli(amps, size, codes[j], a)
        else:
            _apply_cnot(amps, size, a, b)
            if codes != NULL and codes[j] != 0:
                code = codes[j]
                _apply_pauli(amps, size, code >> 2, a)
                _apply_pauli(amps, size, code & 3, b)


def apply_1q(cplx[::1] amps, const cplx[::1] mat, int qubit):
    with nogil:
        _apply_1q(&amps[0], amps.shape[0], mat[0], mat[1], mat[2], mat[3], qubit)


def apply_cnot(cplx[::1] amps, int control, int target):
    with nogil:
        _apply_cnot(&amps[0], amps.shape[0], control, target)


def run_ops(cplx[::1] amps, const long long[:, ::1] ops, const cplx[:, ::1] mats):
    with nogil:
        _run(&amps[0], amps.shape[0], ops, mats, NULL)


def run_trajectories(const cplx[::1] init, const long long[:, ::1] ops,
                     const cplx[:, ::1] mats, const signed char[:, ::1] codes):
    cdef Py_ssize_t n_traj = codes.shape[0]
    cdef Py_ssize_t size = init.shape[0]
    cdef Py_ssize_t t, i
    cdef cplx[::1] work = np.empty(size, dtype=np.complex128)
    out_arr = np.empty((n_traj, size), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef const signed char* row
    if n_traj == 0:
        return out_arr
    with nogil:
        for t in range(n_traj):
            for i in range(size):
                work[i] = init[i]
            row = &codes[t, 0] if codes.shape[1] > 0 else NULL
            if codes.shape[1] > 0:
                _run(&work[0], size, ops, mats, row)
            for i in range(size):
                out[t, i] = work[i].real * work[i].real + work[i].imag * work[i].imag
    return out_arr

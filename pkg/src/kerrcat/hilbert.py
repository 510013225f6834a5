"""Truncated Fock-space operators, states and phase-space tools.

Operators and states are plain numpy arrays. Kets are 1-d complex vectors,
density matrices and operators are square 2-d arrays. Two-mode objects use
the Kronecker order ``kron(storage, buffer)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ContractError, InvalidDimensionError, TruncationError

# ---------------------------------------------------------------- basics


def _check_dim(dim) -> int:
    if isinstance(dim, bool) or not isinstance(dim, (int, np.integer)) or dim < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {dim!r}")
    return int(dim)


def annihilation(dim: int) -> np.ndarray:
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).conj().T


def number(dim: int) -> np.ndarray:
    dim = _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def parity(dim: int) -> np.ndarray:
    """Photon-number parity exp(i pi a^dag a)."""
    dim = _check_dim(dim)
    return np.diag((-1.0) ** np.arange(dim)).astype(complex)


def identity(dim: int) -> np.ndarray:
    return np.eye(_check_dim(dim), dtype=complex)


def fock(n: int, dim: int) -> np.ndarray:
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"Fock level {n} outside truncation {dim}")
    v = np.zeros(dim, complex)
    v[n] = 1.0
    return v


def check_truncation(alpha: complex, dim: int) -> None:
    """Raise TruncationError unless |alpha|^2 + 5|alpha| < dim."""
    r = abs(alpha)
    if r * r + 5.0 * r >= dim:
        raise TruncationError(
            f"|alpha|={r:.3g} needs dim > {r * r + 5 * r:.1f}, got {dim}"
        )


def displacement(alpha: complex, dim: int) -> np.ndarray:
    """D(alpha) = exp(alpha a^dag - alpha* a), truncated to ``dim``.

    The exponential is taken in a padded workspace of ``dim + ceil(8|alpha|)``
    levels and then cropped, which keeps the retained block unitary to high
    accuracy as long as ``check_truncation`` passes.
    """
    dim = _check_dim(dim)
    check_truncation(alpha, dim)
    work = dim + int(math.ceil(8 * abs(alpha)))
    a = annihilation(work)
    gen = alpha * a.conj().T - np.conj(alpha) * a
    return scipy.linalg.expm(gen)[:dim, :dim]


def coherent_state(alpha: complex, dim: int) -> np.ndarray:
    dim = _check_dim(dim)
    check_truncation(alpha, dim)
    c = np.empty(dim, complex)
    c[0] = 1.0
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    c *= math.exp(-abs(alpha) ** 2 / 2)
    return c / np.linalg.norm(c)


def cat_state(alpha: complex, parity_sign: int, dim: int) -> np.ndarray:
    """Normalized (|alpha> + s|-alpha>) for s = +1 or -1."""
    if parity_sign not in (1, -1):
        raise ContractError("parity_sign must be +1 or -1")
    v = coherent_state(alpha, dim) + parity_sign * coherent_state(-alpha, dim)
    nrm = np.linalg.norm(v)
    if nrm < 1e-12:
        raise ContractError("odd cat undefined at alpha = 0")
    return v / nrm


def cardinal_states(c_plus: np.ndarray, c_minus: np.ndarray) -> dict[str, np.ndarray]:
    """The six Bloch-sphere cardinal states built from a cat pair.

    +-Z are the cats, +-X are the (near) coherent states, +-Y carry the
    relative phase -+i on the odd cat, so that |+Y> = (C+ + iC-)/sqrt2.
    """
    s = 1 / math.sqrt(2)
    return {
        "+Z": c_plus.copy(),
        "-Z": c_minus.copy(),
        "+X": s * (c_plus + c_minus),
        "-X": s * (c_plus - c_minus),
        "+Y": s * (c_plus + 1j * c_minus),
        "-Y": s * (c_plus - 1j * c_minus),
    }


# ---------------------------------------------------------------- states


def ket2dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, complex)
    return np.outer(psi, psi.conj())


def as_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, complex)
    return ket2dm(state) if state.ndim == 1 else state


def expect(op: np.ndarray, state: np.ndarray) -> complex:
    """<op> for a ket or a density matrix (any leading batch axes for rho)."""
    state = np.asarray(state)
    if state.ndim == 1:
        return complex(state.conj() @ op @ state)
    return np.einsum("ij,...ji->...", op, state)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    ev = np.linalg.eigvalsh(as_density(rho) - as_density(sigma))
    return 0.5 * float(np.abs(ev).sum())


def fidelity(psi: np.ndarray, rho: np.ndarray) -> float:
    """<psi|rho|psi> for a pure reference state."""
    return float(np.real(psi.conj() @ as_density(rho) @ psi))


@dataclass(frozen=True)
class DensityReport:
    hermiticity: float
    trace_error: float
    min_eigenvalue: float

    def ok(self, tol: float = 1e-8) -> bool:
        return (
            self.hermiticity < tol
            and self.trace_error < tol
            and self.min_eigenvalue > -tol
        )


def density_report(rho: np.ndarray) -> DensityReport:
    rho = np.asarray(rho, complex)
    herm = float(np.abs(rho - rho.conj().T).max())
    tr = abs(np.trace(rho) - 1.0)
    ev = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return DensityReport(herm, float(tr), float(ev.min()))


def check_density(rho: np.ndarray, tol: float = 1e-8) -> None:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidDimensionError(f"density matrix must be square, got {rho.shape}")
    rep = density_report(rho)
    if not rep.ok(tol):
        raise ContractError(f"not a density matrix: {rep}")


def check_hermitian(op: np.ndarray, tol: float = 1e-10) -> None:
    scale = max(1.0, float(np.abs(op).max()))
    if np.abs(op - op.conj().T).max() > tol * scale:
        raise ContractError("operator is not Hermitian")


# ---------------------------------------------------------------- two modes


def two_mode_ops(dim_a: int, dim_b: int) -> tuple[np.ndarray, np.ndarray]:
    """(a, b) on the product space, storage first."""
    a = np.kron(annihilation(dim_a), np.eye(dim_b))
    b = np.kron(np.eye(dim_a), annihilation(dim_b))
    return a, b


def embed(op: np.ndarray, which: int, dims: tuple[int, int]) -> np.ndarray:
    if which == 0:
        return np.kron(op, np.eye(dims[1]))
    return np.kron(np.eye(dims[0]), op)


def partial_trace(rho: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Reduced state of mode ``keep`` (0 = storage, 1 = buffer)."""
    da, db = dims
    r = np.asarray(rho).reshape(*rho.shape[:-2], da, db, da, db)
    if keep == 0:
        return np.einsum("...ibjb->...ij", r)
    return np.einsum("...aiaj->...ij", r)


# ---------------------------------------------------------------- Wigner


def _support(rho: np.ndarray, tol: float = 1e-14) -> int:
    pops = np.abs(np.real(np.diagonal(rho)))
    nz = np.nonzero(pops > tol * max(pops.max(), 1e-300))[0]
    return int(nz[-1]) + 1 if nz.size else 1


def _working_dim(n_support: int, radius: float) -> int:
    # Displaced support grows like (sqrt(n) + r)^2; keep a margin of 6 std devs.
    s = math.sqrt(n_support) + radius
    return int(math.ceil(s * s + 6 * s + 10))


def wigner(rho: np.ndarray, points) -> np.ndarray:
    """W(beta) = (2/pi) Tr[D(beta)^dag rho D(beta) P] at arbitrary points.

    Normalized so that the integral over the plane is 1 and
    ``W(0) = (2/pi) <P>``.
    """
    rho = as_density(rho)
    pts = np.atleast_1d(np.asarray(points, complex))
    n = _support(rho)
    out = np.empty(pts.shape, float)
    for idx, beta in np.ndenumerate(pts):
        w = _working_dim(n, abs(beta))
        r = np.zeros((w, w), complex)
        m = min(rho.shape[0], w)
        r[:m, :m] = rho[:m, :m]
        d = displacement(beta, w)
        shifted = d.conj().T @ r @ d
        out[idx] = (2 / np.pi) * np.real(np.sum(np.diagonal(shifted) * (-1.0) ** np.arange(w)))
    return out if np.ndim(points) else out[0]


def _quadrature_eig(work: int):
    a = annihilation(work)
    # D(x) = exp(x (a^dag - a)),  a^dag - a = -i P  with P Hermitian.
    p_op = 1j * (a.conj().T - a)
    wp, vp = np.linalg.eigh(p_op)
    # D(iy) = exp(i y (a + a^dag)).
    x_op = a + a.conj().T
    wx, vx = np.linalg.eigh(x_op)
    return (wp, vp), (wx, vx)


def wigner_grid(rho: np.ndarray, xvec, yvec) -> np.ndarray:
    """Wigner function on the Cartesian grid beta = x + i y.

    Returns an array of shape ``(len(yvec), len(xvec))`` (rows are y), so it
    can be passed straight to ``imshow``/``contourf``.

    Uses D(x + iy) = exp(ixy) D(x) D(iy); the phase cancels in the displaced
    parity, so W[x, y] = (2/pi) Tr[A_x B_y] with A_x = D(x)^dag rho D(x) and
    B_y = D(iy) P D(iy)^dag, which reduces the whole grid to one matrix
    product.
    """
    rho = as_density(rho)
    xvec = np.asarray(xvec, float)
    yvec = np.asarray(yvec, float)
    n = _support(rho)
    rx = float(np.abs(xvec).max(initial=0.0))
    ry = float(np.abs(yvec).max(initial=0.0))
    w1 = _working_dim(n, rx)  # support of A_x
    w2 = _working_dim(n, math.hypot(rx, ry))  # support reached after both shifts
    work = w2 + int(math.ceil(8 * max(rx, ry))) + 8
    (wp, vp), (wx, vx) = _quadrature_eig(work)

    m = min(rho.shape[0], w1)
    r = np.zeros((w1, w1), complex)
    r[:m, :m] = rho[:m, :m]

    vp1 = vp[:w1]
    # D(x)[:w1, :w1] for every x at once: (nx, w1, w1)
    dx = (vp1[None] * np.exp(-1j * np.outer(xvec, wp))[:, None, :]) @ vp1.conj().T
    ax = dx.conj().transpose(0, 2, 1) @ r @ dx

    vx1 = vx[:w1]
    vx2 = vx[:w2]
    par = (-1.0) ** np.arange(w2)
    by = np.empty((len(yvec), w1, w1), complex)
    for k, y in enumerate(yvec):
        d = (vx1 * np.exp(1j * y * wx)) @ vx2.conj().T  # rows < w1, cols < w2
        by[k] = (d * par) @ d.conj().T
    # Tr[A B] = sum_mn A[m, n] B[n, m]
    prod = by.transpose(0, 2, 1).reshape(len(yvec), -1) @ ax.reshape(len(xvec), -1).T
    return (2 / np.pi) * np.real(prod)

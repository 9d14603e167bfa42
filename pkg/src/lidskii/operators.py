"""Finite-dimensional complex operators.

An :class:`OperatorSpec` stores a dense complex matrix ``B`` and, optionally,
an exact Jordan description ``B = P J P^{-1}``.  The helpers in this module
provide resolvent solves ``(I - lam B)^{-1} f``, singular values, numerical
range sectors and Fredholm determinants.
"""
from dataclasses import dataclass, field
import json
import os
import warnings

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.stats import norm as _normal, qmc

from .errors import (OperatorFormatError, SingularBasisError,
                     SingularResolventError)

__all__ = ["JordanBlock", "JordanStructure", "OperatorSpec",
           "SectorEstimate", "load_operator", "operator_to_json",
           "resolvent_apply", "resolvent_solve_batch", "singular_values",
           "estimate_sector", "fredholm_determinant", "adjoint_apply",
           "characteristic_numbers", "jordan_matrix", "parse_vector",
           "vector_to_json"]

RECONSTRUCTION_TOL = 1e-12
BASIS_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class JordanBlock:
    eigenvalue: complex
    size: int


@dataclass(frozen=True, eq=False)
class JordanStructure:
    """Exact Jordan description ``B = P J P^{-1}``.

    ``blocks`` are listed in the order in which their columns appear in
    ``basis``; within a block the first column is the eigenvector.
    """
    blocks: tuple
    basis: np.ndarray

    @property
    def dimension(self):
        return int(sum(b.size for b in self.blocks))

    def jordan_matrix(self):
        return jordan_matrix(self.blocks)

    def reconstruct(self):
        P = self.basis
        PJ = P @ self.jordan_matrix()
        # B = P J P^{-1}  <=>  B^T = P^{-T} (P J)^T
        return scipy.linalg.solve(P.T, PJ.T).T


def jordan_matrix(blocks):
    """Block diagonal Jordan matrix with unit superdiagonals."""
    n = int(sum(b.size for b in blocks))
    J = np.zeros((n, n), dtype=complex)
    k = 0
    for b in blocks:
        for i in range(b.size):
            J[k + i, k + i] = b.eigenvalue
            if i + 1 < b.size:
                J[k + i, k + i + 1] = 1.0
        k += b.size
    return J


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """A finite complex operator ``B``.

    Parameters
    ----------
    dense : (n, n) complex ndarray
        Matrix of the operator.
    structured : JordanStructure or None
        Optional exact Jordan description.
    label : str
        Free-form name used in reports.
    """
    dense: np.ndarray
    structured: JordanStructure = None
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        B = np.asarray(self.dense)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise OperatorFormatError(
                f"operator matrix must be square, got shape {B.shape}")
        if B.shape[0] < 1:
            raise OperatorFormatError("operator dimension must be >= 1")
        if not np.all(np.isfinite(B)):
            raise OperatorFormatError("operator matrix has non-finite entries")
        B = np.array(B, dtype=complex)
        B.setflags(write=False)
        object.__setattr__(self, "dense", B)
        if self.structured is not None:
            s = self.structured
            if s.dimension != B.shape[0] or s.basis.shape != B.shape:
                raise OperatorFormatError(
                    "structured form does not match the operator dimension")
            err = _relative_frobenius(s.reconstruct(), B)
            if err > RECONSTRUCTION_TOL:
                raise OperatorFormatError(
                    "structured form P J P^-1 differs from the dense matrix "
                    f"(relative Frobenius error {err:.3e})")

    @property
    def dimension(self):
        return self.dense.shape[0]

    @property
    def norm(self):
        """Spectral norm ``||B||_2``."""
        if "norm" not in self._cache:
            self._cache["norm"] = float(np.linalg.norm(self.dense, 2))
        return self._cache["norm"]

    def eigenvalues(self):
        """Eigenvalues of ``B`` (exact when a structured form is present)."""
        if "eig" not in self._cache:
            if self.structured is not None:
                ev = np.concatenate([np.full(b.size, b.eigenvalue, dtype=complex)
                                     for b in self.structured.blocks])
            else:
                ev = scipy.linalg.eigvals(self.dense)
            ev = np.asarray(ev, dtype=complex)
            ev.setflags(write=False)
            self._cache["eig"] = ev
        return self._cache["eig"]

    @classmethod
    def from_dense(cls, matrix, label=""):
        return cls(np.asarray(matrix, dtype=complex), None, label)

    @classmethod
    def from_jordan(cls, blocks, basis=None, label=""):
        """Build ``P J P^{-1}`` from ``[(eigenvalue, size), ...]`` and ``P``."""
        blocks = tuple(b if isinstance(b, JordanBlock)
                       else JordanBlock(complex(b[0]), int(b[1])) for b in blocks)
        for b in blocks:
            if b.size < 1:
                raise OperatorFormatError("Jordan block sizes must be >= 1")
        n = int(sum(b.size for b in blocks))
        P = np.eye(n, dtype=complex) if basis is None else np.array(basis, dtype=complex)
        if P.shape != (n, n):
            raise OperatorFormatError(
                f"basis has shape {P.shape}, expected {(n, n)}")
        cond = np.linalg.cond(P)
        if not np.isfinite(cond) or cond > BASIS_CONDITION_LIMIT:
            raise SingularBasisError(
                f"change-of-basis matrix is singular (condition number {cond:.3e})",
                condition=cond)
        P.setflags(write=False)
        s = JordanStructure(blocks, P)
        return cls(s.reconstruct(), s, label)


def _relative_frobenius(a, b):
    nb = np.linalg.norm(b)
    return np.linalg.norm(a - b) / (nb if nb > 0 else 1.0)


def characteristic_numbers(op):
    """Characteristic numbers ``1/mu`` of the nonzero eigenvalues."""
    ev = op.eigenvalues()
    ev = ev[ev != 0]
    return 1.0 / ev


# ---------------------------------------------------------------- JSON I/O

def _parse_complex(v, what):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise OperatorFormatError(f"{what}: expected [re, im] pair, got {v!r}")


def parse_vector(data, what="vector"):
    """Parse ``[[re, im], ...]`` (or plain reals) into a complex vector."""
    if not isinstance(data, (list, tuple)) or len(data) == 0:
        raise OperatorFormatError(f"{what}: expected a non-empty list")
    return np.array([_parse_complex(v, what) for v in data], dtype=complex)


def _parse_matrix(rows, what):
    if not isinstance(rows, (list, tuple)) or len(rows) == 0:
        raise OperatorFormatError(f"{what}: expected a non-empty list of rows")
    out = [parse_vector(r, what) for r in rows]
    widths = {len(r) for r in out}
    if len(widths) != 1:
        raise OperatorFormatError(f"{what}: rows have unequal lengths")
    M = np.array(out)
    if M.shape[0] != M.shape[1]:
        raise OperatorFormatError(f"{what}: non-square matrix of shape {M.shape}")
    return M


def vector_to_json(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def operator_to_json(op):
    """Serialize an operator into the matrix JSON schema."""
    out = {"dimension": op.dimension,
           "entries": [vector_to_json(row) for row in op.dense]}
    if op.structured is not None:
        out["structured"] = {
            "blocks": [{"eigenvalue": [b.eigenvalue.real, b.eigenvalue.imag],
                        "size": b.size} for b in op.structured.blocks],
            "basis": [vector_to_json(row) for row in op.structured.basis]}
    if op.label:
        out["label"] = op.label
    return out


def load_operator(source, label=None):
    """Load an operator from the matrix JSON schema.

    Parameters
    ----------
    source : str, os.PathLike or dict
        Path to a JSON file, a JSON string, or an already decoded mapping
        ``{"dimension": n, "entries": [[[re, im], ...], ...],
        "structured": {"blocks": [...], "basis": [...]}}``.
    label : str, optional
        Overrides the label stored in the description.

    Returns
    -------
    OperatorSpec
    """
    if isinstance(source, dict):
        data = source
        default_label = ""
    else:
        text = None
        if isinstance(source, os.PathLike) or (
                isinstance(source, str) and not source.lstrip().startswith("{")):
            path = os.fspath(source)
            try:
                with open(path, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise OperatorFormatError(f"cannot read operator file {path!r}: {exc}")
            default_label = os.path.splitext(os.path.basename(path))[0]
        else:
            text = source
            default_label = ""
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise OperatorFormatError(f"malformed operator JSON: {exc}")
    if not isinstance(data, dict):
        raise OperatorFormatError("operator description must be a JSON object")
    label = label if label is not None else str(data.get("label", default_label))

    structured = data.get("structured")
    dense = None
    if "entries" in data:
        dense = _parse_matrix(data["entries"], "entries")
    elif structured is None:
        raise OperatorFormatError("operator needs 'entries' or 'structured'")
    if "dimension" in data:
        n = data["dimension"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise OperatorFormatError(f"invalid dimension {n!r}")
        if dense is not None and dense.shape[0] != n:
            raise OperatorFormatError(
                f"dimension {n} does not match entries of size {dense.shape[0]}")

    if structured is None:
        return OperatorSpec(dense, None, label)
    if not isinstance(structured, dict) or "blocks" not in structured:
        raise OperatorFormatError("structured form needs a 'blocks' list")
    blocks = []
    for b in structured["blocks"]:
        if not isinstance(b, dict) or "eigenvalue" not in b or "size" not in b:
            raise OperatorFormatError(f"malformed Jordan block {b!r}")
        size = b["size"]
        if not isinstance(size, int) or isinstance(size, bool) or size < 1:
            raise OperatorFormatError(f"invalid Jordan block size {size!r}")
        blocks.append(JordanBlock(_parse_complex(b["eigenvalue"], "eigenvalue"), size))
    basis = structured.get("basis")
    basis = None if basis is None else _parse_matrix(basis, "basis")
    op = OperatorSpec.from_jordan(blocks, basis, label)
    if dense is not None:
        err = _relative_frobenius(op.dense, dense)
        if err > RECONSTRUCTION_TOL:
            raise OperatorFormatError(
                "structured form P J P^-1 differs from entries "
                f"(relative Frobenius error {err:.3e})")
        op = OperatorSpec(dense, op.structured, label)
    return op


# ------------------------------------------------------------- resolvents

def _nearest_pole(op, lam):
    lams = characteristic_numbers(op)
    if lams.size == 0:
        return None
    return complex(lams[np.argmin(np.abs(lams - lam))])


def resolvent_apply(op, lam, f, refine=3):
    """Solve ``(I - lam B) x = f``.

    Parameters
    ----------
    op : OperatorSpec
    lam : complex
        Spectral parameter.
    f : (n,) or (n, k) array_like
        Right-hand side(s).
    refine : int
        Maximum number of iterative refinement sweeps.

    Returns
    -------
    x : ndarray
        Solution with the shape of ``f``.
    """
    f = np.asarray(f, dtype=complex)
    n = op.dimension
    if f.shape[0] != n:
        raise ValueError(f"vector of length {f.shape[0]} for operator of size {n}")
    lam = complex(lam)
    M = np.eye(n, dtype=complex) - lam * op.dense
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    d = np.abs(np.diag(lu))
    scale = max(1.0, float(np.abs(M).max()))
    if d.min() <= n * np.finfo(float).eps * scale:
        pole = _nearest_pole(op, lam)
        raise SingularResolventError(
            f"I - lam B is singular at lam = {lam}; nearest characteristic "
            f"number {pole}", pole=pole)
    x = scipy.linalg.lu_solve((lu, piv), f, check_finite=False)
    fn = np.linalg.norm(f)
    for _ in range(refine):
        r = f - M @ x
        if np.linalg.norm(r) <= 1e-14 * fn:
            break
        x = x + scipy.linalg.lu_solve((lu, piv), r, check_finite=False)
    return x


def resolvent_solve_batch(B, lams, F):
    """Batched solves ``(I - lam_j B) x_j = F`` for many ``lam_j``.

    ``F`` has shape ``(n,)`` and the result has shape ``(len(lams), n)``.
    One sweep of iterative refinement is applied.
    """
    lams = np.asarray(lams, dtype=complex)
    n = B.shape[0]
    M = np.eye(n, dtype=complex)[None, :, :] - lams[:, None, None] * B[None, :, :]
    rhs = np.broadcast_to(F, (lams.size, n))[..., None]
    x = np.linalg.solve(M, rhs)
    r = rhs - M @ x
    x = x + np.linalg.solve(M, r)
    return x[..., 0]


def singular_values(op):
    """Singular values ``s_1 >= s_2 >= ... >= s_n >= 0``."""
    return scipy.linalg.svdvals(op.dense)


def fredholm_determinant(op, lam):
    """``det(I - lam B)``."""
    n = op.dimension
    return complex(np.linalg.det(np.eye(n) - complex(lam) * op.dense))


def adjoint_apply(op, f):
    """``B^* f`` (conjugate transpose action)."""
    return op.dense.conj().T @ np.asarray(f, dtype=complex)


# ----------------------------------------------------------------- sectors

@dataclass(frozen=True)
class SectorEstimate:
    """Closed sector ``{z : |arg(z - vertex)| <= semi_angle}``.

    ``contained`` is False when the sampled numerical range could not be
    enclosed in a sector of semi-angle below pi; ``semi_angle`` is then pi.
    """
    vertex: float
    semi_angle: float
    samples: int
    contained: bool = True

    def contains(self, z, slack=1e-12):
        z = np.asarray(z, dtype=complex) - self.vertex
        ang = np.abs(np.angle(z))
        return (np.abs(z) == 0) | (ang <= self.semi_angle + slack)

    def to_json(self):
        return {"vertex": self.vertex, "semi_angle": self.semi_angle,
                "samples": self.samples, "contained": self.contained}


def _hermitian_part(M):
    return 0.5 * (M + M.conj().T)


def _support_extreme(B, psi):
    """Largest eigenvalue of ``Im(e^{-i psi} B)`` and its eigenvector."""
    M = np.exp(-1j * psi) * B
    H = (M - M.conj().T) / 2j
    w, V = scipy.linalg.eigh(H)
    return w[-1], V[:, -1]


def _edge_angle(B, sign):
    """Angle of the supporting ray of ``W(B)`` seen from the origin.

    Requires ``Re W(B) > 0``.  Returns ``sign * max_{z in W} sign*arg z``.
    """
    Bs = B if sign > 0 else B.conj()

    def h(psi):
        return _support_extreme(Bs, psi)[0]

    lo, hi = -np.pi / 2 + 1e-15, np.pi / 2 - 1e-15
    if h(hi) >= 0:
        return sign * np.pi / 2
    if h(lo) <= 0:
        return -sign * np.pi / 2
    psi = scipy.optimize.brentq(h, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    return sign * psi


def _quasi_random_unit(n, count, seed):
    sampler = qmc.Sobol(d=2 * n, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(count, 2))))
    u = sampler.random_base2(m)[:count]
    u = np.clip(u, 1e-12, 1 - 1e-12)
    g = _normal.ppf(u)
    v = g[:, :n] + 1j * g[:, n:]
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def estimate_sector(op, samples=None, vertex_hint=None, seed=0):
    """Estimate a sector containing the numerical range of ``B``.

    Rayleigh quotients are sampled at seeded quasi-random unit vectors, at
    the eigenvectors and at boundary points of the numerical range.  When the
    numerical range lies in the open right half-plane relative to the vertex,
    the two supporting rays are also located exactly by root finding, so the
    returned semi-angle is the smallest one for that vertex.

    Parameters
    ----------
    op : OperatorSpec
    samples : int, optional
        Number of quasi-random probe vectors (at least the dimension).
    vertex_hint : float, optional
        Vertex ``iota`` of the sector; defaults to 0.
    seed : int
        Seed of the scrambled Sobol sequence.

    Returns
    -------
    SectorEstimate
    """
    n = op.dimension
    samples = max(n, 256) if samples is None else int(samples)
    if samples < n:
        raise ValueError(f"samples={samples} must be at least the dimension {n}")
    iota = 0.0 if vertex_hint is None else float(vertex_hint)
    B = op.dense - iota * np.eye(n)

    probes = [_quasi_random_unit(n, samples, seed)]
    _, V = scipy.linalg.eig(op.dense)
    probes.append((V / np.linalg.norm(V, axis=0)).T)
    for psi in np.linspace(-np.pi, np.pi, 64, endpoint=False):
        probes.append(_support_extreme(B, psi)[1][None, :])
    X = np.vstack(probes)
    q = np.einsum("ij,jk,ik->i", X.conj(), B, X)
    big = np.abs(q) > 1e-14 * max(op.norm, 1e-300)
    theta = float(np.max(np.abs(np.angle(q[big])))) if big.any() else 0.0

    lmin = scipy.linalg.eigvalsh(_hermitian_part(B))[0]
    contained = True
    if lmin > 0:
        upper = _edge_angle(B, +1)
        lower = _edge_angle(B, -1)
        theta = max(theta, abs(upper), abs(lower))
    else:
        # dense boundary scan; the range may touch or surround the vertex
        psis = np.linspace(-np.pi, np.pi, 4096, endpoint=False)
        pts = []
        for psi in psis:
            v = _support_extreme(B, psi)[1]
            pts.append(v.conj() @ B @ v)
        pts = np.concatenate([np.array(pts), q[big]])
        pts = pts[np.abs(pts) > 1e-14 * max(op.norm, 1e-300)]
        theta = max(theta, float(np.max(np.abs(np.angle(pts)))))
        # the vertex is interior when every support value is positive
        hvals = np.array([_support_extreme(B, psi)[0] for psi in psis])
        if np.all(hvals > 0):
            contained = False
        else:
            # the arguments of W(B) form an arc; it must not wrap past +-pi
            a = np.sort(np.angle(pts))
            gaps = np.diff(np.concatenate([a, [a[0] + 2 * np.pi]]))
            if np.argmax(gaps) != gaps.size - 1:
                contained = False
    if not contained:
        theta = float(np.pi)
    return SectorEstimate(iota, min(theta, float(np.pi)), samples, contained)

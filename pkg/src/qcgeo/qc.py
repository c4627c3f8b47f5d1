"""Point classification and the distinguished line field.

A point is *isotropic* when every tangent 2-plane has the same sectional
curvature, detected here through the spread of the Schouten spectrum.  A
*quasi-constant* (QC) point carries a distinguished line xi such that
K(sigma) = H sin^2 + N cos^2 of the angle between xi and the plane; H and N
are read off the (n-1, 1) split of the Schouten spectrum:

    repeated eigenvalue = H/2,   simple eigenvalue = N - H/2.

Classification verifies the angle decomposition against actual sectional
curvatures over a deterministic family of test planes and reports the worst
deviation; points failing either the split or the decomposition are NonQC.

H and N extend smoothly across isotropic points (both equal R/(n(n-1))
there); gradient-based quantities (the leaf curvature lambda, the umbilicity
factor alpha, the n=3 integrability defect) use central finite differences
with one Richardson extrapolation on top of the exact jets.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import NearIsotropic, SignAlignmentFailure
from .metric import CompiledMetric
from .tensors import (CurvaturePack, MetricJet, _qc_split, curvature_pack,
                      metric_jet, orthonormalize_plane, plane_curvatures)

__all__ = [
    "PointClass", "QCReport", "classify_point", "classify_batch",
    "hn_fields", "hn_batch", "leaf_curvature", "integrability_check",
    "TOL_ISO", "TOL_QC", "FD_STEP",
]

TOL_ISO = 1e-7
TOL_QC = 1e-6
FD_STEP = 1e-4

# |H - N| must exceed this multiple of tol_iso before (H - N) denominators
# are trusted
NEAR_ISO_FACTOR = 10.0


class PointClass(enum.Enum):
    ISOTROPIC = "Isotropic"
    QC = "QC"
    NON_QC = "NonQC"


@dataclass(frozen=True)
class QCReport:
    classification: PointClass
    H: float
    N: float
    xi: np.ndarray | None
    decomposition_residual: float
    schouten_gap: float
    lambda_: float | None = None
    alpha: float | None = None
    tol_iso: float = TOL_ISO
    tol_qc: float = TOL_QC

    @property
    def is_qc(self) -> bool:
        return self.classification is PointClass.QC

    @property
    def is_isotropic(self) -> bool:
        return self.classification is PointClass.ISOTROPIC


def sign_normalize(xi: np.ndarray) -> np.ndarray:
    """Fix the sign of a line-field representative: the component of largest
    magnitude is made positive (batched over leading axes)."""
    idx = np.argmax(np.abs(xi), axis=-1, keepdims=True)
    lead = np.take_along_axis(xi, idx, axis=-1)
    return xi * np.where(lead < 0, -1.0, 1.0)


# --- batched spectral analysis -------------------------------------------------

@dataclass(frozen=True)
class _Analysis:
    """Vectorized spectral data for a batch of points."""

    H: np.ndarray
    N: np.ndarray
    xi: np.ndarray          # sign-normalized, g-unit; rows meaningless if iso
    iso: np.ndarray         # bool
    split_ok: np.ndarray    # bool; False where the (n-1,1) split is unclear
    jet: MetricJet
    pack: CurvaturePack


def _analyze(jet: MetricJet, pack: CurvaturePack, tol_iso: float) -> _Analysis:
    eigs = pack.schouten_eigenvalues
    scale = 1.0 + np.abs(pack.scalar)
    iso, h_val, n_val, gap, _ = _qc_split(eigs, pack.scalar, tol_iso)
    split_ok = np.asarray(~iso & (gap >= tol_iso * scale))
    gap_bottom = eigs[..., 1] - eigs[..., 0]
    gap_top = eigs[..., -1] - eigs[..., -2]
    bottom = (gap_bottom > gap_top)[..., None]
    vecs = pack.schouten_eigenvectors
    xi = np.where(bottom, vecs[..., :, 0], vecs[..., :, -1])
    return _Analysis(np.asarray(h_val), np.asarray(n_val), sign_normalize(xi),
                     np.asarray(iso), split_ok, jet, pack)


def analyze_points(cm: CompiledMetric, points, tol_iso: float = TOL_ISO) -> _Analysis:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    jet = metric_jet(cm, points)
    return _analyze(jet, curvature_pack(jet), tol_iso)


# --- decomposition residual ------------------------------------------------------

def _test_planes(n: int, xi: np.ndarray, vecs: np.ndarray, bottom: np.ndarray):
    """Deterministic plane family per point: coordinate pairs, pairs of
    horizontal eigenvectors, planes through xi, and seeded random pairs.
    Returns U, V of shape (..., P, n)."""
    batch = xi.shape[:-1]
    eye = np.eye(n)
    coord_u = [eye[i] for i in range(n) for j in range(i + 1, n)]
    coord_v = [eye[j] for i in range(n) for j in range(i + 1, n)]
    rng = np.random.default_rng(12345)
    rand = rng.standard_normal((16, 2, n))
    partners = rng.standard_normal((3, n))

    pieces_u = [np.broadcast_to(np.stack(coord_u), batch + (len(coord_u), n))]
    pieces_v = [np.broadcast_to(np.stack(coord_v), batch + (len(coord_v), n))]
    # horizontal pairs from the Schouten eigenbasis (skip the xi column)
    cluster_cols = np.where(bottom[..., None, None],
                            vecs[..., :, 1:], vecs[..., :, :-1])
    for a in range(n - 1):
        for b in range(a + 1, n - 1):
            pieces_u.append(cluster_cols[..., :, a][..., None, :])
            pieces_v.append(cluster_cols[..., :, b][..., None, :])
    # planes containing xi
    for q in partners:
        pieces_u.append(xi[..., None, :])
        pieces_v.append(np.broadcast_to(q, batch + (1, n)))
    pieces_u.append(np.broadcast_to(rand[:, 0, :], batch + (16, n)))
    pieces_v.append(np.broadcast_to(rand[:, 1, :], batch + (16, n)))
    return np.concatenate(pieces_u, axis=-2), np.concatenate(pieces_v, axis=-2)


def _decomposition_residual(ana: _Analysis) -> np.ndarray:
    """max over test planes of |K(sigma) - (H sin^2 + N cos^2)| per point."""
    g = ana.jet.g
    n = ana.jet.n
    eigs = ana.pack.schouten_eigenvalues
    bottom = (eigs[..., 1] - eigs[..., 0]) > (eigs[..., -1] - eigs[..., -2])
    u_raw, v_raw = _test_planes(n, ana.xi, ana.pack.schouten_eigenvectors, bottom)
    gp = g[..., None, :, :]
    u1, u2 = orthonormalize_plane(gp, u_raw, v_raw)
    ks = plane_curvatures(gp, ana.pack.riemann[..., None, :, :, :, :], u1, u2)
    gxi = np.einsum("...ij,...j->...i", g, ana.xi)
    cos2 = (np.einsum("...pi,...i->...p", u1, gxi) ** 2
            + np.einsum("...pi,...i->...p", u2, gxi) ** 2)
    h_term = ana.H[..., None]
    n_term = ana.N[..., None]
    pred = h_term + (n_term - h_term) * cos2
    return np.abs(ks - pred).max(axis=-1)


# --- public classification --------------------------------------------------------

def _build_report(ana: _Analysis, residual, index, tol_iso, tol_qc) -> QCReport:
    h_val = float(ana.H[index])
    n_val = float(ana.N[index])
    gap = abs(n_val - h_val)
    res = float(residual[index])
    if ana.iso[index]:
        return QCReport(PointClass.ISOTROPIC, h_val, n_val, None, res, gap,
                        tol_iso=tol_iso, tol_qc=tol_qc)
    xi = np.array(ana.xi[index])
    if not ana.split_ok[index] or res > tol_qc:
        return QCReport(PointClass.NON_QC, h_val, n_val, xi, res, gap,
                        tol_iso=tol_iso, tol_qc=tol_qc)
    return QCReport(PointClass.QC, h_val, n_val, xi, res, gap,
                    tol_iso=tol_iso, tol_qc=tol_qc)


def classify_point(jet: MetricJet, pack: CurvaturePack,
                   tol_iso: float = TOL_ISO, tol_qc: float = TOL_QC) -> QCReport:
    """Classify a single point as Isotropic / QC / NonQC."""
    if jet.g.ndim != 2:
        raise ValueError("classify_point expects a single-point jet")
    ana = _analyze(jet, pack, tol_iso)
    residual = _decomposition_residual(ana)
    return _build_report(ana, residual, (), tol_iso, tol_qc)


def classify_batch(cm: CompiledMetric, points,
                   tol_iso: float = TOL_ISO, tol_qc: float = TOL_QC):
    """Classify many points at once; returns (reports, analysis)."""
    ana = analyze_points(cm, points, tol_iso)
    residual = _decomposition_residual(ana)
    reports = [_build_report(ana, residual, i, tol_iso, tol_qc)
               for i in range(len(np.atleast_1d(ana.H)))]
    return reports, ana


def hn_batch(cm: CompiledMetric, points, tol_iso: float = TOL_ISO):
    """Smoothly extended (H, N) arrays for a batch of points."""
    ana = analyze_points(cm, points, tol_iso)
    return ana.H, ana.N


def hn_fields(cm: CompiledMetric, p, tol_iso: float = TOL_ISO):
    """Smooth-extension values of the curvature pair at one point:
    eigen-extracted off the isotropic set, R/(n(n-1)) on it."""
    h_val, n_val = hn_batch(cm, np.asarray(p, dtype=float)[None, :], tol_iso)
    return float(h_val[0]), float(n_val[0])


# --- finite-difference layers -----------------------------------------------------

def _gradient_stencil(p: np.ndarray, step: float) -> np.ndarray:
    """Points p +- h e_i and p +- h/2 e_i, shape (n, 4, n)."""
    n = p.shape[0]
    eye = np.eye(n)
    offsets = np.stack([eye * step, -eye * step,
                        eye * (step / 2), -eye * (step / 2)], axis=1)
    return p + offsets


def _richardson(plus_h, minus_h, plus_h2, minus_h2, step: float):
    d_h = (plus_h - minus_h) / (2.0 * step)
    d_h2 = (plus_h2 - minus_h2) / step
    return (4.0 * d_h2 - d_h) / 3.0


def gradient_of_h(cm: CompiledMetric, p: np.ndarray, fd_step: float,
                  tol_iso: float = TOL_ISO) -> np.ndarray:
    """Coordinate gradient dH by Richardson-extrapolated central differences
    of the smoothly extended H field."""
    stencil = _gradient_stencil(p, fd_step)
    n = p.shape[0]
    h_vals, _ = hn_batch(cm, stencil.reshape(-1, n), tol_iso)
    h_vals = h_vals.reshape(n, 4)
    return _richardson(h_vals[:, 0], h_vals[:, 1], h_vals[:, 2], h_vals[:, 3],
                       fd_step)


def leaf_curvature(cm: CompiledMetric, p, fd_step: float = FD_STEP,
                   tol_iso: float = TOL_ISO, tol_qc: float = TOL_QC):
    """Leaf intrinsic curvature lambda and umbilicity factor alpha at a QC
    point: alpha = xi(H) / (2(N - H)), lambda = H + alpha^2."""
    p = np.asarray(p, dtype=float)
    ana = analyze_points(cm, p[None, :], tol_iso)
    h_val, n_val = float(ana.H[0]), float(ana.N[0])
    if ana.iso[0] or abs(h_val - n_val) <= NEAR_ISO_FACTOR * tol_iso:
        raise NearIsotropic(
            f"|H-N| = {abs(h_val - n_val):.3e} too small at {tuple(p)}")
    grad = gradient_of_h(cm, p, fd_step, tol_iso)
    xi_h = float(grad @ ana.xi[0])
    alpha = xi_h / (2.0 * (n_val - h_val))
    return h_val + alpha * alpha, alpha


def aligned_xi(cm: CompiledMetric, points, reference: np.ndarray,
               tol_iso: float = TOL_ISO):
    """xi at each point, sign-aligned to ``reference``; raises when the
    alignment is ambiguous (line turning by nearly a right angle)."""
    ana = analyze_points(cm, points, tol_iso)
    xi = ana.xi
    dots = xi @ reference
    norms = np.linalg.norm(xi, axis=-1) * np.linalg.norm(reference)
    if np.any(np.abs(dots) < 0.1 * norms):
        raise SignAlignmentFailure("xi cannot be coherently oriented here")
    return xi * np.where(dots < 0, -1.0, 1.0)[..., None], ana


def horizontal_basis(jet: MetricJet, pack: CurvaturePack, xi: np.ndarray):
    """g-orthonormal basis of the hyperplane orthogonal to xi (single point),
    taken from the Schouten eigenbasis."""
    vecs = pack.schouten_eigenvectors
    gxi = jet.g @ xi
    cols = [vecs[:, a] for a in range(jet.n)]
    cols.sort(key=lambda cvec: abs(cvec @ gxi))
    return np.stack(cols[:jet.n - 1])


def integrability_check(cm: CompiledMetric, p, fd_step: float = FD_STEP,
                        tol_iso: float = TOL_ISO) -> float:
    """|d eta (X, Y)| for a g-orthonormal basis {X, Y} of the horizontal
    plane at a QC point of a 3-dimensional chart, with eta the unit covector
    of the distinguished line.  Zero means the horizontal distribution is
    integrable at p."""
    if cm.n != 3:
        raise ValueError("integrability check is specific to n = 3")
    p = np.asarray(p, dtype=float)
    center = analyze_points(cm, p[None, :], tol_iso)
    if center.iso[0]:
        raise NearIsotropic(f"point {tuple(p)} is isotropic")
    xi0 = center.xi[0]

    stencil = _gradient_stencil(p, fd_step)  # (3, 4, 3)
    xi_stencil, ana = aligned_xi(cm, stencil.reshape(-1, 3), xi0, tol_iso)
    eta = np.einsum("...ij,...j->...i", ana.jet.g, xi_stencil).reshape(3, 4, 3)
    deta_jacobian = _richardson(eta[:, 0], eta[:, 1], eta[:, 2], eta[:, 3],
                                fd_step)  # [i, j] = d_i eta_j
    deta = deta_jacobian - deta_jacobian.T

    jet0 = center.jet.take(0)
    basis = horizontal_basis(jet0, center.pack.take(0), xi0)
    return float(abs(basis[0] @ deta @ basis[1]))

"""Nystrom discretisation of the single layer and NP operators on a graded mesh.

This path never touches bipolar coordinates or Fourier multipliers: it
integrates the kernels

    S[phi](x)  = (1/2pi) int log|x - y| phi(y) d sigma(y)
    K*[phi](x) = (1/2pi) int (x - y).nu_x / |x - y|^2 phi(y) d sigma(y)

directly with composite Gauss-Legendre rules.  Each arc is split at its
midpoint and every half is graded algebraically toward its corner.  Nodes are
stored as ``corner + offset`` so that differences between points near the
same corner keep full relative accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

from .geometry import MINUS, PLUS, Geometry, GeometryError

DEFAULT_THETA0_FLOOR = 0.05


class MeshError(ValueError):
    pass


class OracleError(RuntimeError):
    """Numerical failure of the oracle (e.g. -S not positive definite)."""


@dataclass(frozen=True)
class NystromMesh:
    geometry: Geometry
    panels: int  # per arc, including corner refinement
    grading: float
    order: int  # Gauss points per panel
    points: np.ndarray  # complex
    normals: np.ndarray  # complex, outward unit
    weights: np.ndarray  # arc-length weights
    arc: np.ndarray  # 0 = plus (lower), 1 = minus (upper)
    corner: np.ndarray  # +1 / -1: sign of the nearer corner (+-alpha)
    offset: np.ndarray  # point - corner, accurate near the corner
    angle: np.ndarray  # polar angle about the arc's circle centre (unwrapped per arc)
    panel: np.ndarray  # global panel index
    panel_mid: np.ndarray  # per panel: mid angle
    panel_half: np.ndarray  # per panel: half-width in angle
    panel_arc: np.ndarray  # per panel: arc id
    panel_corner: np.ndarray  # per panel: sign of the nearer corner
    panel_sigma: np.ndarray  # per panel: mid angular distance from that corner
    edges: np.ndarray  # panel edges of a half arc, as angles from the corner

    @property
    def size(self) -> int:
        return self.points.size

    def sides(self) -> np.ndarray:
        return np.where(self.arc == 0, PLUS, MINUS)

    def bipolar_xi(self) -> np.ndarray:
        """xi coordinate of every node, from the corner offsets."""
        al = self.geometry.alpha
        # right corner: z - alpha = off, (z + alpha)/(z - alpha) = 1 + 2 alpha/off
        # left corner:  z + alpha = off, ratio = off/(off - 2 alpha)
        right = self.corner > 0
        ratio = np.where(right, 1.0 + 2.0 * al / self.offset, self.offset / (self.offset - 2.0 * al))
        return np.log(np.abs(ratio))

    def integrate(self, values) -> complex:
        return complex(np.sum(self.weights * np.asarray(values)))


def build_mesh(
    g: Geometry,
    M: int = 128,
    beta: float = 3.0,
    *,
    order: int = 8,
    corner_levels: int = 8,
    corner_ratio: float = 0.25,
    theta0_floor: float = DEFAULT_THETA0_FLOOR,
) -> NystromMesh:
    """Graded composite-Gauss mesh with ``M`` panels per arc.

    The mesh is symmetric under both reflections x1 -> -x1 and x2 -> -x2.
    """
    if g.theta0 < theta0_floor:
        raise GeometryError(
            f"theta0 = {g.theta0} is below the oracle floor {theta0_floor}; "
            "the NP operator is not bounded in the touching limit"
        )
    if M < 16 or M % 2:
        raise MeshError(f"need an even number of panels per arc >= 16, got {M}")
    if beta < 1:
        raise MeshError(f"grading exponent must be >= 1, got {beta}")
    span = math.pi - g.theta0  # angular length of a half arc
    edges = span * (np.arange(M // 2 + 1) / (M // 2)) ** beta  # angle from the corner
    if corner_levels:
        # split the innermost panel geometrically toward the corner
        inner = edges[1] * corner_ratio ** np.arange(corner_levels, 0, -1)
        edges = np.concatenate([[0.0], inner, edges[1:]])
    if edges[1] < 1e-12:
        raise MeshError("corner refinement below the angular resolution of the node bookkeeping")
    return _mesh_from_edges(g, edges, float(beta), order)


def refine_mesh(
    mesh: NystromMesh, factor: int = 2, corner_levels: int = 0, corner_ratio: float = 0.25
) -> NystromMesh:
    """Nested refinement: every panel split into ``factor`` equal sub-panels.

    The innermost sub-panel is further split geometrically toward the corner
    when ``corner_levels`` is positive.
    """
    e = mesh.edges
    t = np.arange(factor) / factor
    fine = np.append((e[:-1, None] + np.diff(e)[:, None] * t[None, :]).ravel(), e[-1])
    if corner_levels:
        inner = fine[1] * corner_ratio ** np.arange(corner_levels, 0, -1)
        fine = np.concatenate([[0.0], inner, fine[1:]])
    return _mesh_from_edges(mesh.geometry, fine, mesh.grading, mesh.order)


def _mesh_from_edges(g: Geometry, edges: np.ndarray, beta: float, order: int) -> NystromMesh:
    span = math.pi - g.theta0
    K = edges.size - 1  # panels per half arc
    gx, gw = np.polynomial.legendre.leggauss(order)

    # lower arc, centre c = -i d; right corner at angle om_r = pi/2 - theta0,
    # arc runs clockwise through -pi/2 to the left corner
    d = g.a * math.cos(g.theta0)
    c = complex(0.0, -d)
    om_r = 0.5 * math.pi - g.theta0
    e_r = complex(math.cos(om_r), math.sin(om_r))
    om_l = om_r - 2 * span
    e_l = complex(math.cos(om_l), math.sin(om_l))

    sig_l, sig_h = edges[:-1], edges[1:]
    mids = 0.5 * (sig_l + sig_h)
    halves = 0.5 * (sig_h - sig_l)
    sig = (mids[:, None] + halves[:, None] * gx[None, :]).ravel()  # from corner
    w = (halves[:, None] * gw[None, :]).ravel() * g.a

    # right half: angle om_r - sig; left half: angle om_l + sig
    off_r = g.a * e_r * _expm1i(-sig)
    off_l = g.a * e_l * _expm1i(sig)
    ang_r = om_r - sig
    ang_l = om_l + sig
    # order nodes along the arc from the right corner to the left corner
    ang = np.concatenate([ang_r, ang_l[::-1]])
    off = np.concatenate([off_r, off_l[::-1]])
    corner = np.concatenate([np.ones_like(sig), -np.ones_like(sig)])
    wt = np.concatenate([w, w[::-1]])
    pan_local = np.concatenate([np.repeat(np.arange(K), order), np.repeat(np.arange(K, 2 * K), order)])
    pmid = np.concatenate([om_r - mids, (om_l + mids)[::-1]])
    phalf = np.concatenate([halves, halves[::-1]])

    pts_plus = corner * g.alpha + off
    nrm_plus = np.exp(1j * ang)

    n1 = pts_plus.size
    points = np.concatenate([pts_plus, np.conj(pts_plus)])
    normals = np.concatenate([nrm_plus, np.conj(nrm_plus)])
    weights = np.concatenate([wt, wt])
    arc = np.concatenate([np.zeros(n1, int), np.ones(n1, int)])
    corners = np.concatenate([corner, corner])
    offsets = np.concatenate([off, np.conj(off)])
    # angles of the upper arc about its own centre are the negatives
    angles = np.concatenate([ang, -ang])
    panel = np.concatenate([pan_local, pan_local + 2 * K])
    panel_mid = np.concatenate([pmid, -pmid])
    panel_half = np.concatenate([phalf, phalf])
    panel_arc = np.concatenate([np.zeros(2 * K, int), np.ones(2 * K, int)])
    pc = np.concatenate([np.ones(K), -np.ones(K)])
    panel_corner = np.concatenate([pc, pc])
    ps = np.concatenate([mids, mids[::-1]])
    panel_sigma = np.concatenate([ps, ps])
    return NystromMesh(
        g, 2 * K, float(beta), order, points, normals, weights, arc, corners, offsets,
        angles, panel, panel_mid, panel_half, panel_arc, panel_corner, panel_sigma, edges,
    )


def _expm1i(x):
    # e^{ix} - 1 without cancellation for small x
    return -2.0 * np.sin(0.5 * x) ** 2 + 1j * np.sin(x)


def _panel_offsets(mesh: NystromMesh, p: int, t: np.ndarray) -> np.ndarray:
    """Offsets from the panel's corner of the points at local parameters t.

    ``t`` runs in the direction of increasing stored angle, like the nodes.
    """
    g = mesh.geometry
    span = math.pi - g.theta0
    om_r = 0.5 * math.pi - g.theta0
    ang = mesh.panel_mid[p] + mesh.panel_half[p] * t
    if mesh.panel_arc[p] == 0:
        if mesh.panel_corner[p] > 0:
            sig = om_r - ang
            off = g.a * complex(math.cos(om_r), math.sin(om_r)) * _expm1i(-sig)
        else:
            om_l = om_r - 2 * span
            sig = ang - om_l
            off = g.a * complex(math.cos(om_l), math.sin(om_l)) * _expm1i(sig)
        return off
    # upper arc: mirror image of the lower one, angles negated
    mirror = ang * -1.0
    if mesh.panel_corner[p] > 0:
        sig = om_r - mirror
        off = g.a * complex(math.cos(om_r), math.sin(om_r)) * _expm1i(-sig)
    else:
        om_l = om_r - 2 * span
        sig = mirror - om_l
        off = g.a * complex(math.cos(om_l), math.sin(om_l)) * _expm1i(sig)
    return np.conj(off)


def _pairwise_difference(mesh: NystromMesh, rows=None) -> np.ndarray:
    """x_i - y_j, using corner offsets when both lie next to the same corner."""
    idx = np.arange(mesh.size) if rows is None else np.asarray(rows)
    same = mesh.corner[idx][:, None] == mesh.corner[None, :]
    diff_off = mesh.offset[idx][:, None] - mesh.offset[None, :]
    diff_pts = mesh.points[idx][:, None] - mesh.points[None, :]
    return np.where(same, diff_off, diff_pts)


def _log_moments(x: np.ndarray, n: int) -> np.ndarray:
    """J_k(x) = int_{-1}^{1} t^k log|t - x| dt for k < n; shape (n, len(x)).

    Uses int u^m log|u| du = u^{m+1} (log|u|/(m+1) - 1/(m+1)^2) after the
    shift u = t - x, expanded binomially.  Meant for |x| <= 3.
    """
    x = np.asarray(x, dtype=float)

    def prim(u, m):
        au = np.abs(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(au > 0, np.log(np.where(au > 0, au, 1.0)), 0.0)
        return u ** (m + 1) * (lg / (m + 1) - 1.0 / (m + 1) ** 2)

    out = np.zeros((n, x.size))
    hi, lo = 1.0 - x, -1.0 - x
    P = [prim(hi, m) - prim(lo, m) for m in range(n)]
    for k in range(n):
        acc = np.zeros_like(x)
        for m in range(k + 1):
            acc += math.comb(k, m) * x ** (k - m) * P[m]
        out[k] = acc
    return out


def _product_weights(x: np.ndarray, order: int) -> np.ndarray:
    """Weights W_j(x) with int_{-1}^{1} f(t) log|t - x| dt ~ sum_j W_j f(t_j)."""
    gx, _ = np.polynomial.legendre.leggauss(order)
    V = np.vander(gx, order, increasing=True)  # V[j, k] = t_j^k
    J = _log_moments(x, order)
    return np.linalg.solve(V.T, J).T  # (len(x), order)


@dataclass(frozen=True)
class NystromSystem:
    mesh: NystromMesh
    S: np.ndarray
    K: np.ndarray  # K* acting on nodal values

    @property
    def geometry(self) -> Geometry:
        return self.mesh.geometry

    def apply_S(self, phi) -> np.ndarray:
        return self.S @ np.asarray(phi)

    def apply_K(self, phi) -> np.ndarray:
        return self.K @ np.asarray(phi)

    def double_layer_adjoint(self) -> np.ndarray:
        """Matrix of K, the L2(d sigma)-adjoint of K*."""
        w = self.mesh.weights
        return (self.K.T * w[None, :]) / w[:, None]

    def hstar_inner(self, phi, psi) -> complex:
        """<phi, psi>_{H*} = -<phi, S psi>_{L2}, conjugate-linear in psi."""
        phi = np.asarray(phi)
        psi = np.asarray(psi)
        return complex(-np.sum(self.mesh.weights * phi * np.conj(self.S @ psi)))

    def gram(self) -> np.ndarray:
        G = -(self.mesh.weights[:, None] * self.S)
        return 0.5 * (G + G.T)

    def calderon_residual(self) -> float:
        """||S K* - K S|| / ||S|| as operators on L2(d sigma).

        The matrices act on nodal values, so both are conjugated by
        W^(1/2) before taking Frobenius norms; otherwise rows at the tiny
        corner nodes dominate the plain matrix norm.
        """
        Kd = self.double_layer_adjoint()
        R = self.S @ self.K - Kd @ self.S
        r = np.sqrt(self.mesh.weights)
        scale = r[:, None] / r[None, :]
        return float(np.linalg.norm(R * scale) / np.linalg.norm(self.S * scale))

    def kernel_asymmetry(self) -> float:
        """Relative asymmetry of log|x_i - x_j| over node pairs off the diagonal."""
        m = self.mesh
        d = _pairwise_difference(m)
        np.fill_diagonal(d, 1.0)
        L = np.log(np.abs(d))
        return float(np.linalg.norm(L - L.T) / np.linalg.norm(L))

    def quadrature_asymmetry(self) -> float:
        """Relative asymmetry of S W^-1, caused by the product-integration weights."""
        X = self.S / self.mesh.weights[None, :]
        return float(np.linalg.norm(X - X.T) / np.linalg.norm(X))

    def solve_resolvent(self, lam: complex, rhs) -> np.ndarray:
        """Solve (lam I - K*) phi = rhs on the mesh."""
        A = lam * np.eye(self.mesh.size) - self.K
        return np.linalg.solve(A, np.asarray(rhs, dtype=complex))

    def single_layer_at(self, phi, z) -> np.ndarray:
        """Off-boundary single layer of nodal density ``phi`` at points ``z``.

        Plain Gauss quadrature; accurate a few panel lengths away from the
        boundary.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        m = self.mesh
        out = np.empty(z.shape, dtype=complex)
        wphi = m.weights * np.asarray(phi)
        for k0 in range(0, z.size, 256):
            zz = z[k0:k0 + 256]
            r = np.abs(zz[:, None] - m.points[None, :])
            out[k0:k0 + 256] = np.log(r) @ wphi / (2 * math.pi)
        return out

    def export(self, path_prefix: str) -> None:
        """Write nodes/weights/normals as CSV and the matrices as .npy files."""
        m = self.mesh
        table = np.column_stack(
            [m.points.real, m.points.imag, m.normals.real, m.normals.imag, m.weights, m.arc]
        )
        np.savetxt(
            path_prefix + "_mesh.csv", table, delimiter=",", fmt="%.17g",
            header="x1,x2,n1,n2,weight,arc", comments="",
        )
        np.save(path_prefix + "_S.npy", self.S)
        np.save(path_prefix + "_K.npy", self.K)


def assemble(g: Geometry, mesh: NystromMesh) -> NystromSystem:
    n = mesh.size
    w = mesh.weights
    a = g.a
    S = np.empty((n, n))
    K = np.empty((n, n))
    gx, gw = np.polynomial.legendre.leggauss(mesh.order)
    q = mesh.order
    block = 512
    for r0 in range(0, n, block):
        rows = np.arange(r0, min(n, r0 + block))
        dz = _pairwise_difference(mesh, rows)
        same = mesh.arc[rows][:, None] == mesh.arc[None, :]
        r2 = np.abs(dz) ** 2
        nx = mesh.normals[rows][:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            kern = (dz.real * nx.real + dz.imag * nx.imag) / r2
        kern = np.where(same, 1.0 / (2.0 * a), kern)
        K[rows] = kern * w[None, :] / (2 * math.pi)

        # single layer: smooth cross-arc part directly; same arc via angles
        dom = mesh.angle[rows][:, None] - mesh.angle[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            lg_cross = np.log(np.sqrt(r2))
            ad = np.abs(dom)
            smooth = np.where(
                ad > 0, np.log(2.0 * a * np.sin(0.5 * ad) / np.where(ad > 0, ad, 1.0)), math.log(a)
            )
            lg_same = np.log(ad) + smooth
        lg = np.where(same, lg_same, lg_cross)
        S[rows] = lg * w[None, :] / (2 * math.pi)

        # product integration for same-arc panels close to the target
        for p in range(2 * mesh.panels):
            # node indices of panel p
            cols = np.nonzero(mesh.panel == p)[0]
            on_arc = mesh.arc[rows] == mesh.panel_arc[p]
            hp = mesh.panel_half[p]
            x = (mesh.angle[rows] - mesh.panel_mid[p]) / hp
            near = on_arc & (np.abs(x) <= 3.0)
            if not np.any(near):
                continue
            ri = rows[near]
            # local parameter t runs with the angle; node order within the
            # panel follows the Gauss order in the angle variable
            tj = (mesh.angle[cols] - mesh.panel_mid[p]) / hp
            order_idx = np.argsort(tj)
            W = _product_weights(x[near], q)  # weights for ascending Gauss nodes
            Wc = np.empty_like(W)
            Wc[:, order_idx] = W
            gw_c = np.empty(q)
            gw_c[order_idx] = gw
            dom_p = mesh.angle[ri][:, None] - mesh.angle[cols][None, :]
            ad = np.abs(dom_p)
            with np.errstate(divide="ignore", invalid="ignore"):
                smooth = np.where(
                    ad > 0, np.log(2.0 * a * np.sin(0.5 * ad) / np.where(ad > 0, ad, 1.0)), math.log(a)
                )
            val = a * hp * (gw_c[None, :] * math.log(hp) + Wc) + w[cols][None, :] * smooth
            S[np.ix_(ri, cols)] = val / (2 * math.pi)
    _cross_arc_corrections(mesh, S, K)
    return NystromSystem(mesh, S, K)


def _cross_arc_corrections(mesh: NystromMesh, S: np.ndarray, K: np.ndarray, ratio: float = 3.0):
    """Recompute entries for targets close to a panel on the other arc.

    Near a corner the two arcs approach each other, so plain Gauss rules lose
    accuracy when the target's distance to a panel is comparable to the panel
    length.  Those entries are replaced by subdivided rules acting on the
    panel's interpolating polynomial.
    """
    g = mesh.geometry
    q = mesh.order
    gx, _ = np.polynomial.legendre.leggauss(q)
    fx, fw = np.polynomial.legendre.leggauss(2 * q)
    for p in range(2 * mesh.panels):
        cols = np.nonzero(mesh.panel == p)[0]
        tj = (mesh.angle[cols] - mesh.panel_mid[p]) / mesh.panel_half[p]
        cols = cols[np.argsort(tj)]
        plen = 2 * mesh.panel_half[p] * g.a
        other = mesh.arc != mesh.panel_arc[p]
        same_c = mesh.corner == mesh.panel_corner[p]
        cand = np.nonzero(other & same_c)[0]
        if cand.size == 0:
            continue
        dz = mesh.offset[cand][:, None] - mesh.offset[cols][None, :]
        dist = np.min(np.abs(dz), axis=1)
        near = dist < ratio * plen
        if not np.any(near):
            continue
        rows = cand[near]
        dmin = dist[near]
        nsub = int(min(256, max(2, math.ceil(4 * plen / np.min(dmin)))))
        edges = np.linspace(-1.0, 1.0, nsub + 1)
        t = ((edges[:-1] + edges[1:])[:, None] / 2 + (np.diff(edges)[:, None] / 2) * fx[None, :]).ravel()
        wt = ((np.diff(edges)[:, None] / 2) * fw[None, :]).ravel() * mesh.panel_half[p] * g.a
        L = _lagrange_matrix(gx, t)
        yoff = _panel_offsets(mesh, p, t)
        d = mesh.offset[rows][:, None] - yoff[None, :]
        r2 = np.abs(d) ** 2
        nx = mesh.normals[rows][:, None]
        kern = (d.real * nx.real + d.imag * nx.imag) / r2
        K[np.ix_(rows, cols)] = (kern * wt[None, :]) @ L / (2 * math.pi)
        S[np.ix_(rows, cols)] = (0.5 * np.log(r2) * wt[None, :]) @ L / (2 * math.pi)


def _householder_complement(v: np.ndarray) -> np.ndarray:
    """Columns spanning the orthogonal complement of unit vector v."""
    n = v.size
    e = np.zeros(n)
    e[0] = 1.0
    u = v - e if v[0] < 0.5 else v + e
    u = u / np.linalg.norm(u)
    H = np.eye(n) - 2.0 * np.outer(u, u)
    # H maps v to -+e0, so the other columns span the complement of v
    return H[:, 1:]


def interpolation_matrix(coarse: NystromMesh, fine: NystromMesh) -> scipy.sparse.csr_matrix:
    """Values on ``fine`` of the panelwise Lagrange interpolant of nodal data on ``coarse``.

    ``fine`` must be nested in ``coarse`` (see ``refine_mesh``).
    """
    gx, _ = np.polynomial.legendre.leggauss(coarse.order)
    rows, cols, vals = [], [], []
    for p in range(2 * coarse.panels):
        c = np.nonzero(coarse.panel == p)[0]
        c = c[np.argsort(coarse.angle[c])]
        mid, half = coarse.panel_mid[p], coarse.panel_half[p]
        f = np.nonzero(
            (fine.arc == coarse.panel_arc[p]) & (np.abs(fine.angle - mid) <= half * (1 + 1e-12))
        )[0]
        L = _lagrange_matrix(gx, (fine.angle[f] - mid) / half)
        rows.append(np.repeat(f, c.size))
        cols.append(np.tile(c, f.size))
        vals.append(L.ravel())
    P = scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(fine.size, coarse.size),
    )
    if not np.allclose(np.asarray(P.sum(axis=1)).ravel(), 1.0):
        raise MeshError("fine mesh is not nested in the coarse one")
    return P


def galerkin_pencil(sys: NystromSystem, refine: int = 2, corner_levels: int = 4):
    """H* Gram matrix G, K* form A and int K*[l_j] for the panel Lagrange basis.

    With l_i the interpolating polynomial of node i,
    G_ij = -int S[l_i] l_j and A_ij = -int S[l_i] K*[l_j], and the outer
    integrals run over a nested mesh ``refine`` times finer.  Using the
    Nystrom product S K* directly integrates K*[l_j] only at the coarse
    nodes, which is unresolved next to a corner and lets spurious
    corner-localised eigenvalues leave [-b, b].
    """
    fine = refine_mesh(sys.mesh, refine, corner_levels)
    fs = assemble(sys.geometry, fine)
    P = interpolation_matrix(sys.mesh, fine)
    SP = np.asarray((P.T @ fs.S.T).T)
    KP = np.asarray((P.T @ fs.K.T).T)
    del fs
    WSP = SP * fine.weights[:, None]
    G = -np.asarray((P.T @ WSP)).T
    A = -(WSP.T @ KP)
    kint = fine.weights @ KP  # int K*[l_j], equal to w_j / 2 up to quadrature error
    return A, G, kint


def _scaled_problem(sys: NystromSystem, refine: int = 2, corner_levels: int = 4):
    """Symmetric pencil (A, G) representing K* in the -S inner product.

    Mean-zero densities form a K*-invariant subspace, and on its complement
    K* has the eigenvalue 1/2.  Instead of restricting to the subspace, the
    Gram matrix is augmented by c (int phi)(int psi), which makes it positive
    definite everywhere and keeps K* self-adjoint because
    int K*[phi] = (1/2) int phi.  The extra eigenvalue 1/2 is removed after
    the solve.  Rows and columns are scaled to give G a unit diagonal: the
    pencil's eigenvalues are unchanged and the Cholesky factorisation stays
    stable on strongly graded meshes.
    """
    m = sys.mesh
    w = m.weights
    diam = float(np.max(np.abs(m.points)) * 2)
    c = (abs(math.log(diam)) + 3.0) / math.pi
    A, G, kint = galerkin_pencil(sys, refine, corner_levels)
    G = 0.5 * (G + G.T) + c * np.outer(w, w)
    A = A + c * np.outer(w, kint)
    A = 0.5 * (A + A.T)
    d = 1.0 / np.sqrt(np.abs(np.diag(G)))
    return d, A * np.outer(d, d), G * np.outer(d, d)


def _reflections(mesh: NystromMesh):
    """Node permutations for x2 -> -x2 and x1 -> -x1, and the orbit representatives."""
    n1 = mesh.size // 2
    i = np.arange(mesh.size)
    loc = i % n1
    r2 = np.where(i < n1, i + n1, i - n1)
    r1 = (i - loc) + (n1 - 1 - loc)
    return r1, r2, np.arange(n1 // 2)


def _sector_blocks(X: np.ndarray, mesh: NystromMesh):
    """Blocks of a reflection-invariant matrix in the four symmetry sectors.

    Sector (e1, e2) holds densities with phi(R1 x) = e1 phi(x) and
    phi(R2 x) = e2 phi(x); the basis vectors are orthonormal orbit sums.
    """
    r1, r2, reps = _reflections(mesh)
    images = [reps, r1[reps], r2[reps], r1[r2[reps]]]
    out = {}
    for e1 in (1, -1):
        for e2 in (1, -1):
            chi = [1, e1, e2, e1 * e2]
            B = np.zeros((reps.size, reps.size))
            for cg, gi in zip(chi, images):
                for ch, hj in zip(chi, images):
                    B += (cg * ch) * X[np.ix_(gi, hj)]
            out[(e1, e2)] = 0.25 * B
    return out, images


def oracle_spectrum(
    sys: NystromSystem, *, refine: int = 2, corner_levels: int = 4, return_vectors: bool = False
):
    """Eigenvalues of K* on mean-zero densities, symmetrised in the -S inner product.

    The pencil is split into the four sectors of the mesh's reflection
    symmetry, which leaves the eigenvalues unchanged and cuts the cost of the
    dense solve sixteenfold.  The constant mode (eigenvalue 1/2) lives in the
    fully even sector and is removed there.
    """
    m = sys.mesh
    d, A, G = _scaled_problem(sys, refine, corner_levels)
    Ab, images = _sector_blocks(A, m)
    Gb, _ = _sector_blocks(G, m)
    del A, G
    vals, vecs = [], []
    for key in Ab:
        try:
            if return_vectors:
                v, V = scipy.linalg.eigh(Ab[key], Gb[key])
            else:
                v = scipy.linalg.eigh(Ab[key], Gb[key], eigvals_only=True)
        except np.linalg.LinAlgError as exc:
            raise OracleError("-S Gram matrix is not positive definite on mean-zero densities") from exc
        if key == (1, 1):
            if abs(v[-1] - 0.5) > 1e-2:
                raise OracleError(f"expected the eigenvalue 1/2 of the constant mode, got {v[-1]}")
            v = v[:-1]
            if return_vectors:
                V = V[:, :-1]
        vals.append(v)
        if return_vectors:
            chi = [1, key[0], key[1], key[0] * key[1]]
            full = np.zeros((m.size, v.size))
            for c, gi in zip(chi, images):
                full[gi] = 0.5 * c * V
            vecs.append(full)
    vals = np.concatenate(vals)
    order = np.argsort(vals)
    if return_vectors:
        return vals[order], (d[:, None] * np.concatenate(vecs, axis=1))[:, order]
    return vals[order]


def gram_eigenvalues(sys: NystromSystem) -> np.ndarray:
    """Eigenvalues of the -S Gram matrix restricted to mean-zero densities."""
    m = sys.mesh
    G = -(m.weights[:, None] * sys.S)
    G = 0.5 * (G + G.T)
    v = m.weights / np.linalg.norm(m.weights)
    Q = _householder_complement(v)
    return np.linalg.eigvalsh(Q.T @ G @ Q)


def jump_check(sys: NystromSystem, phi, eps: float | None = None) -> float:
    """Max relative residual of the jump relations for the discrete single layer.

    The single layer of ``phi`` is evaluated at x +- k eps nu (k = 1, 2) and
    differentiated along the normal by one-sided second-order differences;
    the results are compared with (+-1/2 I + K*) phi.  Only nodes whose
    distance to the corners exceeds 20 eps and whose nearest panel is longer
    than 50 eps are used, so the off-boundary quadrature stays accurate.
    """
    m = sys.mesh
    g = m.geometry
    eps = 1e-4 * g.a if eps is None else eps
    phi = np.asarray(phi, dtype=complex)
    Kphi = sys.K @ phi
    panel_len = (2 * m.panel_half * g.a)[m.panel]
    ok = (np.abs(m.offset) > 20 * eps) & (panel_len > 50 * eps)
    # the interior side near the boundary is covered by two disks only
    # away from the corners, which the mask above enforces
    x, nu = m.points[ok], m.normals[ok]

    def field(z):
        return _single_layer_near(sys, phi, z)

    u_e1, u_e2 = field(x + eps * nu), field(x + 2 * eps * nu)
    u_i1, u_i2 = field(x - eps * nu), field(x - 2 * eps * nu)
    u_0 = sys.S[ok] @ phi
    d_ext = (-3 * u_0 + 4 * u_e1 - u_e2) / (2 * eps)
    d_int = (3 * u_0 - 4 * u_i1 + u_i2) / (2 * eps)
    ref_ext = 0.5 * phi[ok] + Kphi[ok]
    ref_int = -0.5 * phi[ok] + Kphi[ok]
    scale = np.max(np.abs(phi))
    return float(max(np.max(np.abs(d_ext - ref_ext)), np.max(np.abs(d_int - ref_int))) / scale)


def _single_layer_near(sys: NystromSystem, phi, z) -> np.ndarray:
    """Single layer at points close to the boundary.

    Each panel is refined by splitting it into sub-panels sized to the
    distance from the target, with the density interpolated by the panel's
    Lagrange polynomial in the angle variable.
    """
    m = sys.mesh
    g = m.geometry
    q = m.order
    gx, gw = np.polynomial.legendre.leggauss(q)
    fx, fw = np.polynomial.legendre.leggauss(4 * q)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.zeros(z.shape, dtype=complex)
    for p in range(2 * m.panels):
        cols = np.nonzero(m.panel == p)[0]
        tj = (m.angle[cols] - m.panel_mid[p]) / m.panel_half[p]
        srt = np.argsort(tj)
        cols = cols[srt]
        vals = phi[cols]
        arc = m.panel_arc[p]
        centre = g.center_of(PLUS if arc == 0 else MINUS)
        hp = m.panel_half[p]
        mid = m.panel_mid[p]
        plen = 2 * hp * g.a
        dist = np.min(np.abs(z[:, None] - m.points[cols][None, :]), axis=1)
        far = dist > 2.0 * plen
        if np.any(far):
            r = np.abs(z[far][:, None] - m.points[cols][None, :])
            out[far] += np.log(r) @ (m.weights[cols] * vals)
        near = ~far
        if not np.any(near):
            continue
        # subdivide [-1, 1] into nsub equal pieces with 4q-point rules
        nsub = int(min(512, max(1, math.ceil(4 * plen / max(np.min(dist[near]), 1e-300)))))
        edges = np.linspace(-1.0, 1.0, nsub + 1)
        t = ((edges[:-1] + edges[1:])[:, None] / 2 + (np.diff(edges)[:, None] / 2) * fx[None, :]).ravel()
        wt = ((np.diff(edges)[:, None] / 2) * fw[None, :]).ravel()
        # Lagrange interpolation from Gauss nodes gx to t
        L = _lagrange_matrix(gx, t)
        dens = L @ vals
        ang = mid + hp * t
        y = centre + g.a * np.exp(1j * ang)
        wy = wt * hp * g.a
        r = np.abs(z[near][:, None] - y[None, :])
        out[near] += np.log(r) @ (wy * dens)
    return out / (2 * math.pi)


def _lagrange_matrix(nodes: np.ndarray, t: np.ndarray) -> np.ndarray:
    n = nodes.size
    L = np.ones((t.size, n))
    for j in range(n):
        for k in range(n):
            if k != j:
                L[:, j] *= (t - nodes[k]) / (nodes[j] - nodes[k])
    return L

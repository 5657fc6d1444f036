"""Dense complex-Hermitian semidefinite programming.

Solves  max <C, X>  s.t.  A(X) = b,  X in a direct sum of PSD cones,
with a primal-dual predictor-corrector interior-point method under
Nesterov-Todd scaling, and answers the three derived questions the rest of
the package reduces to: feasibility (with Farkas certificates), optimal
value, and "is this spectrahedron a single point?".

Constraints come in two flavors:

* ``PinSet`` -- a family of value-pinning rows on Choi-structured blocks:
  block ``X`` is read as an element of ``M_l (x) M_n`` and the row ``(p, g)``
  demands ``sum_blocks tr(G_g Phi_X(F_p)) = values[p, g]`` where ``Phi_X`` is
  the map induced by the Choi matrix ``X`` and ``G_g`` runs over a subset of
  the orthonormal Hermitian basis of ``M_n``.  The Kronecker structure
  ``conj(F) (x) conj(G)`` of these rows is exploited when assembling the
  Schur complement, which is what makes the larger certificates affordable.
* dense rows -- arbitrary Hermitian pairings ``sum_b <A[b], X_b> = beta``.

Everything is deterministic for fixed inputs; randomness only enters through
explicitly passed generators (extreme-point refinement, probe sampling).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import (
    dagger,
    herm_basis,
    hermitize,
    pack_hermitian,
    random_hermitian,
    unpack_hermitian,
)
from .tolerance import DEFAULT_TOL, Tolerance

__all__ = [
    "PinSet",
    "SdpProblem",
    "SdpSolution",
    "InfeasibilityCertificate",
    "SdpError",
    "SolverFailure",
    "solve",
    "feasible_point",
    "relative_interior_point",
    "affine_nullspace_on_face",
    "extreme_point_refine",
    "singleton_check",
    "region_width",
]


class SdpError(Exception):
    """Malformed problem data."""


class SolverFailure(Exception):
    """The solver could not certify an answer (budget or numerical trouble)."""


# ---------------------------------------------------------------------------
# Problem data
# ---------------------------------------------------------------------------


def _pack_batch(mats: np.ndarray) -> np.ndarray:
    """pack_hermitian over the leading axis: (P, n, n) -> (P, n*n)."""
    p, n, _ = mats.shape
    iu, ju = np.triu_indices(n, k=1)
    out = np.empty((p, n * n))
    out[:, :n] = np.einsum("pii->pi", mats).real
    off = mats[:, iu, ju]
    out[:, n::2] = np.sqrt(2.0) * off.real
    out[:, n + 1 :: 2] = np.sqrt(2.0) * off.imag
    return out


@dataclass(frozen=True)
class PinSet:
    """Value-pinning rows shared across one or more Choi-structured blocks.

    blocks  -- indices of the cone blocks the rows act on (contributions sum)
    factors -- per applied block, the (l_b, n) Choi factorization; n is shared
    F       -- per applied block, Hermitian pin elements, shape (P, l_b, l_b)
    gsel    -- indices into herm_basis(n) selecting which target coordinates
               are pinned (row order: p outer, g inner)
    values  -- pinned coordinates, shape (P, len(gsel))
    """

    blocks: tuple
    factors: tuple
    F: tuple
    gsel: np.ndarray
    values: np.ndarray

    @property
    def pin_count(self) -> int:
        return self.F[0].shape[0]

    @property
    def target_dim(self) -> int:
        return self.factors[0][1]

    @property
    def rows(self) -> int:
        return self.pin_count * len(self.gsel)

    def validate(self, dims):
        n = self.target_dim
        p = self.pin_count
        if self.values.shape != (p, len(self.gsel)):
            raise SdpError("PinSet values shape mismatch")
        for b, (l, n_b), f in zip(self.blocks, self.factors, self.F):
            if n_b != n:
                raise SdpError("PinSet blocks must share the target dimension")
            if l * n != dims[b]:
                raise SdpError(f"block {b}: {l}x{n} factors do not match dim {dims[b]}")
            if f.shape != (p, l, l):
                raise SdpError("PinSet F shape mismatch")
        gram = np.zeros((p, p))
        for f in self.F:
            gram += np.einsum("pij,qji->pq", f, f).real
        if np.abs(gram - np.eye(p)).max() > 1e-7:
            raise SdpError("PinSet pin elements must be jointly trace-orthonormal")


def orthonormalize_pin_family(F_list, value_mats, drop_tol=1e-12):
    """Jointly orthonormalize pin elements (summed over blocks) and rotate values.

    F_list     -- per block, (P, l_b, l_b) Hermitian arrays
    value_mats -- (P, n, n) Hermitian targets
    Returns (new_F_list, new_value_mats); dependent pins are dropped after a
    consistency check (a dependent pin with an inconsistent value is an error).
    """
    p = F_list[0].shape[0]
    gram = np.zeros((p, p))
    for f in F_list:
        gram += np.einsum("pij,qji->pq", f, f).real
    w, u = np.linalg.eigh(gram)
    keep = w > drop_tol * max(1.0, w.max(initial=0.0))
    r = u[:, keep] / np.sqrt(w[keep])
    new_F = [np.einsum("pr,pij->rij", r, f) for f in F_list]
    new_vals = np.einsum("pr,pab->rab", r, value_mats)
    # consistency of the dropped combinations
    null = u[:, ~keep]
    if null.size:
        resid = np.einsum("pr,pab->rab", null, value_mats)
        if resid.size and np.abs(resid).max() > 1e-7:
            raise SdpError("dependent pins with inconsistent values (infeasible)")
    return new_F, new_vals


@dataclass(frozen=True)
class SdpProblem:
    """max <C, X> over block-PSD X subject to pin and dense equality rows."""

    dims: tuple
    pinsets: tuple = ()
    dense_A: tuple = ()  # per block: (m_d, d_b, d_b) complex Hermitian
    dense_b: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective: tuple = None  # per block Hermitian, or None for zeros

    def __post_init__(self):
        if not self.dims:
            raise SdpError("at least one cone block required")
        for ps in self.pinsets:
            ps.validate(self.dims)
        if self.dense_A:
            md = self.dense_A[0].shape[0]
            if self.dense_b.shape != (md,):
                raise SdpError("dense_b length mismatch")
            for b, a in enumerate(self.dense_A):
                if a.shape != (md, self.dims[b], self.dims[b]):
                    raise SdpError(f"dense_A block {b} shape mismatch")
        if self.rows == 0:
            raise SdpError("constraint list must be nonempty")

    @property
    def n_dense(self) -> int:
        return self.dense_A[0].shape[0] if self.dense_A else 0

    @property
    def rows(self) -> int:
        return sum(ps.rows for ps in self.pinsets) + self.n_dense

    @property
    def b(self) -> np.ndarray:
        parts = [ps.values.ravel() for ps in self.pinsets]
        parts.append(self.dense_b)
        return np.concatenate(parts) if parts else np.zeros(0)

    def objective_blocks(self):
        if self.objective is None:
            return [np.zeros((d, d), dtype=np.complex128) for d in self.dims]
        return list(self.objective)

    def with_objective(self, objective):
        return replace(self, objective=tuple(objective) if objective is not None else None)

    def with_extra_dense(self, extra_A, extra_b):
        """Append dense rows (per-block list of (k, d, d) arrays, k values)."""
        k = len(extra_b)
        if self.dense_A:
            new_A = tuple(
                np.concatenate([cur, ext], axis=0) for cur, ext in zip(self.dense_A, extra_A)
            )
            new_b = np.concatenate([self.dense_b, extra_b])
        else:
            new_A = tuple(np.asarray(ext) for ext in extra_A)
            new_b = np.asarray(extra_b, dtype=float)
        return replace(self, dense_A=new_A, dense_b=new_b)


@dataclass
class SdpSolution:
    X: list
    value: float
    status: str  # optimal | infeasible | unbounded | max-iter
    primal_residual: float
    dual_gap: float
    iterations: int = 0
    mu: float = 0.0
    y: np.ndarray = None
    Z: list = None

    @property
    def X0(self) -> np.ndarray:
        return self.X[0]


@dataclass
class InfeasibilityCertificate:
    """Farkas-type dual improving ray: A*(y) >= 0 with <b, y> = -1."""

    y: np.ndarray
    min_eig: float
    b_pairing: float


# ---------------------------------------------------------------------------
# Linear operators
# ---------------------------------------------------------------------------


def apply_A(problem: SdpProblem, X) -> np.ndarray:
    """Forward constraint map A(X) in row order (pinsets first, then dense)."""
    parts = []
    for ps in self_pinsets(problem):
        n = ps.target_dim
        acc = np.zeros((ps.pin_count, n, n), dtype=np.complex128)
        for b, (l, _), f in zip(ps.blocks, ps.factors, ps.F):
            xr = X[b].reshape(l, n, l, n)
            acc += np.einsum("pij,iajb->pab", f, xr, optimize=True)
        coords = _pack_batch(acc)[:, ps.gsel]
        parts.append(coords.ravel())
    if problem.n_dense:
        vals = np.zeros(problem.n_dense)
        for b, a in enumerate(problem.dense_A):
            vals += np.einsum("kab,ba->k", a, X[b], optimize=True).real
        parts.append(vals)
    return np.concatenate(parts) if parts else np.zeros(0)


def self_pinsets(problem):
    return problem.pinsets


def apply_At(problem: SdpProblem, y) -> list:
    """Adjoint constraint map A*(y) as Hermitian blocks."""
    out = [np.zeros((d, d), dtype=np.complex128) for d in problem.dims]
    offset = 0
    for ps in problem.pinsets:
        n = ps.target_dim
        g = len(ps.gsel)
        yk = np.asarray(y[offset : offset + ps.rows], dtype=float).reshape(ps.pin_count, g)
        offset += ps.rows
        full = np.zeros((ps.pin_count, n * n))
        full[:, ps.gsel] = yk
        H = np.stack([unpack_hermitian(v, n) for v in full])
        for b, (l, _), f in zip(ps.blocks, ps.factors, ps.F):
            k = np.einsum("pij,pab->iajb", f.conj(), H.conj(), optimize=True)
            out[b] += k.reshape(l * n, l * n)
    if problem.n_dense:
        yd = np.asarray(y[offset : offset + problem.n_dense], dtype=float)
        for b, a in enumerate(problem.dense_A):
            out[b] += np.einsum("k,kab->ab", yd, a, optimize=True)
    return out


def _row_matrices_compressed(problem: SdpProblem, V) -> np.ndarray:
    """All constraint rows compressed to the faces V: real packed (m, sum r_b^2).

    The compressed row of a pin ``conj(F) (x) conj(G)`` on block b is
    ``V_b* (conj F (x) conj G) V_b``; dense rows compress directly.
    """
    packs = []
    sizes = [v.shape[1] for v in V]

    def packed_blocks(block_mats):
        return np.concatenate(
            [_pack_batch(bm) if bm.shape[1] else np.zeros((bm.shape[0], 0)) for bm in block_mats],
            axis=1,
        )

    for ps in problem.pinsets:
        n = ps.target_dim
        gmats = herm_basis(n)[ps.gsel].conj()
        block_mats = []
        for b, (l, _), f in zip(ps.blocks, ps.factors, ps.F):
            r = sizes[b]
            vr = V[b].reshape(l, n, r)
            # rows[p,g] = V* (conj F_p (x) conj G_g) V
            t = np.einsum("pij,jbr->pibr", f.conj(), vr, optimize=True)
            t = np.einsum("gab,pibr->pgiar", gmats, t, optimize=True)
            rows = np.einsum("ias,pgiar->pgsr", vr.conj(), t, optimize=True)
            block_mats.append(rows.reshape(ps.rows, r, r))
        others = []
        for b in range(len(problem.dims)):
            if b in ps.blocks:
                idx = list(ps.blocks).index(b)
                others.append(block_mats[idx])
            else:
                others.append(np.zeros((ps.rows, sizes[b], sizes[b]), dtype=np.complex128))
        packs.append(packed_blocks(others))
    if problem.n_dense:
        block_mats = [
            np.einsum("as,kab,br->ksr", V[b].conj(), problem.dense_A[b], V[b], optimize=True)
            for b in range(len(problem.dims))
        ]
        packs.append(packed_blocks(block_mats))
    return np.concatenate(packs, axis=0) if packs else np.zeros((0, sum(s * s for s in sizes)))


# ---------------------------------------------------------------------------
# Schur complement assembly
# ---------------------------------------------------------------------------

_CHUNK_LIMIT = 40_000_000  # complex entries allowed in a T2 intermediate


def _schur_pin_pin(ps1: PinSet, ps2: PinSet, W, dims) -> np.ndarray:
    n1, n2 = ps1.target_dim, ps2.target_dim
    g1 = herm_basis(n1)[ps1.gsel].conj()
    g2 = herm_basis(n2)[ps2.gsel].conj()
    out = np.zeros((ps1.rows, ps2.rows))
    common = [b for b in ps1.blocks if b in ps2.blocks]
    for b in common:
        i1, i2 = list(ps1.blocks).index(b), list(ps2.blocks).index(b)
        l = ps1.factors[i1][0]
        u1 = ps1.F[i1].conj()
        u2 = ps2.F[i2].conj()
        wr = W[b].reshape(l, n1, l, n1)
        p, q = u1.shape[0], u2.shape[0]
        t1 = np.einsum("pij,jcke->picke", u1, wr, optimize=True)
        chunk = max(1, int(_CHUNK_LIMIT // max(1, p * l * l * n1 * n1)))
        blocks = []
        for q0 in range(0, q, chunk):
            u2c = u2[q0 : q0 + chunk]
            t2 = np.einsum("picke,qkm->pqicme", t1, u2c, optimize=True)
            t3 = np.einsum("pqicme,mfia->pqcefa", t2, wr, optimize=True)
            m = np.einsum("gac,pqcefa,hef->pgqh", g1, t3, g2, optimize=True)
            blocks.append(m.real.reshape(ps1.rows, u2c.shape[0] * len(ps2.gsel)))
        out += np.concatenate(blocks, axis=1)
    return out


def _slice_rows_of(problem: SdpProblem, mats) -> np.ndarray:
    """Pair every constraint row with given Hermitian blocks: rows x len(mats)."""
    cols = []
    for mat_blocks in mats:
        cols.append(apply_A(problem, mat_blocks))
    return np.stack(cols, axis=1) if cols else np.zeros((problem.rows, 0))


def schur_matrix(problem: SdpProblem, W) -> np.ndarray:
    """M[r, r'] = sum_b tr(T_r W_b T_r' W_b) over all constraint rows."""
    m = problem.rows
    out = np.zeros((m, m))
    offsets = []
    off = 0
    for ps in problem.pinsets:
        offsets.append(off)
        off += ps.rows
    dense_off = off

    for i, ps1 in enumerate(problem.pinsets):
        for j, ps2 in enumerate(problem.pinsets):
            if j < i:
                continue
            blk = _schur_pin_pin(ps1, ps2, W, problem.dims)
            o1, o2 = offsets[i], offsets[j]
            out[o1 : o1 + ps1.rows, o2 : o2 + ps2.rows] = blk
            if j > i:
                out[o2 : o2 + ps2.rows, o1 : o1 + ps1.rows] = blk.T

    if problem.n_dense:
        waw = []
        for k in range(problem.n_dense):
            blocks = [W[b] @ problem.dense_A[b][k] @ W[b] for b in range(len(problem.dims))]
            waw.append(blocks)
        cross = _slice_rows_of(problem, waw)  # (rows, n_dense): includes dense x dense
        out[:, dense_off:] = cross
        out[dense_off:, :] = cross.T
        dd = cross[dense_off:, :]
        out[dense_off:, dense_off:] = 0.5 * (dd + dd.T)
    return 0.5 * (out + out.T)


# ---------------------------------------------------------------------------
# Interior-point solver
# ---------------------------------------------------------------------------


def _chol_solve(M, rhs):
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        jitter = 1e-13 * max(1.0, float(np.trace(M) / max(1, M.shape[0])))
        L = np.linalg.cholesky(M + jitter * np.eye(M.shape[0]))
    u = np.linalg.solve(L, rhs)
    return np.linalg.solve(L.conj().T, u)


def _nt_scaling(X, Z):
    """NT scaling point W with W Z W = X, per block."""
    W = []
    for x, z in zip(X, Z):
        wz, uz = np.linalg.eigh(z)
        wz = np.maximum(wz, 1e-300)
        zs = (uz * np.sqrt(wz)) @ dagger(uz)
        zsi = (uz / np.sqrt(wz)) @ dagger(uz)
        m = hermitize(zs @ x @ zs)
        wm, um = np.linalg.eigh(m)
        wm = np.maximum(wm, 1e-300)
        ms = (um * np.sqrt(wm)) @ dagger(um)
        W.append(hermitize(zsi @ ms @ zsi))
    return W


def _step_to_boundary(X, dX) -> float:
    """sup {a : X + a dX >= 0} (1e30 if unconstrained)."""
    alpha = 1e30
    for x, dx in zip(X, dX):
        w, u = np.linalg.eigh(x)
        w = np.maximum(w, 1e-300)
        s = (u / np.sqrt(w)) @ dagger(u)
        lam = np.linalg.eigvalsh(hermitize(s @ dx @ s))[0]
        if lam < -1e-14:
            alpha = min(alpha, -1.0 / lam)
    return alpha


def solve(
    problem: SdpProblem,
    tol: Tolerance = DEFAULT_TOL,
    max_iter: int = 200,
    feas_tol: float = 1e-10,
    gap_tol: float = 1e-10,
    classify_infeasible: bool = True,
) -> SdpSolution:
    """Run the interior-point method; see module docstring for conventions."""
    dims = problem.dims
    b = problem.b
    C = problem.objective_blocks()
    m = problem.rows
    total_dim = sum(dims)

    scale_b = 1.0 + float(np.linalg.norm(b))
    scale_c = 1.0 + max(float(np.abs(c).max(initial=0.0)) for c in C)

    X = [np.eye(d, dtype=np.complex128) for d in dims]
    Z = [np.eye(d, dtype=np.complex128) for d in dims]
    y = np.zeros(m)

    status = "max-iter"
    mu_hist = []
    it = 0
    for it in range(1, max_iter + 1):
        rp = b - apply_A(problem, X)
        Aty = apply_At(problem, y)
        Rd = [hermitize(C[k] + Z[k] - Aty[k]) for k in range(len(dims))]
        mu = sum(np.einsum("ab,ba->", X[k], Z[k]).real for k in range(len(dims))) / total_dim
        obj = sum(np.einsum("ab,ba->", C[k], X[k]).real for k in range(len(dims)))
        dobj = float(b @ y)
        gap = abs(dobj - obj) / (1.0 + abs(obj) + abs(dobj))
        pinf = float(np.linalg.norm(rp)) / scale_b
        dinf = max(float(np.linalg.norm(r, 2)) for r in Rd) / scale_c

        if pinf <= feas_tol and dinf <= feas_tol and (gap <= gap_tol or mu <= gap_tol):
            status = "optimal"
            break
        if obj > 1e12 * scale_c * scale_b and pinf <= 1e-6:
            status = "unbounded"
            break
        mu_hist.append((mu, pinf))
        if len(mu_hist) > 30:
            mu0, p0 = mu_hist[-30]
            if mu >= 0.5 * mu0 and pinf >= 0.5 * p0 and pinf > 1e-7:
                status = "stalled"
                break

        W = _nt_scaling(X, Z)
        M = schur_matrix(problem, W)
        Zi = []
        for z in Z:
            wz, uz = np.linalg.eigh(z)
            wz = np.maximum(wz, 1e-300)
            Zi.append((uz / wz) @ dagger(uz))

        AWRdW = apply_A(problem, [W[k] @ Rd[k] @ W[k] for k in range(len(dims))])

        # affine (predictor) direction: target XZ -> 0
        R_aff = [-X[k] for k in range(len(dims))]
        rhs = apply_A(problem, R_aff) + AWRdW - rp
        dy_aff = _chol_solve(M, rhs)
        Atdy = apply_At(problem, dy_aff)
        dZ_aff = [hermitize(Atdy[k] - Rd[k]) for k in range(len(dims))]
        dX_aff = [hermitize(R_aff[k] - W[k] @ dZ_aff[k] @ W[k]) for k in range(len(dims))]

        ap = min(1.0, 0.99 * _step_to_boundary(X, dX_aff))
        ad = min(1.0, 0.99 * _step_to_boundary(Z, dZ_aff))
        mu_aff = (
            sum(
                np.einsum(
                    "ab,ba->", X[k] + ap * dX_aff[k], Z[k] + ad * dZ_aff[k]
                ).real
                for k in range(len(dims))
            )
            / total_dim
        )
        mu_aff = max(mu_aff, 0.0)
        sigma = min(1.0, (mu_aff / max(mu, 1e-300)) ** 3)
        nu = sigma * mu

        R_cc = [
            hermitize(
                nu * Zi[k]
                - X[k]
                - 0.5 * (dX_aff[k] @ dZ_aff[k] @ Zi[k] + Zi[k] @ dZ_aff[k] @ dX_aff[k])
            )
            for k in range(len(dims))
        ]
        rhs = apply_A(problem, R_cc) + AWRdW - rp
        dy = _chol_solve(M, rhs)
        Atdy = apply_At(problem, dy)
        dZ = [hermitize(Atdy[k] - Rd[k]) for k in range(len(dims))]
        dX = [hermitize(R_cc[k] - W[k] @ dZ[k] @ W[k]) for k in range(len(dims))]

        ap = min(1.0, 0.98 * _step_to_boundary(X, dX))
        ad = min(1.0, 0.98 * _step_to_boundary(Z, dZ))
        if ap < 1e-10 and ad < 1e-10:
            status = "stalled"
            break
        X = [hermitize(X[k] + ap * dX[k]) for k in range(len(dims))]
        Z = [hermitize(Z[k] + ad * dZ[k]) for k in range(len(dims))]
        y = y + ad * dy

    rp = b - apply_A(problem, X)
    obj = sum(np.einsum("ab,ba->", C[k], X[k]).real for k in range(len(dims)))
    dobj = float(b @ y)
    mu = sum(np.einsum("ab,ba->", X[k], Z[k]).real for k in range(len(dims))) / total_dim
    primal_residual = float(np.linalg.norm(rp, np.inf))
    dual_gap = abs(dobj - obj) / (1.0 + abs(obj) + abs(dobj))

    if status in ("stalled", "max-iter") and classify_infeasible:
        cert = _farkas_certificate(problem, tol)
        if cert is not None:
            return SdpSolution(
                X=X,
                value=float("nan"),
                status="infeasible",
                primal_residual=primal_residual,
                dual_gap=dual_gap,
                iterations=it,
                mu=mu,
                y=cert.y,
                Z=Z,
            )
        status = "max-iter"

    if status == "optimal":
        lam_min = min(float(np.linalg.eigvalsh(x)[0]) for x in X)
        if lam_min < -tol.psd_tol or primal_residual > 1e-8 or dual_gap > 1e-7:
            status = "max-iter"

    return SdpSolution(
        X=X,
        value=obj,
        status=status,
        primal_residual=primal_residual,
        dual_gap=dual_gap,
        iterations=it,
        mu=mu,
        y=y,
        Z=Z,
    )


# ---------------------------------------------------------------------------
# Feasibility and Farkas certificates
# ---------------------------------------------------------------------------


def _dense_from_problem(problem: SdpProblem):
    """Materialize every row as dense per-block Hermitian matrices (small use)."""
    m = problem.rows
    dims = problem.dims
    rows = [[np.zeros((d, d), dtype=np.complex128) for d in dims] for _ in range(m)]
    for r in range(m):
        e = np.zeros(m)
        e[r] = 1.0
        blocks = apply_At(problem, e)
        for bidx in range(len(dims)):
            rows[r][bidx] = blocks[bidx]
    return rows


def _phase_one(problem: SdpProblem, tol: Tolerance):
    """min t s.t. A(X) + t (b - A(I)) = b, X >= 0, t >= 0 (t as a 1x1 block)."""
    dims = tuple(problem.dims) + (1,)
    rows = _dense_from_problem(problem)
    ident = [np.eye(d, dtype=np.complex128) for d in problem.dims]
    r0 = problem.b - apply_A(problem, ident)
    m = problem.rows
    dense_A = []
    for bidx, d in enumerate(problem.dims):
        a = np.stack([rows[r][bidx] for r in range(m)])
        dense_A.append(a)
    dense_A.append(r0.reshape(m, 1, 1).astype(np.complex128))
    objective = [np.zeros((d, d), dtype=np.complex128) for d in problem.dims]
    objective.append(-np.ones((1, 1), dtype=np.complex128))
    p1 = SdpProblem(
        dims=dims,
        pinsets=(),
        dense_A=tuple(dense_A),
        dense_b=problem.b.copy(),
        objective=tuple(objective),
    )
    return solve(p1, tol=tol, classify_infeasible=False)


def _farkas_certificate(problem: SdpProblem, tol: Tolerance):
    """Try to certify infeasibility; returns InfeasibilityCertificate or None."""
    sol = _phase_one(problem, tol)
    if sol.status != "optimal":
        return None
    t_star = float(sol.X[-1][0, 0].real)
    if t_star <= 1e-7:
        return None
    y = sol.y
    aty = apply_At(problem, y)
    min_eig = min(float(np.linalg.eigvalsh(a)[0]) for a in aty)
    pairing = float(problem.b @ y)
    scale = max(1.0, float(np.linalg.norm(y)))
    if min_eig >= -1e-6 * scale and pairing < -1e-9 * scale:
        y = y / abs(pairing)
        return InfeasibilityCertificate(
            y=y, min_eig=min_eig / abs(pairing), b_pairing=-1.0
        )
    return None


def feasible_point(problem: SdpProblem, tol: Tolerance = DEFAULT_TOL):
    """A feasible X (objective ignored), or an InfeasibilityCertificate.

    Returns (X_blocks, None) when feasible and (None, certificate) otherwise.
    Raises SolverFailure when neither can be certified.
    """
    feas = problem.with_objective(None)
    sol = solve(feas, tol=tol, classify_infeasible=False)
    if sol.status == "optimal":
        return sol.X, None
    cert = _farkas_certificate(problem, tol)
    if cert is not None:
        return None, cert
    # one retry: phase-one says feasible; rerun the plain solve harder
    sol = solve(feas, tol=tol, max_iter=400, classify_infeasible=False)
    if sol.status == "optimal":
        return sol.X, None
    raise SolverFailure(
        f"feasibility undecided (status={sol.status}, residual={sol.primal_residual:.2e})"
    )


# ---------------------------------------------------------------------------
# Faces, relative interior, nullspaces
# ---------------------------------------------------------------------------


def _face_split(x: np.ndarray, rank_tol: float):
    """Orthonormal basis of the numerically significant range of PSD x.

    Splits the spectrum at the rank_tol threshold, snapped to the largest
    multiplicative eigenvalue gap in the ambiguous zone below 1e-3 * scale
    (interior-point iterates leave forced-zero eigenvalues well above machine
    precision, so a pure threshold is brittle).
    """
    w, u = np.linalg.eigh(hermitize(x))
    scale = max(float(w[-1]), 0.0)
    if scale <= 0.0:
        return u[:, :0]
    wc = np.maximum(w, scale * 1e-16)
    cut = int(np.searchsorted(wc, rank_tol * scale))
    best_ratio = 1e3
    for i in range(len(w) - 1):
        if wc[i] > 1e-3 * scale:
            break
        ratio = wc[i + 1] / wc[i]
        if ratio > best_ratio:
            best_ratio = ratio
            cut = i + 1
    return u[:, cut:]


def compress_problem(problem: SdpProblem, V):
    """Restrict the feasible region to the face X_b = V_b Y_b V_b*.

    Pins become dense rows in the compressed coordinates; dependent rows are
    dropped after a value-consistency check.
    """
    sizes = [v.shape[1] for v in V]
    packed = _row_matrices_compressed(problem, V)
    bvec = problem.b
    # orthonormalize rows, tracking values
    u, s, vt = (None, None, None)
    if packed.shape[0]:
        u, s, vt = np.linalg.svd(packed, full_matrices=False)
        keep = s > 1e-10 * max(1.0, s.max(initial=0.0))
        rows_on = vt[keep]
        vals_on = (u[:, keep] / s[keep]).T @ bvec
        null_rows = u[:, ~keep] if (~keep).any() else None
        inconsistency = 0.0
        if null_rows is not None and null_rows.size:
            inconsistency = float(np.abs(null_rows.T @ bvec).max(initial=0.0))
    else:
        rows_on = np.zeros((0, packed.shape[1]))
        vals_on = np.zeros(0)
        inconsistency = 0.0
    # unpack rows back to per-block Hermitian dense constraints
    md = rows_on.shape[0]
    dense_A = []
    col = 0
    for r in sizes:
        blk = np.zeros((md, r, r), dtype=np.complex128)
        for k in range(md):
            blk[k] = unpack_hermitian(rows_on[k, col : col + r * r], r)
        dense_A.append(blk)
        col += r * r
    obj = None
    if problem.objective is not None:
        obj = tuple(
            dagger(V[b]) @ problem.objective[b] @ V[b] for b in range(len(problem.dims))
        )
    if md == 0:
        # keep a trivial consistent row so the problem stays well-formed
        dense_A = [np.zeros((1, r, r), dtype=np.complex128) for r in sizes]
        vals_on = np.zeros(1)
        md = 1
    comp = SdpProblem(
        dims=tuple(sizes),
        pinsets=(),
        dense_A=tuple(dense_A),
        dense_b=np.asarray(vals_on, dtype=float),
        objective=obj,
    )
    return comp, inconsistency


def relative_interior_point(
    problem: SdpProblem, tol: Tolerance = DEFAULT_TOL, max_rounds: int = 4
):
    """Analytic-center-style feasible point plus the face it spans.

    Returns (X_blocks, V_blocks, diagnostics).  The faces V_b carry the claim
    that every feasible point has range(X_b) inside range(V_b); downstream
    certificates re-verify any conclusion drawn from it.
    """
    dims = problem.dims
    V = [np.eye(d, dtype=np.complex128) for d in dims]
    cur = problem.with_objective(None)
    diagnostics = {"rounds": 0, "inconsistency": 0.0}
    X_comp = None
    for _ in range(max_rounds):
        diagnostics["rounds"] += 1
        sol = solve(cur, tol=tol)
        if sol.status != "optimal":
            raise SolverFailure(f"relative interior solve failed: {sol.status}")
        X_comp = sol.X
        faces = [_face_split(x, tol.rank_tol) for x in X_comp]
        if all(f.shape[1] == x.shape[0] for f, x in zip(faces, X_comp)):
            break
        V = [V[b] @ faces[b] for b in range(len(dims))]
        cur, inc = compress_problem(problem, V)
        diagnostics["inconsistency"] = max(diagnostics["inconsistency"], inc)
    X = [V[b] @ X_comp[b] @ dagger(V[b]) for b in range(len(dims))]
    return X, V, diagnostics


def affine_nullspace_on_face(problem: SdpProblem, V):
    """Orthonormal basis of {H = V Y V* : A(H) = 0}, as compressed blocks.

    Returns a list of per-block Hermitian tuples (Y_b) in compressed
    coordinates, orthonormal in the packed real inner product.
    """
    sizes = [v.shape[1] for v in V]
    packed = _row_matrices_compressed(problem, V)
    dim = sum(r * r for r in sizes)
    if packed.shape[0] == 0:
        basis = np.eye(dim)
    else:
        u, s, vt = np.linalg.svd(packed, full_matrices=True)
        rank = int((s > 1e-10 * max(1.0, s.max(initial=0.0))).sum())
        basis = vt[rank:]
    out = []
    for vec in basis:
        blocks = []
        col = 0
        for r in sizes:
            blocks.append(unpack_hermitian(vec[col : col + r * r], r))
            col += r * r
        out.append(blocks)
    return out


# ---------------------------------------------------------------------------
# Width, singleton certificate, extreme points
# ---------------------------------------------------------------------------


def region_width(problem: SdpProblem, direction, tol: Tolerance = DEFAULT_TOL):
    """max <D, X> - min <D, X> over the region, with the two optimizers."""
    hi = solve(problem.with_objective(direction), tol=tol)
    lo = solve(
        problem.with_objective([-d for d in direction]), tol=tol
    )
    if hi.status != "optimal" or lo.status != "optimal":
        raise SolverFailure(f"width solve failed: {hi.status}/{lo.status}")
    return float(hi.value + lo.value), hi.X, lo.X


def row_gram(problem: SdpProblem) -> np.ndarray:
    """Gram matrix of the constraint rows (the Schur matrix at W = I)."""
    return schur_matrix(problem, [np.eye(d, dtype=np.complex128) for d in problem.dims])


def _random_orthocomplement_direction(problem: SdpProblem, rng, gram=None):
    """Random unit direction orthogonal to the span of the constraint rows."""
    d_blocks = [random_hermitian(rng, d) for d in problem.dims]
    coords = apply_A(problem, d_blocks)
    if gram is None:
        gram = row_gram(problem)
    coef = np.linalg.lstsq(gram, coords, rcond=None)[0]
    proj = apply_At(problem, coef)
    out = [hermitize(d_blocks[b] - proj[b]) for b in range(len(problem.dims))]
    norm = np.sqrt(sum(float(np.einsum("ab,ba->", o, o).real) for o in out))
    if norm < 1e-12:
        return None
    return [o / norm for o in out]


def singleton_check(
    problem: SdpProblem,
    probe_directions=None,
    tol: Tolerance = DEFAULT_TOL,
    rng: np.random.Generator = None,
    width_tol: float = 1e-7,
    max_verify: int = 4,
    spot_probes: int = None,
):
    """Certified "is the feasible region a single point?".

    Primary certificate: facial reduction to the region's face followed by an
    exact nullspace computation (zero width along the whole constraint
    orthocomplement at once).  Candidate violating directions are re-verified
    with direct support solves; singleton verdicts are spot-checked along
    seeded random orthocomplement directions (defense in depth).

    Returns (is_singleton, max_width, witness_direction_blocks_or_None).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    X, V, diag = relative_interior_point(problem, tol=tol)
    null = affine_nullspace_on_face(problem, V)

    max_width = 0.0
    for H in null[:max_verify]:
        direction = [
            hermitize(V[b] @ H[b] @ dagger(V[b])) for b in range(len(problem.dims))
        ]
        nrm = np.sqrt(sum(float(np.einsum("ab,ba->", d, d).real) for d in direction))
        if nrm < 1e-12:
            continue
        direction = [d / nrm for d in direction]
        width, _, _ = region_width(problem, direction, tol=tol)
        max_width = max(max_width, width)
        if width > width_tol:
            return False, width, direction
    if len(null) > max_verify:
        # unverified directions remain; treat the region as wide along the first
        H = null[max_verify]
        direction = [hermitize(V[b] @ H[b] @ dagger(V[b])) for b in range(len(problem.dims))]
        width, _, _ = region_width(problem, direction, tol=tol)
        if width > width_tol:
            return False, width, direction
        max_width = max(max_width, width)

    # spot checks: provided probes first, then seeded random orthocomplement probes
    n_spot = spot_probes
    if n_spot is None:
        n_spot = 16 if sum(d * d for d in problem.dims) <= 1100 else 4
    checked = 0
    if probe_directions:
        for direction in probe_directions:
            if checked >= n_spot:
                break
            width, _, _ = region_width(problem, direction, tol=tol)
            max_width = max(max_width, width)
            checked += 1
            if width > width_tol:
                return False, width, direction
    gram = row_gram(problem) if checked < n_spot else None
    while checked < n_spot:
        direction = _random_orthocomplement_direction(problem, rng, gram=gram)
        checked += 1
        if direction is None:
            break
        width, _, _ = region_width(problem, direction, tol=tol)
        max_width = max(max_width, width)
        if width > width_tol:
            return False, width, direction
    return True, max_width, None


def project_affine(problem: SdpProblem, X):
    """Least-squares correction of X onto the affine constraint set."""
    resid = problem.b - apply_A(problem, X)
    gram = schur_matrix(problem, [np.eye(d, dtype=np.complex128) for d in problem.dims])
    coef = np.linalg.lstsq(gram, resid, rcond=None)[0]
    corr = apply_At(problem, coef)
    return [hermitize(X[b] + corr[b]) for b in range(len(problem.dims))]


def extreme_point_refine(
    problem: SdpProblem,
    X0=None,
    tol: Tolerance = DEFAULT_TOL,
    rng: np.random.Generator = None,
    max_rounds: int = 30,
):
    """An extreme point of the feasible region.

    Iteratively maximizes seeded random objectives restricted to the current
    optimal face (pinning each achieved value and the kernel of the iterate)
    until the face is zero-dimensional, then lifts back.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    dims = problem.dims
    V = [np.eye(d, dtype=np.complex128) for d in dims]
    cur = problem.with_objective(None)
    Y = None
    if X0 is not None:
        Y = [x.copy() for x in X0]
    refined = False
    for _ in range(max_rounds):
        if Y is None:
            sol = solve(cur, tol=tol)
            if sol.status != "optimal":
                raise SolverFailure(f"extreme point solve failed: {sol.status}")
            Y = sol.X
        faces = [_face_split(y, tol.rank_tol) for y in Y]
        if any(f.shape[1] < y.shape[0] for f, y in zip(faces, Y)):
            V = [V[b] @ faces[b] for b in range(len(dims))]
            cur, _ = compress_problem(cur, faces)
            Y = [dagger(faces[b]) @ Y[b] @ faces[b] for b in range(len(dims))]
        eye = [np.eye(y.shape[0], dtype=np.complex128) for y in Y]
        null = affine_nullspace_on_face(cur, eye)
        if not null:
            refined = True
            break
        c_rand = [random_hermitian(rng, y.shape[0]) for y in Y]
        sol = solve(cur.with_objective(c_rand), tol=tol)
        if sol.status != "optimal":
            raise SolverFailure(f"extreme point refinement failed: {sol.status}")
        cur = cur.with_extra_dense(
            [c.reshape(1, *c.shape) for c in c_rand], np.array([sol.value])
        )
        Y = sol.X
    if not refined:
        raise SolverFailure("extreme point refinement did not reach a zero-dimensional face")
    X = [V[b] @ Y[b] @ dagger(V[b]) for b in range(len(dims))]
    X = project_affine(problem, X)
    return X

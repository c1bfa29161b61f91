"""Canonical packed form of the convex subproblems.

Each subproblem maximizes ``objective @ x`` over constraints ``g_i(x) <= 0``
where every ``g_i`` is a sum of atoms over a real decision vector:

* a constant,
* a dense linear term,
* centered positive-semidefinite quadratic blocks
  ``(x_b - c)^T S (x_b - c)``,
* negative-log terms ``-w * ln(r^T x_b + o)`` with ``w > 0``.

Complex variables are stored as interleaved real composites; complex rows and
Hermitian matrices are translated so that ``Re{row @ z}`` and ``z^H S z``
become the corresponding real expressions.  Blocks may alias one another,
which is how tied-slot variants share one front-end across slots or subbands.

The packed arrays feed both the compiled and the pure-NumPy evaluation
backends; :mod:`wpcmaxmin.solver` owns the barrier iteration itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import hermitize, realify, to_real


@dataclass(frozen=True)
class BlockRef:
    """Handle to one variable block inside the packed vector."""

    name: str
    start: int
    size: int          # length in real entries
    is_complex: bool


def complex_row_to_real(row: np.ndarray) -> np.ndarray:
    """Real row ``r`` with ``r @ to_real(z) == Re{row @ z}``."""
    out = np.empty(2 * len(row))
    out[0::2] = np.real(row)
    out[1::2] = -np.imag(row)
    return out


@dataclass(frozen=True)
class PackedProblem:
    """Flat-array form of one convex subproblem (see module docstring)."""

    dim: int
    objective: np.ndarray     # (dim,)
    const: np.ndarray         # (n_con,)
    lin: np.ndarray           # (n_con, dim)
    q_con: np.ndarray         # (nq,) int32: owning constraint
    q_start: np.ndarray       # (nq,) int32: block offset in x
    q_size: np.ndarray        # (nq,) int32
    q_mat_off: np.ndarray     # (nq+1,) int64 into q_mats
    q_mats: np.ndarray        # flat float64, row-major blocks
    q_ctr_off: np.ndarray     # (nq+1,) int64 into q_ctrs
    q_ctrs: np.ndarray        # flat float64 centers
    l_con: np.ndarray         # (nl,) int32
    l_weight: np.ndarray      # (nl,)
    l_offset: np.ndarray      # (nl,)
    l_start: np.ndarray       # (nl,) int32
    l_size: np.ndarray        # (nl,) int32
    l_coef_off: np.ndarray    # (nl+1,) int64 into l_coefs
    l_coefs: np.ndarray       # flat float64
    labels: tuple
    start: np.ndarray         # (dim,) domain-valid warm start
    blocks: dict = field(default_factory=dict, compare=False)

    @property
    def n_constraints(self) -> int:
        return len(self.const)

    def block(self, name: str) -> BlockRef:
        return self.blocks[name]

    def get_complex(self, x: np.ndarray, name: str) -> np.ndarray:
        ref = self.blocks[name]
        seg = np.ascontiguousarray(x[ref.start:ref.start + ref.size])
        if not ref.is_complex:
            return seg
        return seg.view(complex).copy()


class SubproblemBuilder:
    """Incremental assembly of a :class:`PackedProblem`."""

    def __init__(self):
        self._blocks: dict[str, BlockRef] = {}
        self._dim = 0
        self._objective: list[tuple[BlockRef, np.ndarray]] = []
        self._constraints: list[dict] = []
        self._start: dict[str, np.ndarray] = {}

    # -- variables ---------------------------------------------------------

    def add_complex_block(self, name: str, n: int) -> BlockRef:
        """Declare a complex block of ``n`` entries (2n real slots)."""
        return self._add(name, 2 * n, True)

    def add_real_block(self, name: str, n: int) -> BlockRef:
        return self._add(name, n, False)

    def _add(self, name, size, is_complex):
        if name in self._blocks:
            raise ValueError(f"duplicate block {name!r}")
        ref = BlockRef(name, self._dim, size, is_complex)
        self._blocks[name] = ref
        self._dim += size
        return ref

    def alias_block(self, name: str, target: BlockRef) -> BlockRef:
        """Expose ``target``'s slots under a second name (shared variable)."""
        if name in self._blocks:
            raise ValueError(f"duplicate block {name!r}")
        ref = BlockRef(name, target.start, target.size, target.is_complex)
        self._blocks[name] = ref
        return ref

    def set_start(self, name: str, value: np.ndarray) -> None:
        ref = self._blocks[name]
        vec = to_real(np.asarray(value, dtype=complex)) if ref.is_complex \
            else np.asarray(value, dtype=float).ravel()
        if len(vec) != ref.size:
            raise ValueError(f"start for {name!r}: expected {ref.size} slots")
        self._start[name] = vec

    # -- objective and constraints -----------------------------------------

    def maximize(self, name: str, row=None) -> None:
        """Add ``Re{row @ z}`` (or ``row @ x`` for real blocks) to the objective."""
        ref = self._blocks[name]
        if row is None:
            if ref.size != 1:
                raise ValueError("default objective row needs a scalar block")
            row = np.ones(1)
        row = np.asarray(row)
        vec = complex_row_to_real(row.astype(complex)) if ref.is_complex \
            else row.astype(float).ravel()
        if len(vec) != ref.size:
            raise ValueError("objective row has wrong length")
        self._objective.append((ref, vec))

    def add_constraint(self, label: str, const: float = 0.0, lin=None,
                       quads=None, logs=None) -> None:
        """Append one ``g(x) <= 0`` row.

        ``lin``: {block name: row} with complex rows meaning ``Re{row @ z}``.
        ``quads``: iterable of (block name, matrix, center) — Hermitian PSD
        for complex blocks, symmetric PSD for real ones; ``center`` may be
        None.  ``logs``: iterable of (weight, block name, row, offset) adding
        ``-weight * ln(row @ x_b + offset)``.
        """
        entry = {"label": label, "const": float(const), "lin": [],
                 "quads": [], "logs": []}
        for name, row in (lin or {}).items():
            ref = self._blocks[name]
            row = np.asarray(row)
            vec = complex_row_to_real(row.astype(complex)) if ref.is_complex \
                else row.astype(float).ravel()
            if len(vec) != ref.size:
                raise ValueError(f"linear row for {name!r} has wrong length")
            entry["lin"].append((ref, vec))
        for name, mat, center in (quads or []):
            ref = self._blocks[name]
            mat = np.asarray(mat)
            if ref.is_complex:
                real_mat = realify(hermitize(mat.astype(complex)))
                ctr = None if center is None else to_real(np.asarray(center, dtype=complex))
            else:
                real_mat = 0.5 * (mat + mat.T).astype(float)
                ctr = None if center is None else np.asarray(center, dtype=float).ravel()
            if real_mat.shape != (ref.size, ref.size):
                raise ValueError(f"quad for {name!r} has wrong shape")
            if ctr is not None and len(ctr) != ref.size:
                raise ValueError(f"center for {name!r} has wrong length")
            entry["quads"].append((ref, real_mat, ctr))
        for weight, name, row, offset in (logs or []):
            if weight <= 0:
                raise ValueError("log atoms need positive weight")
            ref = self._blocks[name]
            row = np.asarray(row)
            vec = complex_row_to_real(row.astype(complex)) if ref.is_complex \
                else row.astype(float).ravel()
            if len(vec) != ref.size:
                raise ValueError(f"log row for {name!r} has wrong length")
            entry["logs"].append((float(weight), ref, vec, float(offset)))
        self._constraints.append(entry)

    # -- freezing ----------------------------------------------------------

    def build(self) -> PackedProblem:
        dim = self._dim
        n_con = len(self._constraints)
        objective = np.zeros(dim)
        for ref, vec in self._objective:
            objective[ref.start:ref.start + ref.size] += vec
        const = np.zeros(n_con)
        lin = np.zeros((n_con, dim))
        q_con, q_start, q_size, q_mats, q_ctrs = [], [], [], [], []
        q_mat_off, q_ctr_off = [0], [0]
        l_con, l_weight, l_offset, l_start, l_size, l_coefs = [], [], [], [], [], []
        l_coef_off = [0]
        labels = []
        for i, entry in enumerate(self._constraints):
            labels.append(entry["label"])
            const[i] = entry["const"]
            for ref, vec in entry["lin"]:
                lin[i, ref.start:ref.start + ref.size] += vec
            for ref, mat, ctr in entry["quads"]:
                q_con.append(i)
                q_start.append(ref.start)
                q_size.append(ref.size)
                q_mats.append(mat.ravel())
                q_mat_off.append(q_mat_off[-1] + mat.size)
                center = np.zeros(ref.size) if ctr is None else ctr
                q_ctrs.append(center)
                q_ctr_off.append(q_ctr_off[-1] + ref.size)
            for weight, ref, vec, offset in entry["logs"]:
                l_con.append(i)
                l_weight.append(weight)
                l_offset.append(offset)
                l_start.append(ref.start)
                l_size.append(ref.size)
                l_coefs.append(vec)
                l_coef_off.append(l_coef_off[-1] + ref.size)
        start = np.zeros(dim)
        for name, vec in self._start.items():
            ref = self._blocks[name]
            start[ref.start:ref.start + ref.size] = vec

        def flat(parts):
            return np.concatenate(parts) if parts else np.zeros(0)

        return PackedProblem(
            dim=dim, objective=objective, const=const, lin=lin,
            q_con=np.asarray(q_con, dtype=np.int32),
            q_start=np.asarray(q_start, dtype=np.int32),
            q_size=np.asarray(q_size, dtype=np.int32),
            q_mat_off=np.asarray(q_mat_off, dtype=np.int64),
            q_mats=flat(q_mats),
            q_ctr_off=np.asarray(q_ctr_off, dtype=np.int64),
            q_ctrs=flat(q_ctrs),
            l_con=np.asarray(l_con, dtype=np.int32),
            l_weight=np.asarray(l_weight),
            l_offset=np.asarray(l_offset),
            l_start=np.asarray(l_start, dtype=np.int32),
            l_size=np.asarray(l_size, dtype=np.int32),
            l_coef_off=np.asarray(l_coef_off, dtype=np.int64),
            l_coefs=flat(l_coefs),
            labels=tuple(labels), start=start, blocks=dict(self._blocks))


def with_slack_variable(pp: PackedProblem) -> PackedProblem:
    """Extended problem ``max -s  s.t.  g_i(x) - s <= 0`` for feasibility search.

    The slack is appended as the last real slot, so all block offsets and
    atom references carry over unchanged.
    """
    dim = pp.dim + 1
    objective = np.zeros(dim)
    objective[-1] = -1.0
    lin = np.zeros((pp.n_constraints, dim))
    lin[:, :pp.dim] = pp.lin
    lin[:, -1] = -1.0
    blocks = dict(pp.blocks)
    blocks["__slack__"] = BlockRef("__slack__", pp.dim, 1, False)
    start = np.zeros(dim)
    start[:pp.dim] = pp.start
    return PackedProblem(
        dim=dim, objective=objective, const=pp.const.copy(), lin=lin,
        q_con=pp.q_con, q_start=pp.q_start, q_size=pp.q_size,
        q_mat_off=pp.q_mat_off, q_mats=pp.q_mats,
        q_ctr_off=pp.q_ctr_off, q_ctrs=pp.q_ctrs,
        l_con=pp.l_con, l_weight=pp.l_weight, l_offset=pp.l_offset,
        l_start=pp.l_start, l_size=pp.l_size,
        l_coef_off=pp.l_coef_off, l_coefs=pp.l_coefs,
        labels=pp.labels, start=start, blocks=blocks)

"""Finite automata with exact probabilistic and quantum semantics.

Matrices are stored as sparse columns: for every symbol, ``columns[c]`` is a
tuple of ``(row, value)`` pairs with nonzero values.  A PFA acts on column
vectors (``v' = A v``) and a QFA on density matrices (``rho' = sum E rho E^T``).
Amplitudes are real throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

from .exactnum import DomainError, SqrtSum, as_fraction, format_scalar, sqrt_of

LBRACKET = "⌊"
RBRACKET = "⌋"
CENT = "¢"
DOLLAR = "$"
MARKERS = (LBRACKET, RBRACKET, CENT, DOLLAR)

Scalar = Union[Fraction, SqrtSum]
SparseColumn = tuple  # tuple[tuple[int, Scalar], ...]
SparseMatrix = tuple  # tuple[SparseColumn, ...], indexed by source column


class MachineError(ValueError):
    """A machine description is structurally malformed or fails validation."""


class PostselectionUndefined(ArithmeticError):
    """Both accepting and rejecting masses are zero, so no decision exists."""


def _norm(x) -> Scalar:
    """Canonical scalar: Fraction when rational, SqrtSum otherwise."""
    if isinstance(x, SqrtSum):
        return x.as_rational() if x.is_rational() else x
    return as_fraction(x)


def sparse_from_dense(rows: Sequence[Sequence]) -> SparseMatrix:
    m = len(rows)
    n = len(rows[0]) if m else 0
    for r in rows:
        if len(r) != n:
            raise MachineError("ragged matrix")
    cols = []
    for c in range(n):
        col = []
        for r in range(m):
            v = rows[r][c]
            if v:
                col.append((r, _norm(v)))
        cols.append(tuple(col))
    return tuple(cols)


def dense_from_sparse(cols: SparseMatrix, m: int) -> list[list[Scalar]]:
    out = [[Fraction(0)] * len(cols) for _ in range(m)]
    for c, col in enumerate(cols):
        for r, v in col:
            out[r][c] = v
    return out


def _is_sparse(mat) -> bool:
    return isinstance(mat, tuple) and all(
        isinstance(col, tuple) and all(isinstance(x, tuple) for x in col) for col in mat
    )


def _as_sparse(mat, m: int) -> SparseMatrix:
    if _is_sparse(mat):
        if len(mat) != m or any(not 0 <= r < m for col in mat for r, _ in col):
            raise MachineError(f"expected {m} sparse columns with rows in range")
        return tuple(tuple((r, _norm(v)) for r, v in col if v) for col in mat)
    if len(mat) != m or any(len(row) != m for row in mat):
        raise MachineError(f"expected a {m}x{m} matrix")
    return sparse_from_dense(mat)


def _check_common(m: int, alphabet, initial: int, accepting) -> tuple[tuple[str, ...], frozenset]:
    if m < 1:
        raise MachineError("a machine needs at least one state")
    alphabet = tuple(alphabet)
    if len(set(alphabet)) != len(alphabet):
        raise MachineError("duplicate symbols in alphabet")
    if not 0 <= initial < m:
        raise MachineError(f"initial state {initial} out of range")
    acc = frozenset(accepting)
    bad = [s for s in acc if not 0 <= s < m]
    if bad:
        raise MachineError(f"accepting states out of range: {sorted(bad)}")
    return alphabet, acc


@dataclass(frozen=True, eq=False)
class Pfa:
    """Probabilistic automaton with column-stochastic matrices per symbol."""

    state_count: int
    alphabet: tuple
    columns: Mapping[str, SparseMatrix]
    initial: int = 0
    accepting: frozenset = frozenset()

    def __post_init__(self):
        alphabet, acc = _check_common(self.state_count, self.alphabet, self.initial, self.accepting)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "accepting", acc)
        if set(self.columns) != set(alphabet):
            raise MachineError("matrices must be given for exactly the alphabet symbols")
        cols = {s: _as_sparse(self.columns[s], self.state_count) for s in alphabet}
        object.__setattr__(self, "columns", cols)

    @classmethod
    def from_matrices(cls, matrices: Mapping[str, Sequence[Sequence]], initial: int = 0, accepting=()) -> "Pfa":
        m = len(next(iter(matrices.values())))
        return cls(m, tuple(matrices), {s: sparse_from_dense(a) for s, a in matrices.items()}, initial, frozenset(accepting))

    def matrix(self, symbol: str) -> list[list[Fraction]]:
        return dense_from_sparse(self.columns[symbol], self.state_count)

    @cached_property
    def is_deterministic(self) -> bool:
        return all(
            len(col) == 1 and col[0][1] == 1 for cols in self.columns.values() for col in cols
        )

    def with_accepting(self, accepting) -> "Pfa":
        return Pfa(self.state_count, self.alphabet, self.columns, self.initial, frozenset(accepting))


@dataclass(frozen=True, eq=False)
class Qfa:
    """Quantum automaton: per symbol a list of real operation elements."""

    state_count: int
    alphabet: tuple
    elements: Mapping[str, tuple]
    initial: int = 0
    accepting: frozenset = frozenset()

    def __post_init__(self):
        alphabet, acc = _check_common(self.state_count, self.alphabet, self.initial, self.accepting)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "accepting", acc)
        if set(self.elements) != set(alphabet):
            raise MachineError("operation elements must be given for exactly the alphabet symbols")
        els = {}
        for s in alphabet:
            lst = self.elements[s]
            if not lst:
                raise MachineError(f"symbol {s!r} has no operation elements")
            els[s] = tuple(_as_sparse(e, self.state_count) for e in lst)
        object.__setattr__(self, "elements", els)

    @classmethod
    def from_matrices(cls, elements: Mapping[str, Sequence], initial: int = 0, accepting=()) -> "Qfa":
        first = next(iter(elements.values()))[0]
        m = len(first)
        return cls(m, tuple(elements), {s: tuple(sparse_from_dense(e) for e in lst) for s, lst in elements.items()}, initial, frozenset(accepting))

    def element_matrices(self, symbol: str) -> list[list[list[Scalar]]]:
        return [dense_from_sparse(e, self.state_count) for e in self.elements[symbol]]


@dataclass(frozen=True)
class PostLabels:
    """Accepting / rejecting partition; every other state is non-postselecting."""

    accepting: frozenset
    rejecting: frozenset

    def __post_init__(self):
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        object.__setattr__(self, "rejecting", frozenset(self.rejecting))
        if self.accepting & self.rejecting:
            raise MachineError("a state cannot be both accepting and rejecting")

    @classmethod
    def complement(cls, machine) -> "PostLabels":
        """Non-postselecting reading: accept on the machine's accepting set, reject elsewhere."""
        acc = frozenset(machine.accepting)
        return cls(acc, frozenset(range(machine.state_count)) - acc)

    def check(self, m: int) -> None:
        bad = [s for s in self.accepting | self.rejecting if not 0 <= s < m]
        if bad:
            raise MachineError(f"labels refer to missing states {sorted(bad)}")


@dataclass(frozen=True)
class RunOutcome:
    """Exact accepting, rejecting and non-postselecting masses of one run."""

    a: Scalar
    r: Scalar
    n: Scalar

    def __post_init__(self):
        for name in ("a", "r", "n"):
            v = _norm(getattr(self, name))
            object.__setattr__(self, name, v)
            if v < 0:
                raise DomainError(f"negative mass {name} = {v}")
        if self.a + self.r + self.n != 1:
            raise DomainError(f"masses do not sum to 1: {self.a} + {self.r} + {self.n}")


def post_decide(o: RunOutcome) -> tuple[Scalar, Scalar]:
    """Postselected ``(Acc, Rej) = (a, r) / (a + r)``."""
    total = o.a + o.r
    if total == 0:
        raise PostselectionUndefined("accepting and rejecting masses are both zero")
    total = _norm(total)
    if isinstance(total, SqrtSum):
        raise DomainError("postselected probabilities with an irrational normalizer are not supported")
    acc = _norm(o.a / total) if isinstance(o.a, SqrtSum) else o.a / total
    return acc, 1 - acc


@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)

    def raise_if_invalid(self, what: str = "machine") -> None:
        if not self.ok:
            head = "; ".join(str(v) for v in self.violations[:5])
            raise MachineError(f"{what} failed validation ({len(self.violations)} violations): {head}")


def validate_pfa(p: Pfa) -> ValidationReport:
    """Report ``(symbol, column, sum)`` for every column that is not stochastic."""
    bad = []
    for s in p.alphabet:
        for c, col in enumerate(p.columns[s]):
            total = Fraction(0)
            neg = False
            for _, v in col:
                if isinstance(v, SqrtSum):
                    neg = True
                    break
                if v < 0:
                    neg = True
                total += v
            if neg or total != 1:
                bad.append((s, c, total))
    return ValidationReport(not bad, bad)


def gram(elements: Sequence[SparseMatrix], m: int) -> dict[tuple[int, int], Scalar]:
    """Sparse ``sum_j E_j^T E_j`` over the stacked columns, upper triangle included both ways."""
    out: dict[tuple[int, int], Scalar] = {}
    for e in elements:
        rows: dict[int, list] = {}
        for c, col in enumerate(e):
            for r, v in col:
                rows.setdefault(r, []).append((c, v))
        for entries in rows.values():
            for i, (c1, v1) in enumerate(entries):
                for c2, v2 in entries[i:]:
                    key = (c1, c2)
                    out[key] = out.get(key, Fraction(0)) + v1 * v2
    full: dict[tuple[int, int], Scalar] = {}
    for (c1, c2), v in out.items():
        v = _norm(v)
        if v:
            full[(c1, c2)] = v
            full[(c2, c1)] = v
    return full


def validate_qfa(q: Qfa) -> ValidationReport:
    """Report ``(symbol, row, col, residual)`` wherever ``sum E^T E`` differs from I."""
    bad = []
    m = q.state_count
    for s in q.alphabet:
        g = gram(q.elements[s], m)
        for (i, j), v in sorted(g.items()):
            target = 1 if i == j else 0
            if v != target:
                bad.append((s, i, j, _norm(v - target)))
        for i in range(m):
            if (i, i) not in g:
                bad.append((s, i, i, Fraction(-1)))
    bad.sort(key=lambda t: (q.alphabet.index(t[0]), t[1], t[2]))
    return ValidationReport(not bad, bad)


# runs

def _check_word(machine, word) -> None:
    table = machine.columns if isinstance(machine, Pfa) else machine.elements
    for sym in word:
        if sym not in table:
            raise MachineError(f"symbol {sym!r} is not in the alphabet")


def apply_sparse(cols: SparseMatrix, vec: Mapping[int, Scalar]) -> dict[int, Scalar]:
    out: dict[int, Scalar] = {}
    for c, x in vec.items():
        for r, v in cols[c]:
            y = out.get(r)
            out[r] = x * v if y is None else y + x * v
    return {r: v for r, v in out.items() if v}


def pfa_run(p: Pfa, word: Iterable[str], start: Mapping[int, Fraction] | None = None) -> list[Fraction]:
    """Final state vector ``A_wn ... A_w1 v0`` as a dense list."""
    word = list(word)
    _check_word(p, word)
    vec = dict(start) if start is not None else {p.initial: Fraction(1)}
    for sym in word:
        vec = apply_sparse(p.columns[sym], vec)
    out = [Fraction(0)] * p.state_count
    for i, v in vec.items():
        out[i] = v
    return out


@dataclass(frozen=True)
class DensityMatrix:
    """Real symmetric density matrix stored sparsely as ``{(i, j): value}``."""

    size: int
    entries: Mapping[tuple[int, int], Scalar]

    @classmethod
    def pure(cls, m: int, state: int) -> "DensityMatrix":
        return cls(m, {(state, state): Fraction(1)})

    @classmethod
    def from_branches(cls, m: int, branches: Iterable[Mapping[int, Scalar]]) -> "DensityMatrix":
        acc: dict[tuple[int, int], Scalar] = {}
        for v in branches:
            items = list(v.items())
            for i, x in items:
                for j, y in items:
                    key = (i, j)
                    acc[key] = acc.get(key, Fraction(0)) + x * y
        return cls(m, {k: _norm(v) for k, v in acc.items() if v})

    def __getitem__(self, key):
        return self.entries.get(key, Fraction(0))

    def diagonal(self) -> list[Scalar]:
        return [self.entries.get((i, i), Fraction(0)) for i in range(self.size)]

    def trace(self) -> Scalar:
        return _norm(sum(self.diagonal(), Fraction(0)))

    def dense(self) -> list[list[Scalar]]:
        out = [[Fraction(0)] * self.size for _ in range(self.size)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self.size == other.size and {k: v for k, v in self.entries.items() if v} == {
            k: v for k, v in other.entries.items() if v
        }


def apply_superop(elements: Sequence[SparseMatrix], rho: Mapping[tuple[int, int], Scalar]) -> dict:
    out: dict[tuple[int, int], Scalar] = {}
    for e in elements:
        for (c, d), x in rho.items():
            col_c, col_d = e[c], e[d]
            if not col_c or not col_d:
                continue
            for r, v1 in col_c:
                t = v1 * x
                for s, v2 in col_d:
                    key = (r, s)
                    y = out.get(key)
                    out[key] = t * v2 if y is None else y + t * v2
    return {k: _norm(v) for k, v in out.items() if v}


def qfa_run(q: Qfa, word: Iterable[str], start: DensityMatrix | None = None) -> DensityMatrix:
    """Full density-matrix evolution."""
    word = list(word)
    _check_word(q, word)
    rho = dict((start or DensityMatrix.pure(q.state_count, q.initial)).entries)
    for sym in word:
        rho = apply_superop(q.elements[sym], rho)
    return DensityMatrix(q.state_count, rho)


def qfa_branches(q: Qfa, word: Iterable[str], drop: frozenset = frozenset()) -> list[dict[int, Scalar]]:
    """Unnormalized pure branches ``E_jn ... E_j1 |q_I>``; zero branches are discarded.

    States in ``drop`` are projected away after each step, which is exact for
    the remaining coordinates when ``drop`` spans an invariant subspace.
    """
    word = list(word)
    _check_word(q, word)
    branches = [{q.initial: Fraction(1)}]
    for sym in word:
        branches = _step_branches(q.elements[sym], branches, drop)
    return branches


def _step_branches(elements, branches, drop):
    nxt = []
    for v in branches:
        for e in elements:
            w = apply_sparse(e, v)
            if drop:
                w = {i: x for i, x in w.items() if i not in drop}
            if w:
                nxt.append(w)
    return nxt


def absorbing_states(q: Qfa, labels: PostLabels) -> frozenset:
    """Largest set of non-postselecting states whose span every element maps into itself."""
    z = set(range(q.state_count)) - set(labels.accepting) - set(labels.rejecting)
    changed = True
    while changed:
        changed = False
        for lst in q.elements.values():
            for e in lst:
                for c in list(z):
                    if any(r not in z for r, _ in e[c]):
                        z.discard(c)
                        changed = True
    return frozenset(z)


def _mass(diag_items, labels: PostLabels) -> RunOutcome:
    a = r = Fraction(0)
    for i, v in diag_items:
        if i in labels.accepting:
            a = a + v
        elif i in labels.rejecting:
            r = r + v
    a, r = _norm(a), _norm(r)
    return RunOutcome(a, r, _norm(1 - a - r))


class Evolver:
    """Incremental exact evolution of one machine, used for prefix sharing.

    For QFAs the state is a list of pure branches restricted to the states
    that can still influence a postselected outcome; it switches to a reduced
    density matrix when the branch count exceeds ``branch_limit``.
    """

    def __init__(self, machine, labels: PostLabels | None = None, branch_limit: int = 64):
        self.machine = machine
        self.labels = labels if labels is not None else PostLabels.complement(machine)
        self.labels.check(machine.state_count)
        self.branch_limit = branch_limit
        self.quantum = isinstance(machine, Qfa)
        self.drop = absorbing_states(machine, self.labels) if self.quantum else frozenset()

    def start(self):
        if self.quantum:
            return ("b", [{self.machine.initial: Fraction(1)}])
        return {self.machine.initial: Fraction(1)}

    def step(self, state, sym: str):
        m = self.machine
        if not self.quantum:
            cols = m.columns.get(sym)
            if cols is None:
                raise MachineError(f"symbol {sym!r} is not in the alphabet")
            return apply_sparse(cols, state)
        els = m.elements.get(sym)
        if els is None:
            raise MachineError(f"symbol {sym!r} is not in the alphabet")
        kind, data = state
        if kind == "b":
            nxt = _step_branches(els, data, self.drop)
            if len(nxt) <= self.branch_limit:
                return ("b", nxt)
            return ("r", DensityMatrix.from_branches(m.state_count, nxt).entries)
        rho = apply_superop(els, data)
        if self.drop:
            rho = {k: v for k, v in rho.items() if k[0] not in self.drop and k[1] not in self.drop}
        return ("r", rho)

    def run(self, word, state=None):
        st = self.start() if state is None else state
        for sym in word:
            st = self.step(st, sym)
        return st

    def outcome(self, state) -> RunOutcome:
        if not self.quantum:
            return _mass(state.items(), self.labels)
        kind, data = state
        if kind == "b":
            diag: dict[int, Scalar] = {}
            for v in data:
                for i, x in v.items():
                    diag[i] = diag.get(i, Fraction(0)) + x * x
            return _mass(diag.items(), self.labels)
        return _mass(((i, v) for (i, j), v in data.items() if i == j), self.labels)

    def is_dead(self, state) -> bool:
        """True when no mass can ever reach a postselecting state again."""
        if self.quantum:
            kind, data = state
            return kind == "b" and not data
        return False


def outcome_of(machine, labels: PostLabels | None, word, method: str = "auto") -> RunOutcome:
    """Accepting / rejecting / non-postselecting masses after reading ``word``.

    ``method`` selects ``density`` (full density matrix) or ``branches``
    (reduced pure branches); ``auto`` uses the reduced tracker for QFAs.
    """
    labels = labels if labels is not None else PostLabels.complement(machine)
    labels.check(machine.state_count)
    word = list(word)
    if isinstance(machine, Pfa):
        return _mass(enumerate(pfa_run(machine, word)), labels)
    if method == "density":
        rho = qfa_run(machine, word)
        return _mass(enumerate(rho.diagonal()), labels)
    if method == "branches":
        branches = qfa_branches(machine, word)
        rho = DensityMatrix.from_branches(machine.state_count, branches)
        return _mass(enumerate(rho.diagonal()), labels)
    ev = Evolver(machine, labels)
    return ev.outcome(ev.run(word))


# construction helpers

def stochastic_embed(op: Sequence[Sequence[int]], l: int, layout: Sequence[int], slack: int, size: int,
                     col_layout: Sequence[int] | None = None) -> list[list[Fraction]]:
    """Place ``op / l`` at ``layout`` rows (and ``col_layout`` columns) of a ``size`` square matrix.

    The slack row absorbs ``(l - column sum) / l`` in every embedded column,
    so those columns sum to 1.  Other columns are left zero.
    """
    if l < 1:
        raise DomainError("normalization factor must be positive")
    col_layout = list(layout if col_layout is None else col_layout)
    k = len(op)
    if k != len(layout) or any(len(row) != len(col_layout) for row in op):
        raise MachineError("operator shape does not match the layout")
    out = [[Fraction(0)] * size for _ in range(size)]
    for j, c in enumerate(col_layout):
        total = 0
        for i, r in enumerate(layout):
            v = op[i][j]
            if v < 0:
                raise DomainError(f"negative entry in column {j}")
            total += v
            out[r][c] += Fraction(v, l)
        if total > l:
            raise DomainError(f"column {j} sums to {total} > {l}")
        out[slack][c] += Fraction(l - total, l)
    return out


def ldl_psd(a: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[Fraction]]:
    """Exact ``A = L D L^T`` for a rational positive semidefinite matrix (L unit lower)."""
    n = len(a)
    work = [[as_fraction(x) for x in row] for row in a]
    lower = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    d = [Fraction(0)] * n
    for k in range(n):
        piv = work[k][k]
        if piv < 0:
            raise DomainError(f"not positive semidefinite at column {k}")
        d[k] = piv
        if piv == 0:
            if any(work[i][k] for i in range(k + 1, n)):
                raise DomainError(f"not positive semidefinite at column {k}")
            continue
        for i in range(k + 1, n):
            lower[i][k] = work[i][k] / piv
        for i in range(k + 1, n):
            lik = lower[i][k]
            if not lik:
                continue
            for j in range(k + 1, i + 1):
                work[i][j] -= lik * work[j][k]
                work[j][i] = work[i][j]
    return lower, d


def superop_complete(partial: Sequence, aux_targets: Sequence[int], size: int | None = None) -> list[list[list[Scalar]]]:
    """Append operation elements that make ``partial`` a valid superoperator.

    Residual norm is routed into the ``aux_targets`` rows: the completion is
    the LDL factorization of ``I - sum E^T E``, one row per positive pivot,
    filled into as many extra elements as needed.  The residual must be
    rational (true whenever the partial Gram matrix is).
    """
    if not partial:
        raise MachineError("nothing to complete")
    m = size if size is not None else len(partial[0])
    sparse = [_as_sparse(e, m) for e in partial]
    g = gram(sparse, m)
    for c in range(m):
        v = g.get((c, c), Fraction(0))
        if v > 1:
            raise DomainError(f"column {c} has squared norm {format_scalar(v)} > 1")
    resid = [[Fraction(0)] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            v = _norm((1 if i == j else 0) - g.get((i, j), Fraction(0)))
            if isinstance(v, SqrtSum):
                raise DomainError(f"irrational residual at ({i}, {j}); only rational residuals are supported")
            resid[i][j] = v
    lower, d = ldl_psd(resid)
    pivots = [k for k in range(m) if d[k] > 0]
    if not aux_targets and pivots:
        raise DomainError("completion needs auxiliary target states")
    out = [list(map(list, dense_from_sparse(e, m))) for e in sparse]
    extra: list[list[list[Scalar]]] = []
    for slot, k in enumerate(pivots):
        idx, pos = divmod(slot, len(aux_targets))
        if idx == len(extra):
            extra.append([[Fraction(0)] * m for _ in range(m)])
        root = sqrt_of(d[k])
        row = aux_targets[pos]
        for j in range(k, m):
            if lower[j][k]:
                extra[idx][row][j] = _norm(root * lower[j][k])
    return out + extra

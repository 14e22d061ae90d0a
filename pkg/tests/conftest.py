"""Shared generators and oracles for the test suite.

Everything is seeded through numpy Generators so runs are reproducible; the
expression corpus used by several suites is built once per session.
"""

import numpy as np
import pytest

from ncreal.core import (
    CentrePoint,
    MatrixTuple,
    SingularMatrixError,
    ampliate,
    column_norm,
    deviation_from_centre,
)
from ncreal.linmap import MatrixLinearMap, ampliated_apply
from ncreal.realization import DescriptorRealization, in_domain
from ncreal.algebra import fm_to_desc
from ncreal.parser import (
    Inverse,
    Negate,
    Product,
    Sum,
    UndefinedAtCentreError,
    eval_expression,
    parse,
    realize_expression,
)


def cmat(rng, rows, cols, scale=1.0):
    return scale * (rng.standard_normal((rows, cols))
                    + 1j * rng.standard_normal((rows, cols)))


def random_centre(rng, n, d, scale=0.4):
    return CentrePoint([cmat(rng, n, n, scale) for _ in range(d)])


def random_tuple(rng, n, m, d, scale=1.0):
    return MatrixTuple([cmat(rng, m * n, m * n, scale) for _ in range(d)], n)


def unit_column_tuple(rng, n, m, d):
    """A random tuple rescaled to column norm one."""
    h = random_tuple(rng, n, m, d)
    return h.scaled(1.0 / column_norm(h))


def random_linmap(rng, d, n, N, scale=0.5):
    return MatrixLinearMap(cmat(rng, d * n * n * N, N, scale).reshape(d, n, n, N, N))


def random_descriptor(rng, n, N, d, y=None, scale=0.5):
    if y is None:
        y = random_centre(rng, n, d)
    a = MatrixLinearMap(cmat(rng, d * n * n * N, N, scale).reshape(d, n, n, N, N))
    return DescriptorRealization(a, cmat(rng, N, n), cmat(rng, N, n), y)


def random_invertible(rng, size, spread=0.3):
    return np.eye(size, dtype=np.complex128) + cmat(rng, size, size, spread)


def point_near_centre(rng, y, m, eps):
    return ampliate(y, m) + unit_column_tuple(rng, y.base_n, m, y.d).scaled(eps)


def word_sum_transfer(r, x, max_len):
    """Reference word-by-word evaluation of the truncated transfer series."""
    from ncreal.core import all_words

    dev = deviation_from_centre(x, r.Y)
    m = x.level_m
    factors = []
    for j in range(1, r.d + 1):
        comps = [dev.components[k] if k == j - 1 else np.zeros_like(dev.components[k])
                 for k in range(r.d)]
        factors.append(ampliated_apply(r.A, MatrixTuple(comps, r.n)))
    eye = np.eye(m)
    bstar = np.kron(eye, np.conj(r.b).T)
    camp = np.kron(eye, r.c)
    total = np.zeros((m * r.n, m * r.n), dtype=np.complex128)
    for word in all_words(r.d, max_len):
        prod = np.eye(m * r.N, dtype=np.complex128)
        for letter in word:
            prod = prod @ factors[letter - 1]
        total += bstar @ prod @ camp
    return total


# ---------------------------------------------------------------------------
# random NC rational expressions
# ---------------------------------------------------------------------------

def random_expression_text(rng, d, depth):
    if depth == 0 or rng.uniform() < 0.3:
        if rng.uniform() < 0.7:
            return "x%d" % rng.integers(1, d + 1)
        return "%.2f" % rng.uniform(0.5, 2.5)
    roll = rng.uniform()
    a = random_expression_text(rng, d, depth - 1)
    if roll < 0.30:
        return "(%s + %s)" % (a, random_expression_text(rng, d, depth - 1))
    if roll < 0.50:
        return "(%s - %s)" % (a, random_expression_text(rng, d, depth - 1))
    if roll < 0.80:
        return "(%s)*(%s)" % (a, random_expression_text(rng, d, depth - 1))
    return "inv(%s + %.2f)" % (a, rng.uniform(0.8, 2.0))


def _inverse_conditioning(expr, x):
    """Smallest sigma_min over the inv(...) nodes of the AST, evaluated at x."""
    worst = np.inf
    if isinstance(expr, Inverse):
        val = eval_expression(expr.child, x)
        s = np.linalg.svd(val, compute_uv=False)
        worst = min(worst, float(s[-1]))
        worst = min(worst, _inverse_conditioning(expr.child, x))
    elif isinstance(expr, (Sum, Product)):
        for child in getattr(expr, "terms", getattr(expr, "factors", ())):
            worst = min(worst, _inverse_conditioning(child, x))
    elif isinstance(expr, Negate):
        worst = min(worst, _inverse_conditioning(expr.child, x))
    return worst


class CorpusItem:
    def __init__(self, text, expr, centre, fm):
        self.text = text
        self.expr = expr
        self.centre = centre
        self.fm = fm
        self._desc = None

    @property
    def desc(self):
        if self._desc is None:
            self._desc = fm_to_desc(self.fm)
        return self._desc

    def sample_points(self, rng, count, level_choices=(1, 2), eps0=0.2):
        """In-domain points where the expression evaluates as well."""
        pts = []
        guard = 0
        while len(pts) < count and guard < 400 * count:
            guard += 1
            m = int(rng.choice(level_choices))
            eps = eps0 * 0.5 ** rng.integers(0, 4)
            x = point_near_centre(rng, self.centre, m, eps)
            try:
                cond = _inverse_conditioning(self.expr, x)
            except SingularMatrixError:
                continue
            if cond < 1e-3:
                continue
            if not in_domain(self.desc, x):
                continue
            pts.append(x)
        if len(pts) < count:
            raise RuntimeError("could not sample enough in-domain points for %r"
                               % self.text)
        return pts


def build_corpus(seed, count, d=2, sizes=(1, 2, 3), max_depth=4):
    rng = np.random.default_rng(seed)
    items = []
    while len(items) < count:
        n = sizes[len(items) % len(sizes)]
        y = random_centre(rng, n, d)
        text = random_expression_text(rng, d, int(rng.integers(1, max_depth + 1)))
        try:
            expr = parse(text, d)
            if _inverse_conditioning(expr, ampliate(y, 1)) < 0.08:
                continue
            fm = realize_expression(expr, y)
        except (UndefinedAtCentreError, SingularMatrixError):
            continue
        if fm.N > 60 or np.linalg.norm(fm.D) > 50:
            continue
        if fm.N and (np.max(np.abs(fm.A.dense())) > 40
                     or np.max(np.abs(fm.B.dense())) > 40):
            continue
        items.append(CorpusItem(text, expr, y, fm))
    return items


@pytest.fixture(scope="session")
def nc_corpus():
    """The 200-expression corpus shared by the acceptance criteria."""
    return build_corpus(seed=20240817, count=200)

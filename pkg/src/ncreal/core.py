"""Dense complex matrices, free-monoid words, and points of the matrix universe.

Everything downstream manipulates column d-tuples X = (X_1, ..., X_d) of
square complex matrices.  A tuple at level m over centre size n consists of
d matrices of side m*n, read as an m x m grid of n x n blocks (block index
outer, centre index inner, flattened block-row-major).  Functions never
mutate their arguments; component arrays are marked read-only on
construction so tuples can be shared freely across threads.
"""

import json

import numpy as np
import scipy.linalg

__all__ = [
    "INVERTIBILITY_RTOL",
    "RANK_RTOL",
    "SingularMatrixError",
    "MatrixTuple",
    "CentrePoint",
    "all_words",
    "word_transpose",
    "matrix_units",
    "direct_sum",
    "ampliate",
    "column_norm",
    "apply_similarity",
    "deviation_from_centre",
    "is_invertible_matrix",
    "invert_checked",
    "solve_refined",
]

# A matrix counts as invertible when sigma_min > INVERTIBILITY_RTOL * max(1, sigma_max).
INVERTIBILITY_RTOL = 1e-12

# Relative rank cutoff used by every orthonormalization / rank decision.
RANK_RTOL = 1e-10


class SingularMatrixError(np.linalg.LinAlgError):
    """A matrix that had to be inverted failed the invertibility threshold.

    The offending smallest singular value is stored on ``sigma_min``.
    """

    def __init__(self, message, sigma_min=None):
        super().__init__(message)
        self.sigma_min = sigma_min


def _as_complex(a, name="matrix"):
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError("%s must be two-dimensional, got shape %s" % (name, arr.shape))
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise ValueError("%s contains non-finite entries" % name)
    return arr


def _extreme_singular_values(m):
    if m.shape[0] == 0 or m.shape[1] == 0:
        return np.inf, 0.0
    s = np.linalg.svd(m, compute_uv=False)
    return s[-1], s[0]


def is_invertible_matrix(m):
    """Scale-aware invertibility test: sigma_min > 1e-12 * max(1, sigma_max)."""
    m = np.asarray(m)
    if m.shape[0] != m.shape[1]:
        return False
    smin, smax = _extreme_singular_values(m)
    return smin > INVERTIBILITY_RTOL * max(1.0, smax)


def invert_checked(m, what="matrix"):
    """Invert ``m``, raising :class:`SingularMatrixError` below the threshold."""
    m = _as_complex(m, what)
    if m.shape[0] != m.shape[1]:
        raise ValueError("cannot invert non-square %s of shape %s" % (what, m.shape))
    if m.shape[0] == 0:
        return m.copy()
    smin, smax = _extreme_singular_values(m)
    if smin <= INVERTIBILITY_RTOL * max(1.0, smax):
        raise SingularMatrixError(
            "%s is singular at the working threshold (sigma_min = %.3e)" % (what, smin),
            sigma_min=smin,
        )
    return np.linalg.inv(m)


def solve_refined(m, rhs):
    """Solve m @ z = rhs by LU with partial pivoting plus one refinement step."""
    if m.shape[0] == 0:
        return np.zeros((0, rhs.shape[1]), dtype=np.complex128)
    lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    z = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    resid = rhs - m @ z
    z += scipy.linalg.lu_solve((lu, piv), resid, check_finite=False)
    return z


def matrix_units(n):
    """All standard matrix units of C^{n x n} as triples (p, q, E_pq)."""
    units = []
    for p in range(n):
        for q in range(n):
            e = np.zeros((n, n), dtype=np.complex128)
            e[p, q] = 1.0
            units.append((p, q, e))
    return units


# ---------------------------------------------------------------------------
# words of the free monoid on d letters
# ---------------------------------------------------------------------------
# A word is a plain tuple of 1-based letters; the empty tuple is the unit.

def all_words(d, max_len):
    """All words of length 0..max_len, in length-then-lexicographic order."""
    if d < 1:
        raise ValueError("need at least one letter, got d = %d" % d)
    words = [()]
    level = [()]
    for _ in range(max_len):
        level = [w + (j,) for w in level for j in range(1, d + 1)]
        words.extend(level)
    return words


def word_transpose(word):
    return tuple(reversed(word))


# ---------------------------------------------------------------------------
# matrix tuples
# ---------------------------------------------------------------------------

class MatrixTuple:
    """A level-m point of the matrix universe over centre size n.

    Parameters
    ----------
    components : sequence of array_like
        d square complex matrices, all of side ``base_n * level_m``.
    base_n : int
        Centre size n; the side of each component must be a multiple of it.
    """

    def __init__(self, components, base_n):
        comps = [_as_complex(c, "component %d" % (j + 1)) for j, c in enumerate(components)]
        if not comps:
            raise ValueError("a matrix tuple needs at least one component")
        side = comps[0].shape[0]
        for j, c in enumerate(comps):
            if c.shape != (side, side):
                raise ValueError(
                    "components disagree in shape: component 1 is %s, component %d is %s"
                    % (comps[0].shape, j + 1, c.shape)
                )
        if base_n < 1 or side % base_n != 0:
            raise ValueError(
                "component side %d is not a multiple of centre size %d" % (side, base_n)
            )
        for c in comps:
            c.flags.writeable = False
        self.components = tuple(comps)
        self.base_n = int(base_n)
        self.level_m = side // base_n

    @property
    def d(self):
        return len(self.components)

    @property
    def side(self):
        return self.base_n * self.level_m

    def component(self, j):
        """Component X_j for a 1-based letter j."""
        return self.components[j - 1]

    def block(self, j, k, l):
        """The (k, l) centre-size block of component j (all indices 0-based except j)."""
        n = self.base_n
        return self.components[j - 1][k * n:(k + 1) * n, l * n:(l + 1) * n]

    def __sub__(self, other):
        if not isinstance(other, MatrixTuple):
            return NotImplemented
        if other.d != self.d or other.side != self.side:
            raise ValueError(
                "tuple shapes differ: %s vs %s" % (self._shape_str(), other._shape_str())
            )
        return MatrixTuple(
            [a - b for a, b in zip(self.components, other.components)], self.base_n
        )

    def __add__(self, other):
        if not isinstance(other, MatrixTuple):
            return NotImplemented
        if other.d != self.d or other.side != self.side:
            raise ValueError(
                "tuple shapes differ: %s vs %s" % (self._shape_str(), other._shape_str())
            )
        return MatrixTuple(
            [a + b for a, b in zip(self.components, other.components)], self.base_n
        )

    def scaled(self, t):
        return MatrixTuple([t * c for c in self.components], self.base_n)

    def rebased(self, base_n):
        """The same matrices read over a different centre size."""
        return MatrixTuple(self.components, base_n)

    def _shape_str(self):
        return "(d=%d, n=%d, m=%d)" % (self.d, self.base_n, self.level_m)

    def __repr__(self):
        return "MatrixTuple%s" % self._shape_str()

    # serialization: {"n":…, "m":…, "d":…, "components":[flat row-major [re,im] lists]}
    def to_json(self):
        return {
            "n": self.base_n,
            "m": self.level_m,
            "d": self.d,
            "components": [
                [[float(z.real), float(z.imag)] for z in c.ravel()] for c in self.components
            ],
        }

    @classmethod
    def from_json(cls, obj):
        n, m, d = obj["n"], obj["m"], obj["d"]
        side = n * m
        comps = []
        for flat in obj["components"]:
            if len(flat) != side * side:
                raise ValueError(
                    "component has %d entries, expected %d" % (len(flat), side * side)
                )
            arr = np.array([complex(re, im) for re, im in flat]).reshape(side, side)
            comps.append(arr)
        if len(comps) != d:
            raise ValueError("expected %d components, found %d" % (d, len(comps)))
        if m == 1:
            return CentrePoint(comps)
        return cls(comps, n)

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


class CentrePoint(MatrixTuple):
    """A level-1 tuple: the matrix centre Y of a realization."""

    def __init__(self, components, base_n=None):
        side = np.asarray(components[0]).shape[0]
        if base_n is None:
            base_n = side
        if base_n != side:
            raise ValueError("a centre point lives at level 1; got side %d over n = %d"
                             % (side, base_n))
        super().__init__(components, base_n)


def direct_sum(x, z):
    """Componentwise block-diagonal direct sum; levels add."""
    if x.d != z.d or x.base_n != z.base_n:
        raise ValueError(
            "direct sum needs matching centre data: %s vs %s"
            % (x._shape_str(), z._shape_str())
        )
    comps = [scipy.linalg.block_diag(a, b) for a, b in zip(x.components, z.components)]
    return MatrixTuple(comps, x.base_n)


def ampliate(y, m):
    """The m-fold block-diagonal repetition I_m (x) Y of a centre point."""
    if m < 1:
        raise ValueError("ampliation order must be at least 1, got %d" % m)
    if y.level_m != 1:
        raise ValueError("ampliate expects a centre point (level 1), got level %d" % y.level_m)
    eye = np.eye(m)
    return MatrixTuple([np.kron(eye, c) for c in y.components], y.base_n)


def deviation_from_centre(x, y):
    """X - I_m (x) Y as a matrix tuple at the level of X."""
    if x.base_n != y.base_n or x.d != y.d:
        raise ValueError(
            "point and centre disagree: %s vs %s" % (x._shape_str(), y._shape_str())
        )
    return x - ampliate(y, x.level_m)


def column_norm(x):
    """Largest singular value of the vertical stack of the components."""
    return float(np.linalg.norm(np.vstack(x.components), 2))


def apply_similarity(s, x):
    """Joint similarity S^{-1} X_j S on every component."""
    s = _as_complex(s, "similarity")
    if s.shape != (x.side, x.side):
        raise ValueError(
            "similarity of shape %s does not match tuple side %d" % (s.shape, x.side)
        )
    smin, smax = _extreme_singular_values(s)
    if smin <= INVERTIBILITY_RTOL * max(1.0, smax):
        raise SingularMatrixError(
            "similarity is singular at the working threshold (sigma_min = %.3e)" % smin,
            sigma_min=smin,
        )
    s_inv = np.linalg.inv(s)
    return MatrixTuple([s_inv @ c @ s for c in x.components], x.base_n)

"""Triangle quadrature: a degree-5 seven-point rule and Duffy-collapsed Gauss-Jacobi."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

_S15 = math.sqrt(15.0)
_A1 = (6 - _S15) / 21
_A2 = (6 + _S15) / 21
_W1 = (155 - _S15) / 1200
_W2 = (155 + _S15) / 1200

# barycentric points and weights (weights sum to 1)
BARY7 = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _A1, 1 - 2 * _A1], [_A1, 1 - 2 * _A1, _A1], [1 - 2 * _A1, _A1, _A1],
    [_A2, _A2, 1 - 2 * _A2], [_A2, 1 - 2 * _A2, _A2], [1 - 2 * _A2, _A2, _A2],
])
W7 = np.array([9 / 40, _W1, _W1, _W1, _W2, _W2, _W2])

BARY3 = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
W3 = np.full(3, 1 / 3)


@lru_cache(maxsize=64)
def duffy_rule(n: int, beta: float = 0.0):
    """
    Rule on the reference square for  int_T s^beta g  over a triangle collapsed at
    its first vertex: x = A + s((1 - t)(B - A) + t(C - A)), dx = 2|T| s ds dt.
    Returns (s, t, w) with the factor s^(beta + 1) absorbed into w (|T| not included).
    """
    # Gauss-Jacobi on [-1, 1] with weight (1 + x)^(beta + 1), mapped to s in [0, 1]
    xs, ws = roots_jacobi(n, 0.0, beta + 1.0)
    s = (xs + 1) / 2
    ws = ws / 2 ** (beta + 2.0)
    xt, wt = roots_legendre(n)
    t = (xt + 1) / 2
    wt = wt / 2
    S, Tt = np.meshgrid(s, t, indexing="ij")
    W = np.outer(ws, wt) * 2.0
    return S.ravel(), Tt.ravel(), W.ravel()

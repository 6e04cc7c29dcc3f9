"""Central table of numeric defaults used by the command line and scripts.

Every tolerance or constant that is a modelling choice rather than a property
of the mathematics lives here so it can be audited in one place.
"""

DEFAULTS = {
    # radius shrink in the lower-bound study of |(f^n)'(xi)|
    "shrink": 0.9,
    # constant in the radius beta M(|xi|, g) of the composite study
    "beta": 1e-10,
    # |lambda| <= 1 + tol counts as non-repelling
    "indifferent_tol": 1e-7,
    # relative single-linkage tolerance for critical values (times max |p(c)|)
    "cluster_rtol": 1e-8,
    # multiplier classification band for transcendental orbits
    "class_tol": 1e-9,
    # Newton step tolerance in the periodic-point search
    "newton_tol": 1e-13,
    # quadtree budgets for the periodic-point search
    "max_depth": 14,
    "max_nodes": 2**16,
    "max_boxes": 20000,
    # width of the local-model disk |tau| <= K / nu
    "K": 1.0,
    # exponent slack in nu <= (log mu)^(1 + eps)
    "wv_eps": 0.1,
    # minimum-modulus condition constants
    "a": 1.0,
    "b": 2.0,
    "a4_eps": 0.5,
    "a4_c": 2.0,
    # grid of radii for the hypothesis check before the bound studies
    "hypothesis_radii": [4.0, 8.0, 16.0],
    # Lambda(p^n) / d^n ratios below this are flagged
    "problem3_flag": 0.99,
    "seed": 0,
}

# preset search boxes for period-2 points of exp: they straddle the lines
# Im z = +-pi/2 and +-3 pi/2 where the 2-cycles accumulate
EXP_PERIOD2_BOXES = [
    (1.0, 4.0, 1.0, 2.0),
    (1.0, 4.0, -2.0, -1.0),
    (0.5, 4.0, 4.2, 5.2),
    (0.5, 4.0, -5.2, -4.2),
]

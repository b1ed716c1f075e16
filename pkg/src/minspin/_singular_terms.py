"""Machine-generated singular-arc expressions.  Do not edit by hand.

Generated by tools/generate_singular_terms.py, which differentiates the
switching functions four times along the state/costate flow and extracts
the exact coefficients of d4(g_j)/dt4 = N_j + D_j * u_j.  Every function
takes scalars or equally shaped numpy arrays and is safe to vectorize.

The test suite re-derives these expressions symbolically and compares
them numerically (see tests/test_pmp.py).
"""

# ruff: noqa: E501

def sw1_deriv1(a, w1, w2, w3, x1, x2, l1, l2, l3, l4, l5, u1, u2, u3):
    c0 = (1/2)*l4
    return a*l2*w3 - c0*x1**2 - c0 + (1/2)*l4*x2**2 - l5*x1*x2


def sw1_deriv2(a, w1, w2, w3, x1, x2, l1, l2, l3, l4, l5, u1, u2, u3):
    c0 = (1/2)*l5*w3
    c1 = a*c0
    c2 = l4*w3*x1*x2
    c3 = x1**2
    c4 = x2**2
    return -a**2*l1*w3**2 - a*c2 + (1/2)*a*c3*l5*w3 + a*l2*u3 - c0*c4 - c0 - c1*c4 - c1 - c2 + (1/2)*c3*l5*w3 + l4*w2*x2 - l5*w2*x1


def sw1_deriv3(a, w1, w2, w3, x1, x2, l1, l2, l3, l4, l5, u1, u2, u3):
    c0 = l5*u3
    c1 = (1/2)*c0
    c2 = a*c0
    c3 = w1*w2
    c4 = (1/2)*c3*l5
    c5 = l4*x2
    c6 = c5*x1
    c7 = c6*u3
    c8 = c5*w1*w3
    c9 = w2**2
    c10 = w3**2
    c11 = x1**2
    c12 = x2**2
    c13 = 2*a
    c14 = a**2
    c15 = (1/2)*l4
    c16 = c10*c15
    return -a**3*l2*w3**3 + (1/2)*a*c10*c11*l4 + (1/2)*a*c10*l4 + a*c10*l5*x1*x2 + a*c11*l5*u3 - a*c12*c16 + 2*a*l5*w1*w3*x1 - c1*c12 - c1 + (1/2)*c10*c11*c14*l4 + (1/2)*c10*c11*l4 + (1/2)*c10*c14*l4 + c10*c14*l5*x1*x2 + (1/2)*c10*l4 + c10*l5*x1*x2 + (1/2)*c11*c9*l4 + (1/2)*c11*l5*u3 + (1/2)*c11*l5*w1*w2 - c12*c14*c16 - c12*c15*c9 - c12*c16 - c12*c2 - c12*c4 - c13*c7 - c13*c8 - 3*c14*l1*u3*w3 - c2 - c3*c6 - c4 - c7 - c8 + (1/2)*c9*l4 + c9*l5*x1*x2 + l4*u2*x2 - l5*u2*x1 + l5*w1*w3*x1


def sw1_numerator(a, w1, w2, w3, x1, x2, l1, l2, l3, l4, l5, u1, u2, u3):
    c0 = (3/2)*l4
    c1 = u2*w2
    c2 = c0*c1
    c3 = u3*w3
    c4 = c0*c3
    c5 = u2*w1
    c6 = c5*l5
    c7 = w3**3
    c8 = (1/2)*l5
    c9 = c7*c8
    c10 = w2**3
    c11 = l5*x1
    c12 = c3*l4
    c13 = 2*a
    c14 = c12*c13
    c15 = l4*x2
    c16 = 2*w1
    c17 = c16*u3
    c18 = a*c9
    c19 = w1**2
    c20 = c8*w3
    c21 = c19*c20
    c22 = w2**2
    c23 = c20*c22
    c24 = c15*x1
    c25 = c24*c7
    c26 = x1**2
    c27 = c11*w2
    c28 = w3**2
    c29 = c27*c28
    c30 = 4*a
    c31 = c30*w1
    c32 = c31*u3
    c33 = a*c16*l4*w2*w3
    c34 = c11*x2
    c35 = 3*c34
    c36 = c19*w3
    c37 = a*c36
    c38 = (3/2)*c37*l5
    c39 = a*c23
    c40 = a**2
    c41 = (5/2)*c12*c40
    c42 = x2**2
    c43 = c15*w2
    c44 = c28*c43
    c45 = c22*c24*w3
    c46 = c3*c34
    c47 = 3*c40
    c48 = c40*c9
    c49 = a**3
    c50 = c49*c9
    c51 = c23*c42
    return a**4*l1*w3**4 + a*c25 - a*c45 - a*c51 + c1*c35 + c10*c11 - c10*c15 + c11*c17 + c11*c32 + c13*c29 - c13*c44 + c14*c26 - c14*c42 + c14 - c15*c17 - c15*c32 - c18*c26 + c18*c42 + c18 + c19*c27 - c19*c43 + c2*c26 - c2*c42 + c2 - c21*c26 + c21*c42 + c21 - c23*c26 + c23 + c24*c36 + 3*c24*c37 - 2*c24*c5 + c25*c40 + c25*c49 + c25 - c26*c33 - c26*c38 + c26*c39 + c26*c4 + c26*c41 - c26*c48 - c26*c50 + c26*c6 - c26*c9 - c27*c31*w3*x2 - 6*c28*c49*l2*u3 + c29*c47 + c29 + c3*c35 + c30*c46 + c33*c42 - c33 + c38*c42 + c38 - c39 - c4*c42 + c4 + 5*c40*c46 - c41*c42 + c41 + c42*c48 + c42*c50 - c42*c6 + c42*c9 - c44*c47 - c44 + c45 - c47*l1*u3**2 + c48 + c50 + c51 - c6 + c9


def sw1_denominator(a, w1, w2, w3, x1, x2, l1, l2, l3, l4, l5, u1, u2, u3):
    c0 = (1/2)*l5*w2
    c1 = l4*x2
    c2 = c1*w3
    return -2*a*c2 + 2*a*l5*w3*x1 - c0*x2**2 - c0 - c1*w2*x1 - c2 + (1/2)*l5*w2*x1**2 + l5*w3*x1


def sw2_deriv1(a, w1, w2, w3, x1, x2, l1, l2, l3, l4, l5, u1, u2, u3):
    c0 = (1/2)*l5
    return -a*l1*w3 - c0*x2**2 - c0 - l4*x1*x2 + (1/2)*l5*x1**2


def sw2_deriv2(a, w1, w2, w3, x1, x2, l1, l2, l3, l4, l5, u1, u2, u3):
    c0 = (1/2)*l4*w3
    c1 = l5*x1
    c2 = a*c0
    c3 = c1*w3*x2
    c4 = x1**2
    c5 = x2**2
    return -a**2*l2*w3**2 + a*c3 - a*l1*u3 + c0*c4 - c0*c5 + c0 + c1*w1 + c2*c4 - c2*c5 + c2 + c3 - l4*w1*x2


def sw2_deriv3(a, w1, w2, w3, x1, x2, l1, l2, l3, l4, l5, u1, u2, u3):
    c0 = l4*u3
    c1 = (1/2)*c0
    c2 = a*c0
    c3 = l5*x1
    c4 = l4*x2
    c5 = w1*w2
    c6 = (1/2)*c5*l4
    c7 = c3*x2
    c8 = c7*u3
    c9 = w2*w3
    c10 = c3*c9
    c11 = w1**2
    c12 = (1/2)*l5
    c13 = c11*c12
    c14 = w3**2
    c15 = c12*c14
    c16 = c4*c9
    c17 = a*c15
    c18 = x1**2
    c19 = x2**2
    c20 = c4*x1
    c21 = c14*c20
    c22 = 2*a
    c23 = a**2
    c24 = c15*c23
    return a**3*l1*w3**3 + a*c21 + c1*c18 - c1*c19 + c1 + c10*c22 + c10 + c11*c20 - c13*c18 + c13*c19 + c13 - c15*c18 + c15*c19 + c15 - c16*c22 - c16 - c17*c18 + c17*c19 + c17 + c18*c2 - c18*c24 - c18*c6 - c19*c2 + c19*c24 + c19*c6 + c2 + c21*c23 + c21 + c22*c8 - 3*c23*l2*u3*w3 + c24 + c3*u1 - c4*u1 - c5*c7 - c6 + c8


def sw2_numerator(a, w1, w2, w3, x1, x2, l1, l2, l3, l4, l5, u1, u2, u3):
    c0 = u1*w2
    c1 = c0*l4
    c2 = w3**3
    c3 = (1/2)*l4
    c4 = c2*c3
    c5 = w1**3
    c6 = l5*x1
    c7 = l4*x2
    c8 = 2*w2
    c9 = a*c4
    c10 = w1**2
    c11 = c3*w3
    c12 = c10*c11
    c13 = w2**2
    c14 = c11*c13
    c15 = x1**2
    c16 = c6*w1
    c17 = w3**2
    c18 = c16*c17
    c19 = c6*x2
    c20 = c19*c2
    c21 = c13*w3
    c22 = a*c21
    c23 = (3/2)*c22*l4
    c24 = a**2
    c25 = x2**2
    c26 = (3/2)*l5
    c27 = u3*w3
    c28 = 3*c24
    c29 = c24*c4
    c30 = a**3
    c31 = c30*c4
    c32 = c27*l5
    c33 = 2*a
    return a**4*l2*w3**4 + (1/2)*a*c10*c15*l4*w3 + (1/2)*a*c10*l4*w3 + a*c10*l5*w3*x1*x2 - a*c12*c25 + (3/2)*a*c13*c25*l4*w3 - a*c15*c8*l5*w1*w3 + 2*a*c17*l4*w1*x2 + (1/2)*a*c2*c25*l4 - a*c20 + 2*a*c25*l5*u3*w3 + 2*a*c25*l5*w1*w2*w3 - 4*a*c7*u3*w2 + 4*a*l4*u3*w3*x1*x2 + 4*a*l4*w1*w2*w3*x1*x2 + 4*a*l5*u3*w2*x1 + 2*a*l5*u3*w3 + 2*a*l5*w1*w2*w3 - 2*c0*c19 - c1*c15 - c1 - c10*c19*w3 + (1/2)*c10*c25*l4*w3 - c12*c15 - c12 - c13*c16 + (1/2)*c13*c25*l4*w3 + c13*l4*w1*x2 - c14*c15 - c14 - c15*c23 - 5/2*c15*c24*c32 - c15*c26*c27 - c15*c26*u1*w1 - c15*c29 - c15*c31 - c15*c32*c33 - c15*c4 - c15*c9 + 3*c17*c24*l4*w1*x2 + 6*c17*c30*l1*u3 + c17*l4*w1*x2 - c18*c28 - c18*c33 - c18 - c19*c21 - 3*c19*c22 + (1/2)*c2*c24*c25*l4 + (1/2)*c2*c25*c30*l4 + (1/2)*c2*c25*l4 - c20*c24 - c20*c30 - c20 - c23 + (5/2)*c24*c25*l5*u3*w3 + 5*c24*l4*u3*w3*x1*x2 + (5/2)*c24*l5*u3*w3 + c25*l4*u1*w2 + (3/2)*c25*l5*u1*w1 + (3/2)*c25*l5*u3*w3 - c28*l2*u3**2 - c29 - c31 - c4 - c5*c6 + c5*l4*x2 - c7*c8*u3 - c9 + 3*l4*u1*w1*x1*x2 + 3*l4*u3*w3*x1*x2 + (3/2)*l5*u1*w1 + 2*l5*u3*w2*x1 + (3/2)*l5*u3*w3


def sw2_denominator(a, w1, w2, w3, x1, x2, l1, l2, l3, l4, l5, u1, u2, u3):
    c0 = (1/2)*l4*w1
    c1 = l4*w3*x2
    return -2*a*c1 + 2*a*l5*w3*x1 - c0*x1**2 - c0 - c1 + (1/2)*l4*w1*x2**2 - l5*w1*x1*x2 + l5*w3*x1


__all__ = ['sw1_deriv1', 'sw1_deriv2', 'sw1_deriv3', 'sw1_numerator', 'sw1_denominator', 'sw2_deriv1', 'sw2_deriv2', 'sw2_deriv3', 'sw2_numerator', 'sw2_denominator']

"""Regenerate src/minspin/_singular_terms.py from the state/costate flow.

The switching functions g1 = lam1 and g2 = lam2 are differentiated four
times along the combined state/costate flow (controls held piecewise
constant).  The fourth derivative is affine in the own control,

    d4(g_j)/dt4 = N_j + D_j * u_j,

and this script extracts N_j and D_j exactly with sympy, then emits plain
numpy-compatible Python.  Run from the repository root:

    python tools/generate_singular_terms.py > src/minspin/_singular_terms.py
"""

import sympy as sp

HEADER = '''"""Machine-generated singular-arc expressions.  Do not edit by hand.

Generated by tools/generate_singular_terms.py, which differentiates the
switching functions four times along the state/costate flow and extracts
the exact coefficients of d4(g_j)/dt4 = N_j + D_j * u_j.  Every function
takes scalars or equally shaped numpy arrays and is safe to vectorize.

The test suite re-derives these expressions symbolically and compares
them numerically (see tests/test_pmp.py).
"""

# ruff: noqa: E501
'''


def main() -> None:
    a, u1, u2, u3 = sp.symbols("a u1 u2 u3")
    w1, w2, w3, x1, x2 = sp.symbols("w1 w2 w3 x1 x2")
    l1, l2, l3, l4, l5 = sp.symbols("l1 l2 l3 l4 l5")
    f = {
        w1: a * w3 * w2 + u1,
        w2: -a * w3 * w1 + u2,
        w3: u3,
        x1: w3 * x2 + w2 * x1 * x2 + w1 / 2 * (1 + x1**2 - x2**2),
        x2: -w3 * x1 + w1 * x1 * x2 + w2 / 2 * (1 + x2**2 - x1**2),
    }
    states = [w1, w2, w3, x1, x2]
    costates = [l1, l2, l3, l4, l5]
    ham = sum(costates[i] * f[states[i]] for i in range(5))
    lam_dot = {costates[i]: -sp.diff(ham, states[i]) for i in range(5)}

    def ddt(expr):
        out = sum(sp.diff(expr, y) * f[y] for y in states)
        out += sum(sp.diff(expr, l) * lam_dot[l] for l in costates)
        return sp.expand(out)

    def chain(g):
        derivs = [g]
        for _ in range(4):
            derivs.append(ddt(derivs[-1]))
        return derivs

    d_g1 = chain(l1)
    d_g2 = chain(l2)
    den1 = sp.expand(sp.diff(d_g1[4], u1))
    num1 = sp.expand(d_g1[4] - den1 * u1)
    den2 = sp.expand(sp.diff(d_g2[4], u2))
    num2 = sp.expand(d_g2[4] - den2 * u2)
    # the own control must be absent from N and D
    assert sp.diff(num1, u1) == 0 and sp.diff(den1, u1) == 0
    assert sp.diff(num2, u2) == 0 and sp.diff(den2, u2) == 0

    print(HEADER)
    exported = []
    for name, expr in [
        ("sw1_deriv1", d_g1[1]),
        ("sw1_deriv2", d_g1[2]),
        ("sw1_deriv3", d_g1[3]),
        ("sw1_numerator", num1),
        ("sw1_denominator", den1),
        ("sw2_deriv1", d_g2[1]),
        ("sw2_deriv2", d_g2[2]),
        ("sw2_deriv3", d_g2[3]),
        ("sw2_numerator", num2),
        ("sw2_denominator", den2),
    ]:
        exported.append(name)
        reps, red = sp.cse(expr, symbols=sp.numbered_symbols("c"), optimizations="basic")
        print(f"def {name}(a, w1, w2, w3, x1, x2, l1, l2, l3, l4, l5, u1, u2, u3):")
        for sym, sub in reps:
            print(f"    {sym} = {sp.pycode(sub)}")
        print(f"    return {sp.pycode(red[0])}")
        print()
        print()
    print(f"__all__ = {exported!r}")


if __name__ == "__main__":
    main()

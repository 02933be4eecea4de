# SPDX-License-Identifier: Apache-2.0
"""Regenerates tests/reference_values.h.

Scalar hand-calculations kept independent of the C++ library: the cell
step is evaluated with plain Python floats, Adam with a literal
transcription of the update rule.

Usage: python3 tests/gen_reference_values.py > tests/reference_values.h
"""

import math


def sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z))


def ieu_scalar_case():
    # d_h = d_e = 1, every weight entry 1, previous state (0, 0), x_t = x_0 = 1.
    h_prev, c_prev, x_t, x_0 = 0.0, 0.0, 1.0, 1.0
    f = sigmoid(h_prev + x_t)
    e = sigmoid(h_prev + x_0)
    r = math.tanh(h_prev + x_t)
    i = sigmoid(x_t + x_0)
    cand = math.tanh(h_prev + x_t)
    c = c_prev * f + r * e + cand * i
    o = sigmoid(x_t + x_0)
    h = o * math.tanh(c)
    return f, e, r, i, cand, c, o, h


def adam_trace():
    theta, m, v = 0.0, 0.0, 0.0
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    out = []
    for t in (1, 2):
        g = 1.0
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta -= lr * (m / (1 - b1**t)) / (math.sqrt(v / (1 - b2**t)) + eps)
        out.append(theta)
    return out


def main():
    f, e, r, i, cand, c, o, h = ieu_scalar_case()
    theta1, theta2 = adam_trace()
    print("// Generated by gen_reference_values.py; do not edit by hand.")
    print("#ifndef IEN_TESTS_REFERENCE_VALUES_H")
    print("#define IEN_TESTS_REFERENCE_VALUES_H")
    print()
    print("// Scalar cell step: unit weights, zero state, x_t = x_0 = 1.")
    for name, value in [
        ("kScalarIeuForget", f),
        ("kScalarIeuElevation", e),
        ("kScalarIeuRelevance", r),
        ("kScalarIeuInput", i),
        ("kScalarIeuCandidate", cand),
        ("kScalarIeuCell", c),
        ("kScalarIeuOutput", o),
        ("kScalarIeuHidden", h),
    ]:
        print(f"inline constexpr double {name} = {value!r};")
    print()
    print("// Adam on a scalar: two steps of constant gradient 1 at lr 0.1.")
    print(f"inline constexpr double kAdamStep1Value = {theta1!r};")
    print(f"inline constexpr double kAdamStep2Value = {theta2!r};")
    print()
    print("#endif  // IEN_TESTS_REFERENCE_VALUES_H")


if __name__ == "__main__":
    main()

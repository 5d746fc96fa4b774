#!/usr/bin/env python3
"""Reference values for the schedule, loss and return tests (test_drl.cpp)."""
import math

EPS_START, EPS_END, EPS_LAST = 0.1, 0.01, 100
A_MIN, A_STEP, A_TERM, A_AMP = -3.0, 0.12, 50, 200


def eps(m):
    if m >= EPS_LAST:
        return EPS_END
    return max(EPS_END, EPS_START * (EPS_END / EPS_START) ** (m / EPS_LAST))


def A(m, step=A_STEP):
    return 1 - 1 / (1 + math.exp(-A_MIN - step * m))


def alpha(m, step=A_STEP, term=A_TERM):
    if m > term:
        return 0.0
    return A_AMP * ((A(m, step) - A(term, step)) / (A(0, step) - A(term, step)))


def softmax(q):
    z = max(q)
    e = [math.exp(x - z) for x in q]
    s = sum(e)
    return [x / s for x in e]


def default_ld(q, pi):
    return -sum(p * math.log(t) for p, t in zip(softmax(q), pi))


def conventional_ld(q, pi):
    return -sum(t * math.log(p) for p, t in zip(softmax(q), pi))


teacher = [0.9, 0.05, 0.05]
print("eps(0)", repr(eps(0)))
print("eps(50)", repr(eps(50)))
print("eps(100)", repr(eps(100)))
print("alpha(0)", repr(alpha(0)))
print("alpha(10)", repr(alpha(10)))
print("alpha(25)", repr(alpha(25)))
print("alpha(50)", repr(alpha(50)))
# desk stretch: 30 epochs, step 0.12 * 50 / 30
print("alpha_desk(15)", repr(alpha(15, A_STEP * A_TERM / 30, 30)))
print("softmax(10,0,0)[0]", repr(softmax([10, 0, 0])[0]))
print("LD(0,0,0; uniform)", repr(default_ld([0, 0, 0], [1 / 3] * 3)))
print("LD(10,0,0; teacher 0)", repr(default_ld([10, 0, 0], teacher)))
print("LD(0,10,0; teacher 0)", repr(default_ld([0, 10, 0], teacher)))
print("CE(1,2,3; teacher 0)", repr(conventional_ld([1, 2, 3], teacher)))
r = [1.0, 1.0, 1.0, 1.0]
lam = 0.5
print("nstep(t=0,eta=2,lam=.5)", repr(r[0] + lam * r[1]), "discount", repr(lam ** 2))
print("literal(t=0,eta=2,lam=.5)", repr(lam ** 2 * (r[1] + r[2])), "discount", repr(lam ** 2))
print("nstep(t=3,eta=2) tail", repr(r[3]))

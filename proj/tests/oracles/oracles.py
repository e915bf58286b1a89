"""Reference values frozen into the C++ tests.

Written against scipy/numpy only, without reusing any project code. Run with
`python3 tests/oracles/oracles.py` to regenerate the printed constants.
"""
import math

import numpy as np
from scipy import integrate, stats

# Default hyperparameters.
A = B = 1.0
MU_T, SD_T = -2.3, 10.0
MU_TM, SD_TM = -2.3, 2.0
A_D, B_D = 30.0, 21.5  # shape, rate
SIGMA = 2.0
GAMMA = 2.5
FIX_MU, FIX_SD = 0.0, 3.0

X6 = [-1.5, -0.8, -0.2, 0.3, 0.9, 1.6]
Y6 = [0, 0, 0, 1, 1, 1]


def bern_loglik(logits, ys):
    return sum(-np.logaddexp(0.0, -t) if y else -np.logaddexp(0.0, t) for t, y in zip(logits, ys))


def lik_m1(theta, ys):
    return bern_loglik([theta] * len(ys), ys)


def lik_m2(tm, d, x, xs, ys):
    return bern_loglik([tm if xi <= x else tm + d for xi in xs], ys)


def delta_pdf(d):
    return stats.gamma.pdf(d, A_D, scale=1.0 / B_D)


def likelihood_examples():
    ys10 = [1, 1, 0, 0, 0, 0, 0, 0, 0, 0]
    print("log_lik_m1(-2.3, 10 patients, 2 responders) = %.17g" % lik_m1(-2.3, ys10))
    print("log_lik_m2(-2.2, 1.4, 0, X6) = %.17g" % lik_m2(-2.2, 1.4, 0.0, X6, Y6))
    l1 = lik_m1(-0.5, Y6)
    l2 = lik_m2(-2.2, 1.4, 0.0, X6, Y6)
    p = 0.6
    pm1 = p * math.exp(l1) / (p * math.exp(l1) + (1 - p) * math.exp(l2))
    print("P(M1 | theta=-0.5, tm=-2.2, d=1.4, x=0, pM=0.6) = %.17g" % pm1)


def log_prior_example():
    pm = 0.6
    models = [1, 2, 1]
    th = [-2.0, -1.5, -2.5]
    tm = [-2.2, -1.8, -3.0]
    de = [1.4, 0.9, 2.0]
    xs = [-0.1, 0.0, 0.3]
    mu, sx = 0.05, 0.7
    base = stats.beta.logpdf(pm, A, B)
    for m, a, b, c in zip(models, th, tm, de):
        base += math.log(pm) if m == 1 else math.log(1 - pm)
        base += stats.norm.logpdf(a, MU_T, SD_T)
        base += stats.norm.logpdf(b, MU_TM, SD_TM)
        base += stats.gamma.logpdf(c, A_D, scale=1.0 / B_D)
    hc = base + sum(stats.norm.logpdf(x, mu, sx) for x in xs)
    hc += stats.norm.logpdf(mu, 0, SIGMA) + stats.halfcauchy.logpdf(sx, scale=GAMMA)
    ig = base + sum(stats.norm.logpdf(x, mu, sx) for x in xs)
    ig += stats.norm.logpdf(mu, 0, SIGMA)
    # inverse gamma (shape 2, scale 1.5) on sigma_x^2, reported as a density of sigma_x
    ig += stats.invgamma.logpdf(sx * sx, 2.0, scale=1.5) + math.log(2 * sx)
    fx = base + sum(stats.norm.logpdf(x, FIX_MU, FIX_SD) for x in xs)
    print("log_prior half-Cauchy = %.17g" % hc)
    print("log_prior inverse-gamma(2, 1.5) = %.17g" % ig)
    print("log_prior fixed = %.17g" % fx)


def ig_conditional():
    shape, scale = 2.0, 1.5
    xs = [0.2, -0.4, 0.9]
    mu = 0.1
    print("IG conditional shape = %.17g, scale = %.17g"
          % (shape + len(xs) / 2, scale + sum((x - mu) ** 2 for x in xs) / 2))


def marginal_m1():
    f = lambda t: math.exp(lik_m1(t, Y6)) * stats.norm.pdf(t, MU_T, SD_T)
    return integrate.quad(f, MU_T - 6 * SD_T, MU_T + 6 * SD_T, points=[0.0], limit=400,
                          epsabs=0, epsrel=1e-11)[0]


def marginal_m2_segment(k):
    """Marginal likelihood under M2 when exactly the first k sorted patients are negative."""
    xs_cut = X6[k - 1] if k > 0 else X6[0] - 1.0

    def inner(tm):
        g = lambda d: math.exp(lik_m2(tm, d, xs_cut, X6, Y6)) * delta_pdf(d)
        return integrate.quad(g, 0.0, 6.0, points=[A_D / B_D], limit=400, epsabs=0,
                              epsrel=1e-11)[0] * stats.norm.pdf(tm, MU_TM, SD_TM)

    return integrate.quad(inner, MU_TM - 6 * SD_TM, MU_TM + 6 * SD_TM, limit=400, epsabs=0,
                          epsrel=1e-10)[0]


def segment_edges():
    return [-math.inf] + X6 + [math.inf]


def fixed_segment_masses():
    e = segment_edges()
    cdf = lambda c: stats.norm.cdf(c, FIX_MU, FIX_SD)
    return [cdf(e[k + 1]) - cdf(e[k]) for k in range(7)]


def fixed_segment_means():
    e = segment_edges()
    out = []
    for k in range(7):
        a = (e[k] - FIX_MU) / FIX_SD
        b = (e[k + 1] - FIX_MU) / FIX_SD
        out.append(stats.truncnorm.mean(a, b, loc=FIX_MU, scale=FIX_SD))
    return out


def half_cauchy_cdf(c):
    """P(x <= c) with x | mu, s ~ N(mu, s^2), mu ~ N(0, SIGMA^2), s ~ half-Cauchy(GAMMA).

    Substituting s = GAMMA * tan(u) turns the half-Cauchy into a uniform on (0, pi/2).
    """
    if c == -math.inf:
        return 0.0
    if c == math.inf:
        return 1.0
    f = lambda u: stats.norm.cdf(c / math.sqrt(SIGMA ** 2 + (GAMMA * math.tan(u)) ** 2))
    return integrate.quad(f, 0.0, math.pi / 2, limit=400, epsabs=0, epsrel=1e-12)[0] * 2 / math.pi


def half_cauchy_segment_masses():
    e = segment_edges()
    return [half_cauchy_cdf(e[k + 1]) - half_cauchy_cdf(e[k]) for k in range(7)]


def tiny_instance():
    z1 = marginal_m1()
    z2_seg = [marginal_m2_segment(k) for k in range(7)]
    for name, masses in (("fixed", fixed_segment_masses()),
                         ("half-Cauchy", half_cauchy_segment_masses())):
        z2 = sum(m * z for m, z in zip(masses, z2_seg))
        pm2 = z2 / (z1 + z2)  # p_M has prior mean 1/2 with a single indication
        print("tiny instance %s: P(M2|D) = %.10f" % (name, pm2))
    masses = fixed_segment_masses()
    means = fixed_segment_means()
    w = [m * z for m, z in zip(masses, z2_seg)]
    ex_m2 = sum(wi * mi for wi, mi in zip(w, means)) / sum(w)
    z2 = sum(w)
    pm2 = z2 / (z1 + z2)
    print("tiny instance fixed: E[x | D, M2] = %.10f" % ex_m2)
    print("tiny instance fixed: E[x | D] = %.10f" % (pm2 * ex_m2 + (1 - pm2) * FIX_MU))


def threshold_loss_fixture():
    draws = [-0.3, 0.1, 0.25, 0.6]
    w1, w2, tv = 0.2, 0.5, 0.3
    xs = sorted(X6)
    ys = [y for _, y in sorted(zip(X6, Y6))]

    def loss(t):
        l1 = np.mean([1 - math.exp(-abs(t - x)) for x in draws])
        l2 = sum(1 for x in xs if x <= t) / len(xs)
        pos = [y for x, y in zip(xs, ys) if x > t]
        pp = sum(pos) / len(pos) if pos else 0.0
        l3 = (1 - pp / tv) if pp < tv else 0.0
        return l1 + w1 * l2 + w2 * l3

    grid = [xs[0] - 0.01] + [(xs[k] + xs[k + 1]) / 2 for k in range(5)] + [xs[-1] + 0.01]
    for t in grid:
        print("loss(%.17g) = %.17g" % (t, loss(t)))
    best = min(grid, key=lambda t: (loss(t), t))
    print("t_hat = %.17g" % best)


if __name__ == "__main__":
    likelihood_examples()
    log_prior_example()
    ig_conditional()
    threshold_loss_fixture()
    tiny_instance()

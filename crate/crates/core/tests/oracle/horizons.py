"""Independent re-evaluation of the threshold golden values in 40-digit decimal arithmetic.

Run: python3 horizons.py
"""
from decimal import Decimal as D, getcontext

getcontext().prec = 40


def pw(x, y):
    return (D(y) * D(x).ln()).exp()


def thm1(n, phi, eps, p):
    n, phi, eps, p = map(D, (n, phi, eps, p))
    np_ = n * phi
    return -2 * n * np_.ln() / (eps * (1 - p) * (n - pw(np_, p)))


def prop3(n, phi, eps, k, pp, pm):
    n, phi, eps, k, pp, pm = map(D, (n, phi, eps, k, pp, pm))
    np_ = n * phi
    c = eps / 2 * (1 - pw(np_, pm) / n) * (1 - pm) - 2 * k / n * (n - 1) * (1 - pp)
    return c, -2 * np_.ln() / c


def prop4(n, delta, eps, pp, pm):
    n, delta, eps, pp, pm = map(D, (n, delta, eps, pp, pm))
    gm = pw(n, 1 / pm - 1)
    gp = pw(n, 1 / pp - 1)
    return 2 * (1 + gm) * (gp + gm).ln() / (eps * delta * (1 - pp))


def lf(n, delta):
    n, delta = D(n), D(delta)
    m = int((1 / (1 - delta)).to_integral_value(rounding="ROUND_FLOOR"))
    return m, (1 - (m - 1) * (1 - delta)) / (n - (m - 1))


if __name__ == "__main__":
    print("thm1", thm1(2, "0.2", "0.04", "-0.5"))
    c, t = prop3(2, "0.2", "0.04", "0.05", "0.99", "-0.5")
    print("prop3_c", c)
    print("prop3_t", t)
    print("prop4", prop4(4, "0.3", "0.04", "0.5", "-0.5"))
    m, kappa = lf(5, "0.5")
    print("lf_m", m)
    print("lf_kappa", kappa)

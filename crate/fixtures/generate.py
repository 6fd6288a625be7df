"""Regenerates the fixture files in this directory.

Synthetic stand-ins for vendor data: an equity index, three exchange rates
(domestic currency per US dollar) and a call-option chain on the index.
Run from the repository root: python3 fixtures/generate.py
"""

import csv
import datetime as dt
import math
import os

import mpmath
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
PPY = 252
R_D_ANNUAL = -0.0037
R_F_ANNUAL = 0.0256
LAST_DAY = dt.date(2018, 10, 31)
SPOT = 2711.74


def weekdays_ending(last, count):
    days = []
    d = last
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d -= dt.timedelta(days=1)
    return days[::-1]


def write_series(name, dates, levels, digits):
    with open(os.path.join(HERE, name), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["date", "price"])
        for d, p in zip(dates, levels):
            w.writerow([d.isoformat(), f"{p:.{digits}f}"])


def market_series():
    rng = np.random.default_rng(20181031)
    # FX trades every weekday; the index skips one weekday in 60
    fx_days = weekdays_ending(LAST_DAY, 1880)
    idx_days = [d for i, d in enumerate(fx_days) if i % 60 != 7 or d == LAST_DAY]
    idx_days = idx_days[-1841:]
    fx_days = [d for d in fx_days if d >= idx_days[0]]

    sx = 0.0057
    pairs = {
        "fx_eur.csv": (0.0042, -0.03, 0.8836),
        "fx_gbp.csv": (0.0050, 0.05, 0.7834),
        "fx_cad.csv": (0.0035, 0.25, 1.3153),
    }
    n = len(fx_days)
    z1 = rng.standard_normal(n)
    x = 0.0003 + sx * z1
    x[0] = 0.0
    asset_full = SPOT * np.exp(np.cumsum(x) - np.sum(x))
    keep = {d for d in idx_days}
    write_series("asset.csv", idx_days, [p for d, p in zip(fx_days, asset_full) if d in keep], 2)
    for name, (sh, rho, last) in pairs.items():
        z2 = rng.standard_normal(n)
        h = sh * (rho * z1 + math.sqrt(1 - rho * rho) * z2)
        h[0] = 0.0
        levels = last * np.exp(np.cumsum(h) - np.sum(h))
        write_series(name, fx_days, levels, 6)


def bs_call(s, k, vol, rate, tau):
    if vol <= 0:
        return max(s - k * math.exp(-rate * tau), 0.0)
    tv = vol * math.sqrt(tau)
    d1 = (math.log(s / k) + rate * tau + 0.5 * tv * tv) / tv
    d2 = d1 - tv
    cdf = lambda v: 0.5 * math.erfc(-v / math.sqrt(2))
    return s * cdf(d1) - k * math.exp(-rate * tau) * cdf(d2)


def option_chain():
    rf = R_F_ANNUAL / PPY
    rd = R_D_ANNUAL / PPY
    specs = [(k, 51) for k in range(2400, 3001, 25)]
    specs += [(k, 23) for k in range(2500, 2901, 50)]
    specs += [(k, 79) for k in range(2400, 3001, 40)]
    assert len(specs) == 50
    rows = []
    for i, (k, m) in enumerate(specs):
        vol = 0.0062 * (1.0 + 1.5 * math.log(SPOT / k))
        price = bs_call(SPOT, k, vol, rf, m)
        if i in (0, 1, 26, 34):
            # stale deep-in-the-money quotes below the European lower bound
            price = max(SPOT - k * math.exp(-rd * m), 0.0) - 3.5
        if i == 40:
            price = SPOT + 10.0
        rows.append((k, m, round(price, 2)))
    with open(os.path.join(HERE, "options.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["quote_date", "strike", "maturity_days", "price", "spot"])
        for k, m, p in rows:
            w.writerow([LAST_DAY.isoformat(), k, m, f"{p:.2f}", f"{SPOT:.2f}"])
    # hand application of max(S - K e^{-r_d m}, 0) <= C <= S
    with open(os.path.join(HERE, "options_retained.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["strike", "maturity_days", "price"])
        for k, m, p in rows:
            lower = max(SPOT - k * math.exp(-rd * m), 0.0)
            assert abs(p - lower) > 1e-3 and abs(p - SPOT) > 1e-3
            if lower <= p <= SPOT:
                w.writerow([k, m, f"{p:.2f}"])


def log_return_oracle():
    rng = np.random.default_rng(141)
    levels = [round(100.0 * math.exp(v), 4) for v in np.cumsum(0.01 * rng.standard_normal(141))]
    dates = weekdays_ending(dt.date(2018, 6, 29), 141)
    write_series("levels_141.csv", dates, levels, 4)
    mpmath.mp.dps = 40
    with open(os.path.join(HERE, "levels_141_logret.txt"), "w") as f:
        for a, b in zip(levels, levels[1:]):
            r = mpmath.log(mpmath.mpf(f"{b:.4f}") / mpmath.mpf(f"{a:.4f}"))
            f.write(mpmath.nstr(r, 30) + "\n")


if __name__ == "__main__":
    market_series()
    option_chain()
    log_return_oracle()

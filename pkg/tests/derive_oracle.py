"""Independent high-precision reference values, frozen into the tests.

Run ``python tests/derive_oracle.py`` to regenerate.  Uses mpmath with its
own constants and closed forms only; nothing from the package is imported.
"""

import mpmath as mp

mp.mp.dps = 40

HBAR = mp.mpf("6.62607015e-34") / (2 * mp.pi)
C = mp.mpf("299792458")
LAM = mp.mpf("1550e-9")
B = mp.mpf("1.5e9")
HW = HBAR * 2 * mp.pi * C / LAM


def db(x):
    return 10 * mp.log10(x)


def c1(n):
    return mp.log(1 + 4 * n, 2) / 2


def c2(n):
    return mp.log(1 + n, 2)


def hol(n):
    return (n + 1) * mp.log(n + 1, 2) - n * mp.log(n, 2)


def csq(n, r, eta):
    return mp.log(1 + 4 * n / (eta * mp.e ** (-2 * r) + 1 - eta), 2) / 2


def values():
    out = {}
    s_s = s_lo = mp.mpf("452.4e-6")
    n = s_s / (HW * B)
    eta_link = 1 - mp.mpf("4.52e-6") / s_lo
    out["photon_energy_1550"] = HW
    out["n_link"] = n
    out["c_s1_link"] = c1(n)
    out["rate_s1_link"] = B * c1(n)
    out["c_sq_20db_eta099"] = csq(n, mp.log(10), mp.mpf("0.99"))
    out["rate_sq_20db_eta099"] = B * csq(n, mp.log(10), mp.mpf("0.99"))
    out["e_b_coh_link"] = (s_s + s_lo) / (B * c1(n))
    r224 = 224 * mp.sqrt(mp.mpf("0.105e-3"))
    out["r_mu224"] = r224
    out["e_b_sq_mu224"] = (s_s + s_lo + mp.mpf("0.105e-3")) / (B * csq(n, r224, eta_link))
    out["c_sq_mu224"] = csq(n, r224, eta_link)
    out["eta_link"] = eta_link
    out["cmrr_1p02"] = (mp.mpf("0.04") ** 2 + 4 * mp.mpf("1.02") * mp.mpf("0.98")) / mp.mpf("0.04") ** 2
    out["improvement_0p01"] = 1 - mp.log(mp.mpf("0.01"))
    out["c_s1_n1"] = c1(1)
    out["floor_s2"] = HW / mp.log(mp.e, 2)
    out["floor_s1"] = HW / (2 * mp.log(mp.e, 2))
    out["snc_9p5mw"] = db(mp.mpf("9500") / 520 + 1)
    out["obs_cap_0p5"] = -db(mp.mpf("0.5"))
    out["pump_20db_mu224"] = (mp.log(10) / 224) ** 2
    out["pump_3db_mu10"] = (3 / (20 / mp.log(10)) / 10) ** 2
    out["sq_db_mu72_1mw"] = 20 / mp.log(10) * 72 * mp.sqrt(mp.mpf("1e-3"))
    out["sq_db_mu10_1mw"] = 20 / mp.log(10) * 10 * mp.sqrt(mp.mpf("1e-3"))
    # squeezing inversion of the measured levels
    a, b = 10 ** (mp.mpf("-0.15") / 10), 10 ** (mp.mpf("0.52") / 10)
    x = (b - a) / (a + b - 2)
    r = mp.acoth(x)
    eta = (b - a) / (2 * mp.sinh(2 * r))
    out["inv_r"], out["inv_eta"], out["inv_loss_db"] = r, eta, -db(eta)
    # estimator closed forms with a 20 dB electronic floor renormalised away
    e = mp.mpf(10) ** -2
    lo = (mp.mpf("0.8") * mp.e ** -1 + mp.mpf("0.2") + e) / (1 + e)
    hi = (mp.mpf("0.8") * mp.e + mp.mpf("0.2") + e) / (1 + e)
    out["est_lo_db"], out["est_hi_db"] = db(lo), db(hi)
    out["est_lo_db_nofloor"] = db(mp.mpf("0.8") * mp.e ** -1 + mp.mpf("0.2"))
    out["est_hi_db_nofloor"] = db(mp.mpf("0.8") * mp.e + mp.mpf("0.2"))
    # phase-error retention at 5 degrees
    phi = mp.pi / 36
    for r_ in ("0.1", "0.2", "0.3", "0.4", "0.5"):
        rr = mp.mpf(r_)
        v = mp.e ** (-2 * rr) * mp.cos(phi) ** 2 + mp.e ** (2 * rr) * mp.sin(phi) ** 2
        out[f"retention_{r_}"] = db(v) / db(mp.e ** (-2 * rr))
    # intensity noise of squeezed vacuum r = 0.5 in units of (ħω/T)^2
    out["sqvac_intensity_0p5"] = 2 * (mp.e ** -1 / 4) ** 2 + 2 * (mp.e / 4) ** 2 - mp.mpf(1) / 4
    out["meas_var_db_measured"] = db(mp.mpf("0.046") * mp.e ** (-2 * mp.mpf("0.661")) + mp.mpf("0.954"))
    out["holevo_1e8_gap"] = hol(mp.mpf("1e8")) - (mp.log(mp.mpf("1e8"), 2) + mp.log(mp.e, 2))
    return out


if __name__ == "__main__":
    for k, v in values().items():
        print(f"{k} = {mp.nstr(v, 15)}")

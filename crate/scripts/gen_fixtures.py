#!/usr/bin/env python3
"""Generate the bundled pore size distributions and the synthetic winter
climate series under crates/core/data/.

Deterministic: running it twice produces identical files.
"""
import math
import pathlib

DATA = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "data"


def lognormal_cdf(r, median, sigma):
    return 0.5 * (1.0 + math.erf(math.log(r / median) / (sigma * math.sqrt(2.0))))


def cumulative_porosity(porosity, modes, r_min=1e-9, r_max=1e-4, per_decade=8):
    decades = round(math.log10(r_max / r_min))
    radii = [r_min * 10 ** (k / per_decade) for k in range(decades * per_decade + 1)]

    def finer(r):
        return sum(w * lognormal_cdf(r, m, s) for w, m, s in modes)

    lo, hi = finer(radii[0]), finer(radii[-1])
    psi = [porosity * (hi - finer(r)) / (hi - lo) for r in radii]
    psi[0], psi[-1] = porosity, 0.0
    return radii, psi


def write_psd(name, porosity, modes):
    radii, psi = cumulative_porosity(porosity, modes)
    lines = ["radius_m,cum_porosity"]
    lines += [f"{r:.6e},{p:.9f}" for r, p in zip(radii, psi)]
    (DATA / f"psd_{name}.csv").write_text("\n".join(lines) + "\n")


def write_climate(hours=744):
    lines = ["time_h,theta_ext_C,phi_ext,rain_kg_m2_s,swr_W_m2"]
    # Rain spells: (start hour, duration h, intensity kg m^-2 s^-1).
    spells = [(30, 8, 2.0e-4), (150, 6, 1.5e-4), (260, 10, 2.5e-4),
              (400, 6, 2.0e-4), (520, 8, 1.5e-4), (640, 6, 2.0e-4)]
    for h in range(hours + 1):
        day = h / 24.0
        hour = h % 24
        synoptic = -math.cos(2.0 * math.pi * day / 7.75)
        diurnal = math.sin(2.0 * math.pi * (hour - 9) / 24.0)
        theta = -2.0 - 7.0 * synoptic + 3.0 * diurnal
        phi = min(0.95, max(0.75, 0.85 - 0.08 * diurnal + 0.02 * synoptic))
        rain = 0.0
        for start, dur, q in spells:
            if start <= h < start + dur:
                rain = q
                phi = 0.95
        swr = 0.0
        if 8 <= hour <= 16:
            swr = 180.0 * math.sin(math.pi * (hour - 8) / 8.0)
            if rain > 0.0:
                swr *= 0.2
        lines.append(f"{h},{theta:.4f},{phi:.4f},{rain:.3e},{swr:.2f}")
    (DATA / "climate_synthetic_winter.csv").write_text("\n".join(lines) + "\n")


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    # Coarse lime mortar: most pore volume around 0.5 um, a smaller gel mode.
    write_psd("spec01", 0.35, [(0.75, 5e-7, 0.8), (0.25, 3e-8, 0.7)])
    # Denser mortar: pore volume shifted to fine capillaries.
    write_psd("spec02", 0.13, [(0.60, 2e-8, 0.7), (0.40, 3e-7, 0.8)])
    write_climate()


if __name__ == "__main__":
    main()

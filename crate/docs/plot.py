"""Plots the CSV tables written by tfln-pdc.

usage: python docs/plot.py OUT_DIR
"""
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def read(path):
    return pd.read_csv(path, comment="#")


def main(out):
    out = Path(out)
    if (out / "spectrum_pdc.csv").exists():
        d = read(out / "spectrum_pdc.csv")
        fig, ax = plt.subplots()
        for period, g in d.groupby("period_um"):
            ax.plot(g.wavelength_nm, g.intensity, label=f"{period:.3f} µm")
        ax.set_xlabel("wavelength (nm)")
        ax.set_ylabel("normalized intensity")
        ax.legend()
        fig.savefig(out / "spectrum_pdc.png", dpi=150)
    if (out / "spectrum_sfg.csv").exists():
        d = read(out / "spectrum_sfg.csv")
        vis = np.sort(d.visible_nm.unique())
        tel = np.sort(d.telecom_nm.unique())
        z = d.pivot(index="visible_nm", columns="telecom_nm", values="intensity").loc[vis, tel].values
        fig, ax = plt.subplots()
        ax.pcolormesh(tel, vis, z, shading="nearest")
        ax.set_xlabel("telecom (nm)")
        ax.set_ylabel("visible (nm)")
        fig.savefig(out / "spectrum_sfg.png", dpi=150)
    if (out / "spectrum_tune.csv").exists():
        d = read(out / "spectrum_tune.csv")
        fig, (a, b) = plt.subplots(2, sharex=True)
        a.plot(d.temperature_c, d.signal_nm, "o-")
        b.plot(d.temperature_c, d.idler_nm, "o-")
        a.set_ylabel("signal (nm)")
        b.set_ylabel("idler (nm)")
        b.set_xlabel("temperature (°C)")
        fig.savefig(out / "spectrum_tune.png", dpi=150)
    if (out / "fit.csv").exists():
        d = read(out / "fit.csv")
        fig, ax = plt.subplots()
        ax.plot(d.wavelength_nm, d.measured, ".", ms=2, label="data")
        ax.plot(d.wavelength_nm, d.model, label="fit")
        ax.set_xlabel("wavelength (nm)")
        ax.legend()
        fig.savefig(out / "fit.png", dpi=150)
    if (out / "counts.csv").exists():
        d = read(out / "counts.csv")
        fig, ax = plt.subplots()
        ax.errorbar(d.mean_photon_number, d.g2_measured, yerr=d.g2_measured_err, fmt="o", label="measured")
        ax.plot(d.mean_photon_number, d.g2_theory, label="Poisson model")
        ax.set_xlabel("mean photon number")
        ax.set_ylabel("heralded g²(0)")
        ax.legend()
        fig.savefig(out / "counts_g2.png", dpi=150)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")

"""Regenerate src/implantsim/data/tissues.json.

Cole-Cole parameters are the 4-pole fits of Gabriel, Lau & Gabriel (1996, Phys.
Med. Biol. 41:2271) for dry skin, non-infiltrated fat and muscle.  Each preset
also carries the 2-pole Debye fit used by the FDTD solver.
"""

import sys
from pathlib import Path

from implantsim.tissue_em.dielectric import DielectricModel, fit_debye, save_tissue_presets

GABRIEL = {
    "skin": (4.0, [(32.0, 7.234e-12, 0.0), (1100.0, 32.481e-9, 0.20),
                   (0.0, 159.155e-6, 0.20), (0.0, 15.915e-3, 0.20)], 0.0002),
    "fat": (2.5, [(3.0, 7.958e-12, 0.20), (15.0, 15.915e-9, 0.10),
                  (3.3e4, 159.155e-6, 0.05), (1.0e7, 7.958e-3, 0.01)], 0.01),
    "muscle": (4.0, [(50.0, 7.234e-12, 0.10), (7000.0, 353.678e-9, 0.10),
                     (1.2e6, 318.310e-6, 0.10), (2.5e7, 2.274e-3, 0.0)], 0.2),
}


def main(out):
    models = []
    for name, (einf, poles, sig) in GABRIEL.items():
        m = DielectricModel(eps_inf=einf, poles=poles, sigma_ionic=sig, name=name)
        fit = fit_debye(m)
        print(f"{name:7s} debye max rel error {fit.max_rel_error:.4%}")
        models.append(DielectricModel(einf, m.poles, sig, name, fit))
    save_tissue_presets(models, out, meta={"source": "Gabriel et al. 1996, 4-pole Cole-Cole"})


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parents[1] / "src/implantsim/data/tissues.json")

"""Named multi-curve setups fig3 to fig11, selectable with ``--preset``."""
from __future__ import annotations

from typing import List, Tuple

import numpy as np

from .errors import ConfigError
from .sim import Scenario

PRESET_NAMES = ("fig3", "fig4", "fig6", "fig8", "fig10", "fig11")


def _grid(lo, hi, step):
    return tuple(float(v) for v in np.arange(lo, hi + step / 2, step))


def _fig3():
    curves = []
    ebn0 = np.arange(0.0, 12.5, 1.0)
    for variant in ("dmrs", "sequence"):
        for bits in (1, 2):
            scn = Scenario(format="PF0", variant=variant, payload_bits=bits, channel="AWGN",
                           n_rx=1, estimation="ideal", dtx_gate=False, ack_fraction=0.5,
                           nack_fraction=0.5, dtx_fraction=0.0, trials=100000)
            # grid given in Eb/N0, stored as per-RE SNR
            off = scn.ebn0_offset_db()
            curves.append((f"{variant}_{bits}bit",
                           scn.with_overrides(snr_grid_db=tuple(ebn0 - off))))
    return curves


def _fig4():
    return [(variant, Scenario(format="PF0", variant=variant, payload_bits=2,
                               delay_spread_s=1000e-9, velocity_kmh=3.0, power_reference="prb",
                               trials=50000, snr_grid_db=_grid(-6, 15, 3)))
            for variant in ("sequence", "dmrs")]


def _fig6():
    curves = []
    for spread, overheads in ((300e-9, ("half", "third", "quarter")), (1000e-9, ("third", "quarter"))):
        for ov in overheads:
            curves.append((f"{int(round(spread * 1e9))}ns_{ov}",
                           Scenario(format="PF2", variant=ov, payload_bits=20, n_prb=4,
                                    n_symbols=1, delay_spread_s=spread, velocity_kmh=3.0,
                                    trials=50000, snr_grid_db=_grid(0, 24, 2))))
    return curves


def _fig8():
    return [(f"n{n}_{m}", Scenario(format="PF1", variant=m, n_symbols=n, payload_bits=2,
                                   delay_spread_s=100e-9, velocity_kmh=120.0, trials=50000,
                                   snr_grid_db=_grid(-10, 12, 2)))
            for n in (5, 6, 7) for m in ("extension", "puncturing")]


def _pf3(n, options):
    return [(f"v{int(v)}_dmrs{d}", Scenario(format="PF3", variant=d, n_symbols=n, payload_bits=20,
                                            n_prb=1, delay_spread_s=300e-9, velocity_kmh=v,
                                            trials=20000, snr_grid_db=_grid(-6, 20, 2)))
            for v in (3.0, 120.0, 500.0) for d in options]


_BUILDERS = {
    "fig3": _fig3,
    "fig4": _fig4,
    "fig6": _fig6,
    "fig8": _fig8,
    "fig10": lambda: _pf3(5, (1, 2)),
    "fig11": lambda: _pf3(10, (2, 4)),
}


def preset(name) -> List[Tuple[str, Scenario]]:
    """Labelled scenarios of a preset."""
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None

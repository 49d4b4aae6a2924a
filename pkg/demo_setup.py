#!/usr/bin/env python3
"""

Demo setup script for GAAM

Shows the packaged run configurations with their regime classification and
the commands that exercise them.

License: BSD 3-Clause

"""

#
# IMPORTS
#
from gaam.config_discovery import get_available_configs
from gaam.run_config import ConfigError, load_run_config
from gaam.spectral_core import derived_constants, regime_report


#
# PUBLIC
#
def show_configurations():
    """Show all packaged run configurations."""
    print("🌀 GAAM - Generalized Leray-alpha Demo")
    print("=" * 60)
    print()

    for config_name in get_available_configs("runs")["package"]:
        try:
            cfg = load_run_config(config_name)
            params = cfg.model
            constants = derived_constants(params)
            regime = regime_report(params)
            print(f"📁 {config_name}")
            print(f"   alpha={params.alpha} beta={params.beta} gamma={params.gamma} "
                  f"delta={params.delta} nu={params.nu}")
            print(f"   grid: {params.dim}D, {params.modes_per_axis} modes per axis")
            print(f"   symbol bounds: a={constants.a:.4g} b={constants.b:.4g} c={constants.c:.4g} d={constants.d:.4g}")
            print(f"   attractor: {regime.attractor}, uniqueness known: {regime.uniqueness_known}")
            print()
        except ConfigError as e:
            print(f"❌ Error loading {config_name}: {e}")
            print()

    print("🚀 To run:")
    print("   gaam simulate -c bardina             # Trajectory table and final checkpoint")
    print("   gaam stationary -c default           # Stationary state and smallness verdict")
    print("   gaam verify -c default -s decay      # Exponential attraction to the stationary state")
    print("   gaam sweep demo --workers 4          # (alpha, beta, gamma) phase-region table")
    print()


if __name__ == "__main__":
    show_configurations()

"""Analytic and simulated spectra of GFDM signals through a memoryless
polynomial power amplifier."""

from .analytic import (PaSpectrumModel, avg_autocorr_pa, dirichlet, gfdm_power, psd_gfdm,
                       psd_pa_output)
from .errors import ConfigError, NoCompressionPoint, NoSaturationPoint, NumericalGuardError
from .estimate import WelchConfig, estimate_psd
from .metrics import SweepResult, acp, acpr, default_bands, ofdm_sweep, oob_vs_subsymbols, sweep
from .moments import moment_oracle, moment_weights
from .oracle import psd_pa_output_convolution_oracle
from .pa import (IDENTITY_PA, FITTED_PA, CompressionReport, PaModel, apply_pa, compression_report,
                 compute_Aj, find_p1db, find_saturation, from_dbm, to_dbm)
from .spectrum import Band, SpectrumGrid, integrate_band, oob_ratio
from .waveform import (BasebandSignal, GfdmConfig, build_prototype_filter, concatenate_frames,
                       draw_symbol_block, modulate_gfdm_block, modulate_ofdm, ofdm_config)

__version__ = "0.1.0"

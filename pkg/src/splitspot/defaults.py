"""Experimental constants (cm, s, 1/cm) and the values derived from them."""

import math

PUMP_WAVELENGTH = 351.1e-7  # vacuum, cm
K_P = 2.9719e5  # in-crystal pump wavenumber, 1/cm
K_S = 1.4897e5  # in-crystal signal wavenumber, 1/cm
N_S = 1.6648
Z_R = 0.5  # cm
CRYSTAL_LENGTH = 0.2  # cm
CUT_POLAR_DEG = 35.2
CUT_AZIMUTH_DEG = 90.0
RING_RADIUS = 3.7  # measured in the detection plane, cm
QUOTED_THETA_S = 0.0698  # rad, as printed next to the l estimate
QUOTED_DELTA_Y0 = 0.33  # cm, as printed

PCM_APERTURE = 175e-4  # cm
MIN_STEP = 10e-4  # cm
TRIGGER_GATE = 5e-9  # s
PULSE_WIDTH = 38e-9  # s
EFFECTIVE_WINDOW = 2 * PULSE_WIDTH

MEASURED_RATES = {
    "R_trig": 564.0,
    "R_ctop": 4.1,
    "R_cbot": 2.7,
    "R_triple": 0.0076,
    "R_top": 21479.0,
    "R_bot": 22486.0,
}
MEASURED_DURATION = 1e4  # s

N_P = K_P * PUMP_WAVELENGTH / (2 * math.pi)
# cone angle from the longitudinal condition with the 2 pi / l_c offset
THETA_FIRST_NULL = math.acos((K_P + 2 * math.pi / CRYSTAL_LENGTH) / (2 * K_S))
# invert R = d tan(asin(n_s sin theta)) at that angle
DETECTOR_DISTANCE = RING_RADIUS / math.tan(math.asin(N_S * math.sin(THETA_FIRST_NULL)))

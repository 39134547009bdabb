"""Regenerate the bundled 27-region calibration file.

The region split is illustrative: shares of world output, industrial emissions
and population are stylised so that the world totals reproduce the DICE-2016
2015 starting point (gross output 105.5 T$/yr, capital 223 T$, population
7403 M, industrial emissions 35.85 GtCO2/yr). Replace the file with real
regional data through ``--calibration`` when it is available.

    python scripts/make_calibration.py > src/climate_clubs/data/regions.csv
"""

import csv
import sys

WORLD_OUTPUT = 105.5
WORLD_CAPITAL = 223.0
WORLD_LABOR = 7403.0
WORLD_LABOR_ASYMPTOTE = 11500.0
WORLD_EMISSIONS = 35.85 / 3.666  # GtC/yr
GAMMA = 0.3
YEARS_PER_STEP = 5
BACKSTOP_PRICE = 550.0  # $/tCO2
THETA2 = 2.6

# name, output share, emission share, population share, tfp growth/yr, intensity trend/yr
REGIONS = [
    ("region_01", 0.200, 0.150, 0.044, 0.010, -0.014),
    ("region_02", 0.150, 0.280, 0.188, 0.022, -0.018),
    ("region_03", 0.170, 0.100, 0.069, 0.009, -0.016),
    ("region_04", 0.030, 0.070, 0.177, 0.026, -0.012),
    ("region_05", 0.060, 0.035, 0.017, 0.008, -0.015),
    ("region_06", 0.020, 0.050, 0.020, 0.014, -0.010),
    ("region_07", 0.022, 0.022, 0.027, 0.016, -0.013),
    ("region_08", 0.025, 0.018, 0.008, 0.010, -0.015),
    ("region_09", 0.018, 0.020, 0.035, 0.020, -0.012),
    ("region_10", 0.020, 0.016, 0.005, 0.010, -0.015),
    ("region_11", 0.016, 0.019, 0.007, 0.012, -0.014),
    ("region_12", 0.015, 0.017, 0.017, 0.018, -0.013),
    ("region_13", 0.014, 0.013, 0.026, 0.020, -0.012),
    ("region_14", 0.013, 0.021, 0.011, 0.015, -0.011),
    ("region_15", 0.012, 0.012, 0.009, 0.014, -0.014),
    ("region_16", 0.011, 0.015, 0.034, 0.022, -0.012),
    ("region_17", 0.011, 0.009, 0.005, 0.010, -0.016),
    ("region_18", 0.010, 0.012, 0.045, 0.024, -0.011),
    ("region_19", 0.009, 0.011, 0.012, 0.016, -0.013),
    ("region_20", 0.009, 0.008, 0.040, 0.025, -0.012),
    ("region_21", 0.008, 0.010, 0.026, 0.022, -0.012),
    ("region_22", 0.008, 0.007, 0.004, 0.011, -0.016),
    ("region_23", 0.007, 0.009, 0.037, 0.026, -0.011),
    ("region_24", 0.007, 0.006, 0.003, 0.011, -0.015),
    ("region_25", 0.006, 0.007, 0.055, 0.028, -0.010),
    ("region_26", 0.006, 0.005, 0.030, 0.027, -0.012),
    ("region_27", 0.035, 0.045, 0.060, 0.018, -0.013),
]

COLUMNS = [
    "region", "tfp_initial", "tfp_growth_initial", "tfp_growth_decline", "capital_initial",
    "labor_initial", "labor_asymptote", "labor_convergence", "carbon_intensity_initial",
    "carbon_intensity_decline", "abatement_cost_coeff", "emissions_initial",
]


def rows():
    totals = [sum(r[k] for r in REGIONS) for k in (1, 2, 3)]
    for name, y_sh, e_sh, l_sh, g_a, g_sigma in REGIONS:
        y_sh, e_sh, l_sh = y_sh / totals[0], e_sh / totals[1], l_sh / totals[2]
        Y = WORLD_OUTPUT * y_sh
        K = WORLD_CAPITAL * y_sh
        L = WORLD_LABOR * l_sh
        E = WORLD_EMISSIONS * e_sh
        sigma = E / Y
        theta1 = BACKSTOP_PRICE * sigma * 3.666 / (1000.0 * THETA2)
        yield {
            "region": name,
            "tfp_initial": f"{Y / (K ** GAMMA * L ** (1 - GAMMA)):.6f}",
            "tfp_growth_initial": f"{g_a:.4f}",
            "tfp_growth_decline": "0.0050",
            "capital_initial": f"{K:.4f}",
            "labor_initial": f"{L:.2f}",
            "labor_asymptote": f"{WORLD_LABOR_ASYMPTOTE * l_sh * (1.3 if g_a > 0.02 else 1.0):.2f}",
            "labor_convergence": "0.134",
            "carbon_intensity_initial": f"{sigma:.6f}",
            "carbon_intensity_decline": f"{g_sigma:.4f}",
            "abatement_cost_coeff": f"{min(theta1, 1.0):.6f}",
            "emissions_initial": f"{E * YEARS_PER_STEP:.4f}",
        }


if __name__ == "__main__":
    writer = csv.DictWriter(sys.stdout, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows())

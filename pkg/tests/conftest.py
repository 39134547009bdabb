import csv

import pytest

from climate_clubs.scenarios import CALIBRATION_COLUMNS, load_calibration
from climate_clubs.state import RegionParams


def make_region(name="r", **overrides):
    values = dict(
        tfp_initial=5.0, tfp_growth_initial=0.0, tfp_growth_decline=0.0,
        capital_initial=10.0, labor_initial=300.0, labor_asymptote=300.0,
        labor_convergence=0.1, carbon_intensity_initial=0.3,
        carbon_intensity_decline=0.0, abatement_cost_coeff=0.05, emissions_initial=1.0,
    )
    values.update(overrides)
    return RegionParams(name=name, **values)


def write_calibration(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CALIBRATION_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow(row)
    return path


def region_row(p):
    return {"region": p.name, **{k: getattr(p, k) for k in RegionParams.NUMERIC_FIELDS}}


@pytest.fixture(scope="session")
def calibration():
    return load_calibration()

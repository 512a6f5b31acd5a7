#!/usr/bin/env python3
"""Regenerates the bundled demonstration fixture under data/fixtures/.

Five synthetic countries exercise the interesting paths:
  BRA, NOR, VNM  projectable, with distinct age pyramids and audience curves
  TUV            audience total below the default 10000-user floor (filtered)
  ISL            audience snapshot without demographic records (unprojectable)

The demographics are self-consistent by construction: each country has a
birth stream and a Gompertz-plus-infant hazard, and the population is the
births carried forward under exact survival through that hazard. Cohorts of
platform users therefore never outnumber the population they live in, which
keeps the growth scenario's saturation cap above the static scenario's
surviving audience everywhere. Audience curves are kept below half of the
2018 population at every age for the same reason.

Everything is a closed-form smooth function of (year, age), so the fixture
is deterministic and the generated files are stable byte-for-byte.
"""

import math
import os

YEAR_BINS = range(2000, 2101, 5)  # bin starts, width 5
AGE_BINS = range(0, 101, 5)
WIDTH = 5.0

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "data", "fixtures")


def gauss(x, mu, sigma):
    return math.exp(-0.5 * ((x - mu) / sigma) ** 2)


class Country:
    """Births, hazard, survival-consistent population, and an audience curve.

    births0/birth_growth: births per year in 2000 and their exponential rate
    m0/slope:  Gompertz hazard at age 0 and its log-slope per year of age
    infant:    additive infant hazard at age 0, decaying with scale 2.5 years
    trend:     exponential hazard improvement per calendar year
    users/user_peak/user_sigma: audience curve height, peak age, width
    """

    def __init__(self, code, births0, birth_growth, m0, slope, infant, trend,
                 users, user_peak, user_sigma):
        self.code = code
        self.births0 = births0
        self.birth_growth = birth_growth
        self.m0 = m0
        self.slope = slope
        self.infant = infant
        self.trend = trend
        self.users = users
        self.user_peak = user_peak
        self.user_sigma = user_sigma

    def births(self, year):
        return self.births0 * math.exp(self.birth_growth * (year - 2000.0))

    def hazard(self, year, age):
        base = self.m0 * math.exp(self.slope * age) + self.infant * math.exp(-age / 2.5)
        return base * math.exp(-self.trend * (year - 2000.0))

    def integrated_hazard(self, birth_year, age):
        # Closed form of the hazard integrated along the cohort diagonal.
        k = self.slope - self.trend
        r = 1.0 / 2.5 + self.trend
        gompertz = self.m0 * (math.exp(k * age) - 1.0) / k
        infant = self.infant * (1.0 - math.exp(-r * age)) / r
        return (gompertz + infant) * math.exp(-self.trend * (birth_year - 2000.0))

    def density(self, year, age):
        # People per single year of age: the birth cohort that is `age` years
        # old at `year`, thinned by its exactly integrated hazard.
        birth_year = year - age
        return self.births(birth_year) * math.exp(-self.integrated_hazard(birth_year, age))

    def death_probability(self, year, age):
        return 1.0 - math.exp(-self.hazard(year, age))

    def audience(self, age):
        return self.users * gauss(age, self.user_peak, self.user_sigma)


COUNTRIES = [
    Country("BRA", births0=3.3e6, birth_growth=0.008, m0=3.2e-5, slope=0.094,
            infant=0.010, trend=0.004, users=1.1e6, user_peak=27.0, user_sigma=13.0),
    Country("NOR", births0=6.2e4, birth_growth=0.002, m0=2.0e-5, slope=0.096,
            infant=0.004, trend=0.003, users=2.2e4, user_peak=31.0, user_sigma=14.0),
    Country("VNM", births0=1.65e6, birth_growth=0.012, m0=3.6e-5, slope=0.092,
            infant=0.012, trend=0.005, users=5.5e5, user_peak=24.0, user_sigma=12.0),
    Country("TUV", births0=230.0, birth_growth=0.006, m0=4.5e-5, slope=0.090,
            infant=0.015, trend=0.003, users=60.0, user_peak=26.0, user_sigma=12.0),
]

# Audience-only country: snapshot present, demographics absent.
ISL = Country("ISL", births0=0.0, birth_growth=0.0, m0=1e-5, slope=0.09,
              infant=0.0, trend=0.0, users=8.0e3, user_peak=30.0, user_sigma=14.0)


def write_demographics(path):
    with open(path, "w", newline="") as f:
        f.write("country_code,year_bin,age_bin,deaths,population\n")
        for country in COUNTRIES:
            for year in YEAR_BINS:
                for age in AGE_BINS:
                    mid_year = year + WIDTH / 2.0
                    mid_age = age + WIDTH / 2.0
                    population = country.density(mid_year, mid_age) * WIDTH
                    deaths = (country.death_probability(mid_year, mid_age)
                              * population * WIDTH)
                    f.write("%s,%d,%d,%r,%r\n"
                            % (country.code, year, age, deaths, population))


def write_audience(path):
    with open(path, "w", newline="") as f:
        f.write("country_code,age,lower,upper\n")
        for country in COUNTRIES + [ISL]:
            for age in range(18, 65):
                mid = country.audience(age)
                f.write("%s,%d,%r,%r\n" % (country.code, age, 0.9 * mid, 1.1 * mid))
            bucket = country.audience(70.0)
            f.write("%s,65+,%r,%r\n" % (country.code, 0.9 * bucket, 1.1 * bucket))


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    write_demographics(os.path.join(OUT_DIR, "demographics.csv"))
    write_audience(os.path.join(OUT_DIR, "audience.csv"))
    for country in COUNTRIES:
        margin = min(country.density(2018.0, age) / country.audience(age)
                     for age in range(13, 101))
        total = sum(country.density(2018.0, a) for a in range(0, 105))
        users = sum(country.audience(a) for a in range(18, 65))
        users += country.audience(70.0)
        print("%s: 2018 population %.3g, audience %.3g, "
              "min population/audience ratio %.2f"
              % (country.code, total, users, margin))
        assert margin >= 2.0, country.code


if __name__ == "__main__":
    main()

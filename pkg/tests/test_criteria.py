import math
import random

import pytest

from branchsite.criteria import (
    Band,
    CriterionSpec,
    ScoreScheme,
    SuitabilityClass,
    classify,
    score,
    validate_spec,
)
from branchsite.errors import InputError, SpecificationError

HIGH = SuitabilityClass.HIGH_SUITABLE
SUIT = SuitabilityClass.SUITABLE
NON = SuitabilityClass.NON_SUITABLE


def spec_near(spec_id, hi_end, suit_end):
    """Near-is-better row: [0, hi_end] high, [hi_end, suit_end] suitable, beyond non."""
    return CriterionSpec(
        id=spec_id,
        kind="distance",
        direction="near_better",
        bands=(
            Band(0, hi_end, HIGH),
            Band(hi_end, suit_end, SUIT),
            Band(suit_end, None, NON),
        ),
    )


MAIN_STREET = spec_near("main_street", 100, 500)

COMPETITOR = CriterionSpec(
    id="competitor_branch",
    kind="distance",
    direction="band",
    bands=(Band(100, 200, HIGH), Band(200, None, SUIT), Band(0, 100, NON)),
)

DENSITY = CriterionSpec(
    id="population_density",
    kind="density",
    direction="far_better",
    bands=(Band(500, None, HIGH), Band(200, 500, SUIT), Band(0, 200, NON)),
)

OFFICE = CriterionSpec(
    id="office",
    kind="distance",
    direction="near_better",
    bands=(Band(0, 250, HIGH), Band(200, 500, SUIT), Band(500, None, NON)),
)

INCOME = CriterionSpec(
    id="income_level",
    kind="categorical",
    categories={"High": HIGH, "Middle": SUIT, "Low": NON},
)

COST = CriterionSpec(
    id="building_cost",
    kind="cost-level",  # alias for categorical
    categories={"Middle": HIGH, "High": SUIT, "Low": NON},
)


class TestClassify:
    def test_main_street_50m_high(self):
        assert classify(validate_spec(MAIN_STREET), 50) is HIGH

    def test_main_street_boundary_100m_belongs_to_high(self):
        assert classify(validate_spec(MAIN_STREET), 100) is HIGH

    def test_competitor_band_shape(self):
        norm = validate_spec(COMPETITOR)
        assert classify(norm, 150) is HIGH
        assert classify(norm, 80) is NON
        assert classify(norm, 100) is HIGH  # shared boundary goes to the better class
        assert classify(norm, 200) is HIGH
        assert classify(norm, 250) is SUIT

    def test_density_550_high(self):
        assert classify(validate_spec(DENSITY), 550) is HIGH

    def test_categorical_levels(self):
        income = validate_spec(INCOME)
        assert classify(income, "High") is HIGH
        assert classify(income, "Middle") is SUIT
        assert classify(income, "Low") is NON
        cost = validate_spec(COST)
        assert classify(cost, "Middle") is HIGH  # band-shaped cost row
        assert classify(cost, "High") is SUIT

    def test_unknown_category_rejected(self):
        with pytest.raises(InputError):
            classify(validate_spec(INCOME), "Medium")

    def test_negative_raw_rejected(self):
        with pytest.raises(SpecificationError):
            classify(validate_spec(MAIN_STREET), -1.0)


class TestScore:
    def test_default_scheme_values(self):
        scheme = ScoreScheme()
        assert score(HIGH, scheme) == 0.6
        assert score(SUIT, scheme) == 0.4
        assert score(NON, scheme) == 0.0

    def test_strictly_order_reversing(self):
        for scheme in (ScoreScheme(), ScoreScheme(0.9, 0.5, 0.1), ScoreScheme(1.0, 0.2, 0.0)):
            assert score(HIGH, scheme) > score(SUIT, scheme) > score(NON, scheme)

    def test_invalid_scheme_rejected(self):
        with pytest.raises(SpecificationError):
            ScoreScheme(0.4, 0.6, 0.0)
        with pytest.raises(SpecificationError):
            ScoreScheme(0.6, 0.4, -0.1)


class TestValidateSpec:
    def test_office_overlap_repaired_toward_high(self):
        norm = validate_spec(OFFICE)
        assert any("overlap" in r for r in norm.repairs)
        # the contested strip stays with the more suitable class
        assert classify(norm, 225) is HIGH
        assert classify(norm, 250) is HIGH
        assert classify(norm, 300) is SUIT
        assert classify(norm, 500) is SUIT
        assert classify(norm, 501) is NON

    def test_disjoint_bands_no_repairs(self):
        spec = CriterionSpec(
            id="clean",
            kind="distance",
            direction="near_better",
            bands=(Band(0, 100, HIGH), Band(100, 500, SUIT), Band(500, None, NON)),
        )
        norm = validate_spec(spec)
        # only the shared boundaries get resolved; no overlap/gap repairs
        assert not any("gap" in r for r in norm.repairs)

    def test_gap_filled_to_midpoint(self):
        spec = CriterionSpec(
            id="gapped",
            kind="distance",
            direction="near_better",
            bands=(Band(0, 100, HIGH), Band(200, None, SUIT)),
        )
        norm = validate_spec(spec)
        assert any("gap" in r for r in norm.repairs)
        assert classify(norm, 149.9) is HIGH
        assert classify(norm, 150.0) is HIGH  # midpoint owned by the better side
        assert classify(norm, 150.1) is SUIT
        # sweep: every sample lands in exactly one band
        rng = random.Random(1)
        for _ in range(10_000):
            v = rng.uniform(0, 1000)
            hits = [seg for seg in norm.segments if seg.contains(v)]
            assert len(hits) == 1

    def test_idempotent(self):
        for spec in (MAIN_STREET, COMPETITOR, DENSITY, OFFICE, INCOME, COST):
            once = validate_spec(spec)
            assert validate_spec(once) == once

    def test_totality_fuzz(self):
        rng = random.Random(9)
        for spec in (MAIN_STREET, COMPETITOR, DENSITY, OFFICE):
            norm = validate_spec(spec)
            for _ in range(2000):
                v = rng.choice(
                    [rng.uniform(0, 50), rng.uniform(0, 600), rng.uniform(0, 1e6)]
                )
                hits = [seg for seg in norm.segments if seg.contains(v)]
                assert len(hits) == 1, (spec.id, v)
            # exact stated boundaries too
            for v in (0.0, 100.0, 200.0, 250.0, 500.0):
                assert sum(seg.contains(v) for seg in norm.segments) == 1

    def test_partition_structure(self):
        norm = validate_spec(OFFICE)
        assert norm.segments[0].lo == 0.0 and norm.segments[0].lo_inc
        assert math.isinf(norm.segments[-1].hi)
        for a, b in zip(norm.segments, norm.segments[1:]):
            assert a.hi == b.lo and a.hi_inc != b.lo_inc

    def test_empty_bands_rejected(self):
        with pytest.raises(SpecificationError):
            validate_spec(CriterionSpec(id="x", kind="distance", bands=()))

    def test_bad_category_set_rejected(self):
        with pytest.raises(SpecificationError):
            validate_spec(
                CriterionSpec(
                    id="x",
                    kind="categorical",
                    categories={"High": HIGH, "Low": NON},
                )
            )

    def test_direction_mismatch_rejected(self):
        with pytest.raises(SpecificationError):
            validate_spec(
                CriterionSpec(
                    id="backwards",
                    kind="distance",
                    direction="far_better",
                    bands=(Band(0, 100, HIGH), Band(100, None, NON)),
                )
            )

    def test_unknown_kind_rejected(self):
        with pytest.raises(SpecificationError):
            CriterionSpec(id="x", kind="mystery", bands=(Band(0, 1, HIGH),))

"""
Desk-scale reproduction campaigns (minutes each).

Run with: pytest -m slow
"""

import pytest

from config import get_config, parse_config
from models.schemas import DetectorId
from services.experiments import MonteCarloEngine, auc_pair_test, empirical_roc

DETECTORS = (DetectorId.AMF_KNOWN, DetectorId.AMF, DetectorId.HETERO_GLRT)


def campaign_curves(scenario_name):
    """ROC curves of a desk-scale preset campaign (K=100, 500 paired trials)."""
    _, scenario = parse_config({"scenario": scenario_name}, full_scale=False)
    engine = MonteCarloEngine(workers=get_config().workers)
    samples = engine.run_paired_trials(scenario, DETECTORS)
    for record in samples.values():
        assert record.failures <= 0.01 * record.trials
    return {d: empirical_roc(samples[d]) for d in DETECTORS}


@pytest.mark.slow
class TestReproduction:
    """Detector ordering in the preset scenarios."""

    def test_homogeneous(self):
        """HE: the constrained GLRT tracks AMF and the clairvoyant AMF leads."""
        curves = campaign_curves("HE")
        hetero, amf, known = (curves[d] for d in (DetectorId.HETERO_GLRT, DetectorId.AMF, DetectorId.AMF_KNOWN))
        assert abs(hetero.auc - amf.auc) <= 0.05
        assert auc_pair_test(known, amf, margin=-0.02)

    def test_heterogeneous(self):
        """HET: the constrained GLRT beats AMF and trails the clairvoyant AMF."""
        curves = campaign_curves("HET")
        hetero, amf, known = (curves[d] for d in (DetectorId.HETERO_GLRT, DetectorId.AMF, DetectorId.AMF_KNOWN))
        assert auc_pair_test(hetero, amf, margin=0.02)
        assert auc_pair_test(known, hetero)

    def test_non_stationary_partially_homogeneous(self):
        """NSPHE: the constrained GLRT is at least as good as AMF."""
        curves = campaign_curves("NSPHE")
        assert auc_pair_test(curves[DetectorId.HETERO_GLRT], curves[DetectorId.AMF], margin=-0.01)

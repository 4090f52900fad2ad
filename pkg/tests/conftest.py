import copy
import json

import pytest

from edsim.stochastics import Profile, default_profile_path, load_profile


@pytest.fixture(scope="session")
def default_profile() -> Profile:
    return load_profile(default_profile_path())


@pytest.fixture(scope="session")
def default_raw() -> dict:
    with open(default_profile_path()) as fh:
        return json.load(fh)


def make_mini_raw(base: dict, *, codes=None, daily_total=240.0, needs_lab=0.0,
                  xray=0.0, exam_lt4=1.0, teams=None, first_mean=10.0,
                  last_mean=2.0, triage_mean=2.0, visit_general=1.0) -> dict:
    """Small single-room profile for behavioral tests.

    codes: share per urgency code (defaults to all green); teams: mapping
    pool -> list of (id, start, end); pools omitted get no staff."""
    raw = copy.deepcopy(base)
    shares = codes or {"GREEN": 1.0}
    flat = [daily_total / 24.0] * 24
    raw["arrival_rates"] = {
        c: [x * shares.get(c, 0.0) for x in flat] for c in ("WHITE", "GREEN", "YELLOW", "RED")
    }
    g = visit_general
    raw["mixes"] = {
        "visit_type": {"GENERAL": g, "ORTHOPAEDIC": round((1 - g) * 0.75, 6),
                       "DERMATOLOGICAL": round((1 - g) * 0.25, 6)},
        "needs_lab": needs_lab,
        "xray": xray,
        "extra_exam_lt4": exam_lt4,
        "nonwalking_yellow": 0.5,
    }
    raw["service"]["triage"] = {"family": "lognormal", "mean": triage_mean, "cv": 0.2}
    raw["service"]["first_general"] = {"family": "lognormal", "mean": first_mean, "cv": 0.3}
    raw["service"]["first_ortho"] = {"family": "lognormal", "mean": first_mean, "cv": 0.3}
    raw["service"]["first_derma"] = {"family": "lognormal", "mean": first_mean, "cv": 0.3}
    raw["service"]["last_visit"] = {"family": "lognormal", "mean": last_mean, "cv": 0.3}
    pools = {"low_general": [], "high_general": [], "orthopaedic": [], "dermatological": []}
    pools.update(teams or {"low_general": [("T1", 0, 0)], "high_general": [("H1", 0, 0)]})
    for pool, spec in pools.items():
        raw["resources"][pool]["teams"] = [
            {"id": tid, "start": start, "end": end} for tid, start, end in spec
        ]
    return raw


@pytest.fixture()
def mini_raw_factory(default_raw):
    def factory(**kwargs):
        return make_mini_raw(default_raw, **kwargs)

    return factory

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molga.errors import EmptyHistory
from molga.metrics import (
    GenerationReport,
    auc_top10,
    format_generation_row,
    format_auc_row,
    generation_metrics,
    running_topk_mean,
)
from molga.molgraph import canonical_form
from molga.smiles import parse


def naive_auc(history, budget):
    """Quadratic recomputation straight from the definition."""
    curve = []
    for i in range(1, len(history) + 1):
        top = sorted(history[:i], reverse=True)[:10]
        curve.append(math.fsum(top) / len(top))
    curve += [curve[-1]] * (budget - len(history))
    return math.fsum(curve) / budget


def test_two_point_example():
    rep = auc_top10([0.0, 1.0], 2)
    assert rep.curve == [0.0, 0.5]
    assert rep.auc_top10 == 0.25
    assert rep.final_top10_mean == 0.5


def test_constant_history():
    for c in (0.0, 0.3, 1.0):
        assert auc_top10([c] * 50, 50).auc_top10 == pytest.approx(c, abs=1e-15)
        assert auc_top10([c] * 50, 80).auc_top10 == pytest.approx(c, abs=1e-15)


def test_flat_extension():
    rep = auc_top10([1.0], 4)
    assert rep.auc_top10 == 1.0
    rep = auc_top10([0.0, 1.0], 4)
    assert rep.auc_top10 == (0.0 + 0.5 + 0.5 + 0.5) / 4


def test_errors():
    with pytest.raises(EmptyHistory):
        auc_top10([], 10)
    with pytest.raises(ValueError):
        auc_top10([0.1, 0.2, 0.3], 2)


def test_matches_naive_on_1000_random_histories():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 300))
        if rng.random() < 0.3:
            h = (rng.integers(0, 5, size=n) / 4).tolist()  # plenty of ties
        else:
            h = rng.random(n).tolist()
        budget = n + int(rng.integers(0, 100))
        assert auc_top10(h, budget).auc_top10 == naive_auc(h, budget)


def test_curve_nondecreasing_once_ten_scores_seen():
    rng = np.random.default_rng(1)
    for _ in range(300):
        curve = running_topk_mean(rng.random(int(rng.integers(1, 200))).tolist())
        assert all(b >= a for a, b in zip(curve[9:], curve[10:]))


def test_curve_can_dip_before_ten_scores():
    # With fewer than ten scores the mean runs over all of them, so a low
    # score early on pulls it down and the area can exceed the final value.
    rep = auc_top10([1.0, 0.0], 2)
    assert rep.curve == [1.0, 0.5]
    assert rep.auc_top10 == 0.75 > rep.final_top10_mean


def test_auc_bounds():
    rng = np.random.default_rng(2)
    for _ in range(300):
        h = rng.random(int(rng.integers(1, 100))).tolist()
        rep = auc_top10(h, len(h) + int(rng.integers(0, 50)))
        assert 0.0 <= rep.auc_top10 <= max(h)
        assert rep.auc_top10 <= max(rep.curve)
        # Sorted-ascending histories have a monotone curve from the start.
        asc = auc_top10(sorted(h), len(h))
        assert asc.auc_top10 <= asc.final_top10_mean + 1e-15


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=60), st.integers(0, 40))
def test_property_auc_matches_naive(h, extra):
    assert auc_top10(h, len(h) + extra).auc_top10 == naive_auc(h, len(h) + extra)


# --- generation metrics ------------------------------------------------------


def naive_generation_metrics(generated, reference_smiles):
    canon = []
    for item in generated:
        try:
            canon.append(canonical_form(parse(item)).string)
        except Exception:
            pass
    ref = [canonical_form(parse(s)).string for s in reference_smiles]
    unique = []
    for c in canon:
        if c not in unique:
            unique.append(c)
    novel = [c for c in unique if c not in ref]
    return len(generated), len(canon), len(unique), len(novel)


def test_all_valid_unique_novel():
    rep = generation_metrics([parse("CCO"), parse("CCN")], {canonical_form(parse("C")).string})
    assert (rep.validity, rep.uniqueness, rep.novelty) == (1.0, 1.0, 1.0)


def test_identical_to_reference_has_zero_novelty(reference):
    ref = {canonical_form(g).string for g in reference.molecules}
    rep = generation_metrics(reference.smiles, ref)
    assert rep.novelty == 0.0 and rep.validity == 1.0


def test_mixed_inputs():
    items = ["CCO", "OCC", "C(", None, ValueError("boom"), parse("CCN"), "c1cccc1"]
    rep = generation_metrics(items, set())
    assert (rep.n_generated, rep.n_valid, rep.n_unique, rep.n_novel) == (7, 3, 2, 2)
    with pytest.raises(TypeError):
        generation_metrics([42], set())


def test_matches_naive_recomputation(reference):
    rng = np.random.default_rng(3)
    pool = reference.smiles[:300] + ["C(", "c1cccc1", "CC(C)(C)(C)(C)C", "Q"]
    ref_smiles = reference.smiles[:150]
    ref = {canonical_form(parse(s)).string for s in ref_smiles}
    for _ in range(5):
        gen = [pool[i] for i in rng.integers(len(pool), size=1000)]
        rep = generation_metrics(gen, ref)
        assert (rep.n_generated, rep.n_valid, rep.n_unique, rep.n_novel) == naive_generation_metrics(gen, ref_smiles)


def test_empty_report():
    rep = generation_metrics([], set())
    assert rep.to_dict()["validity"] == 0.0
    assert json.loads(rep.to_json())["n_generated"] == 0


def test_table_rows():
    row = format_generation_row("molga", GenerationReport(10, 10, 9, 9))
    assert "100.00%" in row and "90.00%" in row
    assert format_auc_row("isomers_c7h8n2o2", [0.9, 0.8]).endswith("0.850±0.050")

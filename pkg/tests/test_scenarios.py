import pytest

import predim.structure as structure
import predim.scenarios as scenarios

@pytest.fixture(scope="module")
def dprank():
    return scenarios.build_dprank_witness(k=2, L=3, window=2, seed=7)

@pytest.fixture(scope="module")
def nondistal():
    return scenarios.build_nondistal_witness(lenI=2, lenJ=2, window=2, seed=0)


def test_dprank_points(dprank):
    M = dprank.structure
    assert len(M) == 2 * 2 * 3 + 2 + 1
    assert dprank.sequences == [["a0", "a1", "a2"], ["b0", "b1", "b2"]]
    assert dprank.companions["a1"] == "a1_hat"
    assert dprank.pivot == "pivot"
    assert dprank.pivot_closure == ["c1", "c2"]
    assert M.colours == {"a0_hat", "a1_hat", "a2_hat", "b0_hat", "b1_hat", "b2_hat", "c1", "c2"}
    for sequence, c in zip(dprank.sequences, dprank.pivot_closure):
        hats = [dprank.companions[n] for n in sequence]
        order = [n for n in M.order if n in set(sequence + hats + [c])]
        assert order == sequence + [hats[0], c] + hats[1:]

def test_dprank_verdicts(dprank):
    assert dprank.ok
    verdicts = dprank.verdicts
    assert verdicts["class_membership"]["holds"]
    assert verdicts["pivot_closure"]["holds"]
    assert verdicts["pivot_closure"]["delta"] == 0
    assert verdicts["companion_closures"]["holds"]
    for j in range(2):
        assert verdicts["indiscernible_over_others_{}".format(j)]["holds"]
        assert verdicts["split_by_pivot_{}".format(j)]["holds"]
        assert verdicts["split_by_pivot_{}".format(j)]["obstruction"] is not None
        assert verdicts["indiscernible_without_pivot_{}".format(j)]["holds"]

def test_dprank_pivot_closure(dprank):
    M = dprank.structure
    assert structure.closure(M, ["pivot"]) == {"pivot", "c1", "c2"}
    assert M.delta(["pivot", "c1", "c2"]) == 0
    assert M.trdeg(["pivot"]) == 1

def test_dprank_is_deterministic(dprank):
    again = scenarios.build_dprank_witness(k=2, L=3, window=2, seed=7)
    assert again.to_dict() == dprank.to_dict()

def test_dprank_window_one():
    report = scenarios.build_dprank_witness(k=2, L=2, window=1)
    assert "degenerate_profile" in report.verdicts
    assert report.verdicts["degenerate_profile"]["holds"]
    assert not any(key.startswith("split_by_pivot") for key in report.verdicts)
    assert report.ok

def test_dprank_bad_parameters():
    with pytest.raises(ValueError):
        scenarios.build_dprank_witness(k=1, L=2)
    with pytest.raises(ValueError):
        scenarios.build_dprank_witness(k=2, L=1)
    with pytest.raises(ValueError):
        scenarios.build_dprank_witness(k=2, L=2, window=0)

def test_dprank_size_guard():
    with pytest.raises(structure.SizeGuard):
        scenarios.build_dprank_witness(k=3, L=3, size_bound=20)

def test_nondistal_points(nondistal):
    M = nondistal.structure
    assert nondistal.I == ["a0", "a1"]
    assert nondistal.J == ["b0", "b1"]
    assert M.colours == {"s1"}
    order = [n for n in M.order if n not in ("s1", "s2")]
    assert order == ["alpha", "a0", "a1", "b", "b0", "b1"]
    assert M.value("s1") == M.value("alpha") + M.value("a0") + M.value("b")

def test_nondistal_verdicts(nondistal):
    assert nondistal.ok
    verdicts = nondistal.verdicts
    assert verdicts["class_membership"]["holds"]
    assert verdicts["literal_colouring_violates"]["holds"]
    assert verdicts["literal_colouring_violates"]["delta"] == -1
    assert verdicts["IbJ_over_nothing"]["holds"]
    assert verdicts["IJ_over_alpha"]["holds"]
    assert not verdicts["IbJ_over_alpha"]["holds"]
    assert verdicts["IbJ_over_alpha"]["expected"] is False
    assert verdicts["sum_colour_pair"]["holds"]
    assert verdicts["IbJ_over_alpha_without_sums"]["holds"]

def test_nondistal_notes(nondistal):
    assert any("s1" in note for note in nondistal.notes)
    out = nondistal.to_dict()
    assert out["kind"] == "non-distal"
    assert out["order"].startswith("alpha < ")
    assert [p["name"] for p in out["points"]][0] == "alpha"

def test_nondistal_window_one():
    report = scenarios.build_nondistal_witness(window=1)
    assert report.verdicts["degenerate_profile"]["holds"]
    assert "IbJ_over_alpha" not in report.verdicts

def test_nondistal_size_guard():
    with pytest.raises(structure.SizeGuard):
        scenarios.build_nondistal_witness(lenI=10, lenJ=10, size_bound=20)

def test_window_indiscernible(nondistal):
    M = nondistal.structure
    verdict = scenarios.window_indiscernible(M, ["a0", "a1", "b0"], (), 2)
    assert verdict.ok
    assert verdict.checked > 0
    verdict = scenarios.window_indiscernible(M, ["a0", "a1"], ["alpha", "b"], 1)
    assert not verdict
    assert verdict.failing == (("a0",), ("a1",))
    assert verdict.to_dict()["obstruction"] is not None

def test_order_display(nondistal):
    text = scenarios.order_display(nondistal.structure, ["alpha", "s1", "a0"])
    assert text == "alpha < a0 < s1*"

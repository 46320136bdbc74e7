import json
import random

import pytest

from stencilplan.model import (CharacterCandidate, GenerationError, GeneratorSpec,
                               Instance, InstanceError, InstanceValidationError,
                               Placement1D, Placement2D, evaluate,
                               generate_instance, instance_from_dict,
                               instance_to_dict, load_instance, save_instance,
                               validate_placement)

from conftest import make_candidate, random_instance_1d


def simulate_shots(instance, selected):
    """Independent oracle: walk every repeat, one shot if prepared else n_i."""
    selected = set(selected)
    per_region = []
    for c_idx in range(instance.regions):
        shots = 0
        for cand in instance.candidates:
            for _ in range(cand.t[c_idx]):
                shots += 1 if cand.id in selected else cand.n
        per_region.append(shots)
    return per_region


def two_candidate_instance():
    a = make_candidate(0, n=10, t=(5, 0))
    b = make_candidate(1, n=4, t=(1, 7))
    return Instance(candidates=[a, b], width=100, height=100, mode="1d",
                    regions=2, rows=2, row_height=20)


class TestEvaluate:
    def test_selected_pair(self):
        inst = two_candidate_instance()
        rep = evaluate(inst, {0, 1})
        assert rep.per_region == (6, 7)
        assert rep.t_total == 7
        assert rep.per_region == tuple(simulate_shots(inst, {0, 1}))

    def test_nothing_selected_is_vsb(self):
        inst = two_candidate_instance()
        rep = evaluate(inst, set())
        assert rep.per_region == (54, 28)
        assert rep.t_total == 54
        assert rep.per_region == rep.t_vsb

    def test_unknown_id_rejected(self):
        inst = two_candidate_instance()
        with pytest.raises(InstanceError, match="99"):
            evaluate(inst, {99})

    def test_matches_simulation_on_random_instances(self, rng):
        for _ in range(60):
            inst = random_instance_1d(rng, n=rng.randint(1, 20),
                                      regions=rng.randint(1, 5))
            selected = {c.id for c in inst.candidates if rng.random() < 0.5}
            rep = evaluate(inst, selected)
            assert list(rep.per_region) == simulate_shots(inst, selected)
            assert rep.t_total == max(rep.per_region)
            assert all(t <= v for t, v in zip(rep.per_region, rep.t_vsb))

    def test_growing_selection_never_increases_t_total(self, rng):
        for _ in range(20):
            inst = random_instance_1d(rng, n=10, regions=3)
            ids = [c.id for c in inst.candidates]
            rng.shuffle(ids)
            selected = set()
            prev = evaluate(inst, selected).t_total
            for cid in ids:
                selected.add(cid)
                cur = evaluate(inst, selected).t_total
                assert cur <= prev
                prev = cur


class TestValidatePlacement1D:
    def row_instance(self):
        i = CharacterCandidate(id=0, pw=4, ph=10, sl=2, sr=4, st=0, sb=0, n=2, t=(1,))
        j = CharacterCandidate(id=1, pw=5, ph=10, sl=3, sr=1, st=0, sb=0, n=2, t=(1,))
        return Instance(candidates=[i, j], width=60, height=20, mode="1d",
                        regions=1, rows=1, row_height=20)

    def test_tight_gap_is_feasible(self):
        inst = self.row_instance()
        # w_i - min(sr_i, sl_j) = 10 - 3 = 7
        check = validate_placement(inst, Placement1D(rows=[[(0, 0), (1, 7)]]))
        assert check.feasible

    def test_one_short_is_overlap(self):
        inst = self.row_instance()
        check = validate_placement(inst, Placement1D(rows=[[(0, 0), (1, 6)]]))
        assert not check.feasible
        assert any(v.kind == "overlap" and v.ids == (0, 1) for v in check.violations)

    def test_single_character_inside_outline(self):
        inst = self.row_instance()
        check = validate_placement(inst, Placement1D(rows=[[(0, -2)]]))
        assert check.feasible  # blank hangs off, pattern starts at 0

    def test_pattern_must_stay_inside(self):
        inst = self.row_instance()
        assert not validate_placement(inst, Placement1D(rows=[[(0, -3)]])).feasible
        assert not validate_placement(inst, Placement1D(rows=[[(1, 53)]])).feasible
        assert validate_placement(inst, Placement1D(rows=[[(1, 52)]])).feasible

    def test_row_permutation_preserves_verdict(self, rng):
        from stencilplan.solver1d import refine_row
        for _ in range(10):
            inst = random_instance_1d(rng, n=6, rows=3, width=300)
            rows = [[], [], []]
            for c in inst.candidates:
                rows[rng.randrange(3)].append(c)
            layout = []
            for members in rows:
                if members:
                    rr = refine_row(members)
                    layout.append(list(zip(rr.ids, rr.xs)))
                else:
                    layout.append([])
            base = validate_placement(inst, Placement1D(rows=layout)).feasible
            perm = [layout[2], layout[0], layout[1]]
            assert validate_placement(inst, Placement1D(rows=perm)).feasible == base

    def test_mode_mismatch_is_error(self):
        inst = self.row_instance()
        with pytest.raises(InstanceError):
            validate_placement(inst, Placement2D(placed=[], seq_pair=((), ())))


class TestValidatePlacement2D:
    def block_instance(self):
        a = CharacterCandidate(id=0, pw=10, ph=10, sl=2, sr=3, st=2, sb=2, n=2, t=(1,))
        b = CharacterCandidate(id=1, pw=10, ph=10, sl=4, sr=2, st=3, sb=1, n=2, t=(1,))
        return Instance(candidates=[a, b], width=100, height=100, mode="2d", regions=1)

    def test_horizontal_separation(self):
        inst = self.block_instance()
        # a spans pattern [2,12]; b at x=11 has pattern [15,25]; gap 3 < max(3,4)=4
        bad = Placement2D(placed=[(0, 0, 0), (1, 11, 0)], seq_pair=((0, 1), (0, 1)))
        assert not validate_placement(inst, bad).feasible
        good = Placement2D(placed=[(0, 0, 0), (1, 12, 0)], seq_pair=((0, 1), (0, 1)))
        assert validate_placement(inst, good).feasible

    def test_vertical_separation_suffices(self):
        inst = self.block_instance()
        # patterns overlap in x but are stacked with enough vertical gap
        pl = Placement2D(placed=[(0, 0, 0), (1, 0, 13)], seq_pair=((1, 0), (0, 1)))
        assert validate_placement(inst, pl).feasible

    def test_seq_pair_must_match_placed(self):
        inst = self.block_instance()
        pl = Placement2D(placed=[(0, 0, 0)], seq_pair=((0, 1), (0, 1)))
        check = validate_placement(inst, pl)
        assert not check.feasible
        assert any(v.kind == "seq-pair" for v in check.violations)


class TestInstanceIO:
    def test_round_trip_identity(self, tmp_path):
        inst = two_candidate_instance()
        path = tmp_path / "inst.json"
        save_instance(inst, str(path))
        loaded = load_instance(str(path))
        assert instance_to_dict(loaded) == instance_to_dict(inst)

    def test_zero_shots_rejected(self):
        doc = instance_to_dict(two_candidate_instance())
        doc["candidates"][0]["n"] = 0
        with pytest.raises(InstanceValidationError, match="vsb_shots ≥ 1"):
            instance_from_dict(doc)

    def test_duplicate_id_rejected(self):
        doc = instance_to_dict(two_candidate_instance())
        doc["candidates"][1]["id"] = doc["candidates"][0]["id"]
        with pytest.raises(InstanceValidationError, match="duplicate"):
            instance_from_dict(doc)

    def test_malformed_json_names_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{ not json", encoding="utf-8")
        with pytest.raises(InstanceError, match="line 1"):
            load_instance(str(path))

    def test_missing_field_named(self):
        doc = instance_to_dict(two_candidate_instance())
        del doc["regions"]
        with pytest.raises(InstanceError, match="regions"):
            instance_from_dict(doc)


class TestGenerator:
    def test_small_preset_statistics(self):
        inst = generate_instance(GeneratorSpec.preset("small", regions=10), 1)
        assert len(inst.candidates) == 1000
        assert inst.width == inst.height == 1000
        assert inst.regions == 10
        for c in inst.candidates:
            assert 30 <= c.w <= 50
            assert 2 <= c.sl <= 10 and 2 <= c.sr <= 10
            assert 5 <= c.n <= 30
            assert all(0 <= u <= 400 for u in c.t)

    def test_large_preset(self):
        inst = generate_instance(GeneratorSpec.preset("large"), 7)
        assert len(inst.candidates) == 4000
        assert inst.width == inst.height == 2000

    def test_determinism_byte_identical(self, tmp_path):
        spec = GeneratorSpec.preset("small", mode="2d", regions=10)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_instance(generate_instance(spec, 42), str(a))
        save_instance(generate_instance(spec, 42), str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_row_height_too_small_fails(self):
        spec = GeneratorSpec(mode="1d", count=4, width=100, height=100,
                             regions=1, row_height=20, height_range=(30, 40))
        with pytest.raises(GenerationError, match="row_height"):
            generate_instance(spec, 0)

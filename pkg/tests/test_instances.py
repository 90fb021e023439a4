import numpy as np
import pytest

from redblue import instances, oracle
from redblue.first_last import validate_sets
from redblue.geometry import ValidationError


class TestRoundTrip:
    def test_parse_print_identity(self):
        A, B = instances.generate("random-disjoint", 20, 4)
        text = instances.format_instance(A, B)
        A2, B2 = instances.parse_instance(text)
        assert len(A2) == len(A) and len(B2) == len(B)
        for c, c2 in zip(A + B, A2 + B2):
            assert np.allclose(c.row, c2.row, rtol=0, atol=0)

    def test_parabola_roundtrip_exact(self):
        A, B = instances.generate("nested-parabola", 12, 1)
        text = instances.format_instance(A, B)
        A2, B2 = instances.parse_instance(text)
        for c, c2 in zip(A + B, A2 + B2):
            assert np.array_equal(c.row, c2.row)


class TestParsing:
    def test_comments_and_blanks_ignored(self):
        A, B = instances.parse_instance(
            "# hi\n\n[A]\nL 0 0 1 1\n\n[B]\n# x\nL 0 2 1 2\n")
        assert len(A) == 1 and len(B) == 1

    def test_malformed_line_names_lineno(self):
        with pytest.raises(ValidationError) as exc:
            instances.parse_instance("[A]\nL 0 0 1\n[B]\n")
        assert "line 2" in str(exc.value)

    def test_bad_number_names_lineno(self):
        with pytest.raises(ValidationError) as exc:
            instances.parse_instance("[A]\nL 0 0 x 1\n[B]\n")
        assert "line 2" in str(exc.value)

    def test_record_before_header(self):
        with pytest.raises(ValidationError):
            instances.parse_instance("L 0 0 1 1\n")

    def test_non_monotone_par_rejected(self):
        with pytest.raises(ValidationError):
            instances.parse_instance("[A]\nPAR 0.25 0 -0.25 0 0 1 -1 1\n[B]\n")

    def test_crossing_set_rejected_on_load(self):
        text = "[A]\nL 0 0 10 2\nL 0 2 10 0\n[B]\n"
        with pytest.raises(ValidationError):
            instances.parse_instance(text)

    def test_single_set_file(self):
        curves = instances.parse_set("L 0 0 1 1\nL 0 3 1 4\n")
        assert len(curves) == 2


class TestGenerators:
    def test_deterministic(self):
        a1 = instances.format_instance(*instances.generate("random-disjoint", 17, 9))
        a2 = instances.format_instance(*instances.generate("random-disjoint", 17, 9))
        assert a1 == a2

    @pytest.mark.parametrize("kind", instances.KINDS)
    def test_generated_sets_validate(self, kind):
        for seed in (0, 5, 9):
            A, B = instances.generate(kind, 30, seed)
            validate_sets(A, B)

    def test_grid_crossing_count(self):
        n = 30
        A, B = instances.generate("grid-crossing", n, 0)
        total = sum(len(v) for v in oracle.oracle_report(A, B).values())
        assert total >= n

    def test_nested_parabola_exercises_cases(self):
        from redblue import segment_tree as st
        from redblue.first_last import step31_rank_intervals
        seen = set()
        for seed in range(6):
            A, B = instances.generate("nested-parabola", 40, seed)
            t = st.build(A, B)
            for v in range(1, t.n_nodes):
                if t.cover_len[st.RED][v] and t.end_len[st.BLUE][v]:
                    for s in step31_rank_intervals(t, v):
                        seen.add(s.case)
        assert {"once-once", "twice-nested", "twice-disjoint"} <= seen

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            instances.generate("nope", 5, 0)

    def test_segment_set_noncrossing(self):
        rng = np.random.default_rng(8)
        segs = instances.gen_segment_set(25, rng, extent=15.0)
        validate_sets(segs, [])
        assert len(segs) == 25

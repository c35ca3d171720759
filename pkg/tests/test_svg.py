import numpy as np
import pytest

from hpolens import (
    ForestParams,
    ParamDef,
    explain_all,
    fit_forest,
    histogram,
    pearson_matrix,
    surface_grid,
)
from hpolens.explain import DependenceSeries, dependence_series
from hpolens.svg import (
    emit_svg,
    render_correlation_matrix,
    render_dependence,
    render_histogram,
    render_shap_summary,
    render_surface,
)

from conftest import make_study

UNIT = ParamDef("x", "continuous", 0.0, 1.0)


def sample_histogram(seed=0):
    return histogram(np.random.default_rng(seed).uniform(0, 1, 120), UNIT, n_bins=8)


def sample_shap(rng):
    X = rng.uniform(0, 1, (25, 3))
    y = X[:, 0] + rng.uniform(0, 0.1, 25)
    forest = fit_forest(X, y, ForestParams(n_trees=3, seed=1))
    return explain_all(forest, X)


class TestDeterminism:
    def test_histogram_byte_identical(self):
        assert render_histogram(sample_histogram()) == render_histogram(sample_histogram())

    def test_all_renderers_byte_identical(self, rng, unit_space):
        c = pearson_matrix(np.random.default_rng(1).uniform(0, 1, (30, 4)))
        study = make_study(
            unit_space,
            [{"a": float(a), "b": float(b)}
             for a, b in np.random.default_rng(2).uniform(0, 1, (40, 2))],
            list(np.random.default_rng(3).uniform(0, 1, 40)),
        )
        g = surface_grid(study, "a", "b", resolution=6)
        m = sample_shap(np.random.default_rng(4))
        d = dependence_series(m, "x0", "x1")
        for doc_a, doc_b in [
            (render_correlation_matrix(c), render_correlation_matrix(c)),
            (render_surface(g), render_surface(g)),
            (render_shap_summary(m), render_shap_summary(m)),
            (render_dependence(d), render_dependence(d)),
        ]:
            assert doc_a == doc_b

    def test_no_timestamps_or_env_leakage(self):
        doc = render_histogram(sample_histogram())
        for banned in ("date", "time", "home", "tmp"):
            assert banned not in doc.lower()


class TestWellFormedness:
    def test_histogram_is_valid_xml(self):
        import xml.etree.ElementTree as ET

        root = ET.fromstring(render_histogram(sample_histogram()))
        assert root.tag.endswith("svg")

    def test_histogram_one_rect_per_bin(self):
        doc = render_histogram(sample_histogram())
        # 8 bins + background rect + pattern rect
        assert doc.count("<rect") == 8 + 2
        assert "skew=" in doc and "uniform_p=" in doc

    def test_correlation_undefined_cells_hatched(self, rng):
        X = np.column_stack([rng.uniform(0, 1, 20), np.full(20, 1.0)])
        doc = render_correlation_matrix(pearson_matrix(X, ("a", "b")))
        assert 'fill="url(#nodata)"' in doc
        assert "a</text>" in doc and "b</text>" in doc

    def test_correlation_marked_pairs_drawn(self, rng):
        c = pearson_matrix(rng.uniform(0, 1, (30, 3)), ("a", "b", "c"))
        plain = render_correlation_matrix(c)
        marked = render_correlation_matrix(c, marked_pairs=[("a", "c", "black")])
        assert marked != plain
        assert marked.count('stroke="black" stroke-width="2"') == 4  # X in 2 cells

    def test_surface_empty_cells_hatched(self, unit_space):
        study = make_study(unit_space, [{"a": 0.1, "b": 0.1}], [0.5])
        doc = render_surface(surface_grid(study, "a", "b", resolution=4))
        assert doc.count('fill="url(#nodata)"') == 15

    def test_shap_summary_rows_ranked(self, rng):
        m = sample_shap(rng)
        doc = render_shap_summary(m)
        # the dominant feature label is printed before the others
        assert doc.index(">x0</text>") < doc.index(">x1</text>")
        assert doc.count("<circle") == 25 * 3

    def test_dependence_point_per_row(self):
        d = DependenceSeries("f", "g", tuple((i / 10, i / 20, 0.0) for i in range(10)))
        assert render_dependence(d).count("<circle") == 10

    def test_dependence_empty_series_still_renders(self):
        doc = render_dependence(DependenceSeries("f", "g", ()))
        assert "<svg" in doc and "<circle" not in doc


class TestEmitSvg:
    def test_writes_file_with_trailing_newline(self, tmp_path):
        path = tmp_path / "h.svg"
        emit_svg(sample_histogram(), path)
        text = path.read_text()
        assert text.startswith("<svg")
        assert text.endswith("</svg>\n")

    def test_dispatch_by_type(self, rng, tmp_path):
        emit_svg(pearson_matrix(rng.uniform(0, 1, (20, 3))), tmp_path / "c.svg")
        m = sample_shap(rng)
        emit_svg(m, tmp_path / "s.svg")
        emit_svg(dependence_series(m, "x0", "x1"), tmp_path / "d.svg")
        assert {p.name for p in tmp_path.iterdir()} == {"c.svg", "s.svg", "d.svg"}

    def test_unknown_artifact_rejected(self, tmp_path):
        with pytest.raises(TypeError):
            emit_svg(object(), tmp_path / "x.svg")

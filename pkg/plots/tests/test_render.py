from pathlib import Path

import pytest

from miscplots.cli import main
from miscplots.figures import FigureSpec, SchemaError, build_figure, render

SAMPLE = Path(__file__).resolve().parents[1] / "sample_output" / "genz_robust"


def spec_for(kind, tmp_path):
    inputs = {
        "surface": [SAMPLE / "surface.csv"],
        "error_curve": [SAMPLE / "errors.csv", SAMPLE / "history.csv"],
        "sampling_profile": [SAMPLE / "history.csv"],
        "envelope": [SAMPLE / "envelope_1.csv", SAMPLE / "plateau_1.csv"],
        "pdf": [SAMPLE / "pdf.csv"],
        "ks_curve": [SAMPLE / "errors.csv"],
        "miset": [SAMPLE / "miset.csv"],
    }[kind]
    return FigureSpec(kind=kind, inputs=[str(p) for p in inputs], output=str(tmp_path / f"{kind}.png"))


@pytest.mark.parametrize(
    "kind",
    ["surface", "error_curve", "sampling_profile", "envelope", "pdf", "ks_curve", "miset"],
)
def test_all_figure_kinds_render(kind, tmp_path):
    out = render(spec_for(kind, tmp_path))
    assert out.exists() and out.stat().st_size > 0


def test_envelope_marker_at_csv_kappa(tmp_path):
    plat_lines = (SAMPLE / "plateau_1.csv").read_text().splitlines()
    header = plat_lines[0].split(",")
    kappa = float(dict(zip(header, plat_lines[-1].split(",")))["kappa"])

    fig = build_figure(spec_for("envelope", tmp_path))
    ax = fig.axes[0]
    vlines = [l for l in ax.lines if l.get_gid() == "change-point"]
    markers = [l for l in ax.lines if l.get_gid() == "change-point-marker"]
    assert vlines and markers
    assert vlines[0].get_xdata()[0] == kappa
    assert markers[0].get_xdata()[0] == kappa


def test_error_curve_carries_saturation_arrows(tmp_path):
    fig = build_figure(spec_for("error_curve", tmp_path))
    ax = fig.axes[0]
    arrows = [t for t in ax.texts if t.get_gid() == "saturation-arrow"]
    assert arrows, "expected saturation annotations from history.csv"


def test_overlayed_error_curves(tmp_path):
    spec = FigureSpec(
        kind="error_curve",
        inputs=[str(SAMPLE / "errors.csv"), str(SAMPLE / "errors.csv")],
        output=str(tmp_path / "overlay.png"),
        labels=["robust", "classic"],
    )
    out = render(spec)
    assert out.exists()
    fig = build_figure(spec)
    legend_texts = [t.get_text() for t in fig.axes[0].get_legend().get_texts()]
    assert legend_texts == ["robust", "classic"]


def test_schema_mismatch_is_diagnosed(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    with pytest.raises(SchemaError) as exc:
        render(FigureSpec(kind="surface", inputs=[str(bad)], output=str(tmp_path / "o.png")))
    assert "y1" in str(exc.value) and "found" in str(exc.value)


def test_cli_render_and_exit_codes(tmp_path):
    out = tmp_path / "env.png"
    rc = main(
        [
            "render",
            "--kind",
            "envelope",
            "--in",
            str(SAMPLE / "envelope_1.csv"),
            str(SAMPLE / "plateau_1.csv"),
            "--out",
            str(out),
        ]
    )
    assert rc == 0 and out.exists()

    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    rc = main(["render", "--kind", "pdf", "--in", str(bad), "--out", str(tmp_path / "x.png")])
    assert rc == 2


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(SchemaError):
        FigureSpec(kind="sparkline", inputs=["x.csv"], output="o.png")

"""
Visualization utilities for rate-distortion results.

This module turns the sweep's result table into the two comparison charts
(mIoU vs BPP and FID vs BPP), one curve per method, with a vertical marker
at the measured rate of the semantic map alone and a dotted line at the
published Cityscapes map rate.

Usage:
    from src.analysis.viz import emit_plots
    emit_plots("runs/sweep/results.csv", "runs/sweep/plots")
"""

from pathlib import Path
from typing import Optional

import plotly.graph_objects as go
import polars as pl
from loguru import logger

from src.analysis.constants import (
    METHOD_COLORS,
    METHOD_LABELS,
    METHOD_ORDER,
    REFERENCE_SSM_BPP,
    RESULT_COLUMNS,
    SEMANTIC_METHODS,
    STATUS_OK,
)


# ============================================================
# Visual Constants (Theme)
# ============================================================

FONT_FAMILY = "Arial"
FONT_COLOR = "#374151"
ANNOTATION_COLOR = "#6b7280"
MARKER_COLOR = "#9ca3af"

DEFAULT_COLORS = ['#2563eb', '#dc2626', '#16a34a', '#9333ea', '#ea580c', '#0891b2']

RESULT_SCHEMA = {
    'image_id': pl.Utf8,
    'method': pl.Utf8,
    'quality': pl.Int64,
    'bpp_total': pl.Float64,
    'bpp_ssm': pl.Float64,
    'bpp_coarse': pl.Float64,
    'bpp_header': pl.Float64,
    'miou': pl.Float64,
    'miou_dataset': pl.Float64,
    'fid_batch': pl.Float64,
    'psnr': pl.Float64,
    'status': pl.Utf8,
}

# chart name -> (summary column, title, y-axis title, subtitle)
RD_CHARTS = {
    'miou': (
        'miou_dataset',
        'mIoU vs BPP',
        'mIoU (higher is better)',
        'dataset mIoU from summed confusion counts',
    ),
    'fid_batch': (
        'fid_batch',
        'FID vs BPP',
        'FID (lower is better)',
        'FID over all images per operating point',
    ),
}


# ============================================================
# Helper Functions
# ============================================================

def read_results(csv_path: str | Path) -> pl.DataFrame:
    """
    Load a sweep result table.

    Raises:
    -------
    FileNotFoundError : If the CSV does not exist
    ValueError : If the CSV has no rows or lacks result columns
    """
    path = Path(csv_path)
    if not path.exists():
        raise FileNotFoundError(f"Results file not found: {path}")
    df = pl.read_csv(path, schema_overrides=RESULT_SCHEMA)
    missing = [c for c in RESULT_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"Results file {path} lacks columns: {missing}")
    if df.is_empty():
        raise ValueError(f"Results file is empty: {path}")
    return df


def summarize_results(df: pl.DataFrame) -> pl.DataFrame:
    """
    Average successful rows per (method, quality) operating point.

    Returns:
    --------
    DataFrame with method, quality, n, bpp_total, bpp_ssm, miou (mean of per-image
    values), miou_dataset, fid_batch, psnr sorted by method order and rate
    """
    ok = df.filter(pl.col('status') == STATUS_OK)
    order = {m: i for i, m in enumerate(METHOD_ORDER)}
    return (
        ok.group_by(['method', 'quality'])
        .agg(
            pl.len().alias('n'),
            pl.col('bpp_total').mean(),
            pl.col('bpp_ssm').mean(),
            pl.col('miou').mean(),
            pl.col('miou_dataset').drop_nulls().first(),
            pl.col('fid_batch').mean(),
            pl.col('psnr').filter(pl.col('psnr').is_finite()).mean(),
        )
        .with_columns(
            pl.col('method').replace_strict(order, default=len(order), return_dtype=pl.Int64).alias('_order')
        )
        .sort(['_order', 'bpp_total'])
        .drop('_order')
    )


def ssm_rate_marker(df: pl.DataFrame) -> Optional[float]:
    """Mean SSM rate over successful rows of methods that transmit the map."""
    rows = df.filter((pl.col('status') == STATUS_OK) & pl.col('method').is_in(SEMANTIC_METHODS))
    if rows.is_empty():
        return None
    return float(rows['bpp_ssm'].mean())


def count_images(df: pl.DataFrame) -> int:
    """Distinct image ids, ignoring the id-less placeholder rows."""
    ids = df['image_id'].drop_nulls()
    return ids.filter(ids != '').n_unique()


# ============================================================
# Chart Functions
# ============================================================

def create_rd_chart(
    summary: pl.DataFrame,
    metric: str,
    title: str,
    subtitle: str,
    y_title: str,
    ssm_bpp: Optional[float] = None,
    reference_bpp: Optional[float] = None,
    note: Optional[str] = None,
    height: int = 500,
) -> go.Figure:
    """
    Create a rate-distortion chart: one line per method, metric against total BPP.

    Parameters:
    -----------
    summary : Output of summarize_results()
    metric : Column to plot on the y-axis ('miou_dataset', 'miou' or 'fid_batch')
    title : Main title (bold)
    subtitle : Subtitle (smaller, gray)
    y_title : Y-axis title
    ssm_bpp : X position of the SSM-rate marker (omitted when None)
    reference_bpp : X position of the published SSM rate (omitted when None)
    note : Optional footnote annotation
    height : Figure height in pixels

    Returns:
    --------
    Plotly Figure object
    """
    fig = go.Figure()

    methods = summary['method'].unique(maintain_order=True).to_list()
    for idx, method in enumerate(methods):
        points = summary.filter(pl.col('method') == method).drop_nulls(metric)
        if points.is_empty():
            continue
        color = METHOD_COLORS.get(method, DEFAULT_COLORS[idx % len(DEFAULT_COLORS)])
        label = METHOD_LABELS.get(method, method)
        fig.add_trace(
            go.Scatter(
                x=points['bpp_total'].to_list(),
                y=points[metric].to_list(),
                name=label,
                mode='lines+markers',
                line=dict(width=2.5, color=color),
                marker=dict(size=7),
                customdata=points['quality'].to_list(),
                hovertemplate=(
                    f'<b>{label}</b><br>BPP: %{{x:.4f}}<br>{y_title}: %{{y:.4f}}'
                    '<br>quality: %{customdata}<extra></extra>'
                ),
            )
        )

    if ssm_bpp is not None:
        fig.add_vline(
            x=ssm_bpp,
            line=dict(color=MARKER_COLOR, width=1.5, dash='dash'),
            annotation_text=f"SSM only: {ssm_bpp:.3f} bpp",
            annotation_position='top right',
            annotation_font=dict(size=10, color=ANNOTATION_COLOR),
        )

    if reference_bpp is not None:
        fig.add_vline(
            x=reference_bpp,
            line=dict(color=MARKER_COLOR, width=1.5, dash='dot'),
            annotation_text=f"Cityscapes SSM: {reference_bpp:.3f} bpp",
            annotation_position='bottom right',
            annotation_font=dict(size=10, color=ANNOTATION_COLOR),
        )

    fig.update_layout(
        title=dict(
            text=(
                f"<b>{title}</b><br>"
                f"<span style='font-size:12px; color:{ANNOTATION_COLOR}'>{subtitle}</span>"
            ),
            x=0.5,
            xanchor='center',
        ),
        xaxis=dict(title='Bits per pixel', rangemode='tozero'),
        yaxis=dict(title=y_title),
        legend=dict(
            orientation='h',
            yanchor='top',
            y=-0.12,
            xanchor='center',
            x=0.5,
        ),
        height=height,
        template='plotly_white',
        font=dict(family=FONT_FAMILY, color=FONT_COLOR),
        margin=dict(t=80, b=160 if note else 110, l=80, r=30),
    )

    if note:
        fig.add_annotation(
            text=note,
            xref='paper', yref='paper',
            x=0, y=-0.32,
            showarrow=False,
            align='left',
            font=dict(size=10, color=ANNOTATION_COLOR, family=FONT_FAMILY),
        )

    return fig


def emit_plots(csv_path: str | Path, out_dir: str | Path) -> dict[str, Path]:
    """
    Write the mIoU-vs-BPP and FID-vs-BPP charts of a sweep as standalone HTML.

    Parameters:
    -----------
    csv_path : Sweep result table
    out_dir : Directory for the HTML files (created if missing)

    Returns:
    --------
    Dict mapping metric name to written file
    """
    df = read_results(csv_path)
    summary = summarize_results(df)
    if summary.is_empty():
        raise ValueError(f"Results file {csv_path} has no successful rows to plot")
    marker = ssm_rate_marker(df)
    n_images = count_images(df)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    for name, (column, title, y_title, subtitle) in RD_CHARTS.items():
        fig = create_rd_chart(
            summary,
            column,
            title=title,
            subtitle=f"{n_images} images, {subtitle}",
            y_title=y_title,
            ssm_bpp=marker,
            reference_bpp=REFERENCE_SSM_BPP,
            note=(
                "Dashed line: mean rate of the semantic map alone. "
                "Dotted line: average Cityscapes map rate at 256x512."
            ),
        )
        path = out / f"{name}_vs_bpp.html"
        fig.write_html(path, include_plotlyjs=True)
        written[name] = path
        logger.info(f"Plot written: {path}")
    return written

"""
Rate-distortion sweep over a dataset split.

For every image and every coarse quality of the ladder the image is encoded
once; the bitstream is reconstructed by the diffusion decoder (``spic``) and,
for comparison, by plain bilinear upscaling of its coarse image
(``coarse_bilinear``). Full-image classical codecs give the baseline curves
(``reference_dct`` always, ``bpg`` when the tools are installed).

Semantic fidelity is the mIoU between the transmitted map and the map the
evaluation segmenter finds in the reconstruction, reported per image and,
from confusion counts summed over the split, per (method, quality). FID is
also computed per (method, quality) over all images of the split.
"""

import json
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional

import numpy as np
import polars as pl
from loguru import logger

from src.analysis.constants import (
    METHOD_ORDER,
    RESULT_COLUMNS,
    STATUS_FAILED,
    STATUS_OK,
    STATUS_UNAVAILABLE,
)
from src.analysis.features import FeatureExtractorInterface, RandomConvFeatureExtractor, fid_from_images
from src.analysis.metrics import ConfusionAccumulator, accumulate, miou, psnr
from src.analysis.viz import RESULT_SCHEMA
from src.config.settings import SamplerConfig, SweepConfig, settings
from src.core.errors import SpicError
from src.core.types import Image, SegmentationMap
from src.data.loader import DatasetManifest
from src.diffusion.gaussian import GaussianDiffusion
from src.diffusion.reconstruct import reconstruct
from src.encoder.bitstream import bits_per_pixel
from src.encoder.codecs import EXTERNAL, REFERENCE, decode_lossy, encode_lossy
from src.encoder.external import BpgAdapter
from src.encoder.pipeline import EncodeOptions, decode_bitstream, encode_image
from src.encoder.scaling import upscale_coarse
from src.encoder.segmenter import PrototypeSegmenter, SegmenterInterface, segment
from src.utils.logger import log_execution_context, log_rate_report


@dataclass
class _Row:
    image_id: str
    method: str
    quality: Optional[int]
    bpp_total: float = 0.0
    bpp_ssm: float = 0.0
    bpp_coarse: float = 0.0
    bpp_header: float = 0.0
    miou: Optional[float] = None
    miou_dataset: Optional[float] = None
    fid_batch: Optional[float] = None
    psnr: Optional[float] = None
    status: str = STATUS_OK


def sample_seed(base: int, image_index: int, quality: int) -> int:
    """Per-(image, quality) sampler seed derived from the sweep seed."""
    return int(np.random.SeedSequence([base, image_index, quality]).generate_state(1)[0])


@dataclass(frozen=True)
class _Output:
    recon: Image
    reference: SegmentationMap
    predicted: SegmentationMap


def _score(
    row: _Row,
    x: Image,
    x_hat: Image,
    reference: SegmentationMap,
    eval_segmenter: SegmenterInterface,
) -> _Output:
    predicted = segment(x_hat, eval_segmenter)
    row.miou = miou(reference, predicted)
    row.psnr = psnr(x, x_hat)
    return _Output(x_hat, reference, predicted)


class _ImageJob:
    def __init__(self, sweep: "RDSweep", index: int, image_id: str, x: Image):
        self.sweep = sweep
        self.index = index
        self.image_id = image_id
        self.x = x

    def run(self) -> tuple[list[_Row], dict[tuple[str, int], _Output]]:
        rows: list[_Row] = []
        outputs: dict[tuple[str, int], _Output] = {}
        sw = self.sweep
        for q in sw.cfg.quality_ladder:
            rows.extend(self._semantic_rows(q, outputs))
        for q in sw.cfg.baseline_ladder:
            rows.append(self._baseline_row("reference_dct", REFERENCE, q, outputs))
            if sw.bpg_available:
                rows.append(self._baseline_row("bpg", EXTERNAL, q, outputs))
        return rows, outputs

    def _semantic_rows(self, q: int, outputs: dict) -> list[_Row]:
        sw = self.sweep
        try:
            options = EncodeOptions(
                quality=q,
                factor=sw.factor,
                ssm_codec_id=sw.cfg.ssm_codec_id,
                coarse_codec_id=sw.cfg.coarse_codec_id,
            )
            enc = encode_image(self.x, sw.segmenter, options)
            dec = decode_bitstream(enc.bitstream.to_bytes(), sw.factor)
        except SpicError as e:
            logger.warning(f"{self.image_id} q={q}: encoding failed: {e}")
            return [_Row(self.image_id, m, q, status=STATUS_FAILED) for m in ("spic", "coarse_bilinear")]

        log_rate_report(f"{self.image_id} q={q}", enc.rate)
        rate = enc.rate.as_dict()
        rows = []
        for method in ("spic", "coarse_bilinear"):
            row = _Row(self.image_id, method, q, **rate)
            if method == "spic" and sw.diffusion is None:
                row.status = STATUS_UNAVAILABLE
                rows.append(row)
                continue
            try:
                if method == "spic":
                    cfg = sw.sampler.model_copy(update={"seed": sample_seed(sw.cfg.seed, self.index, q)})
                    x_hat = reconstruct(dec, sw.diffusion, cfg)
                else:
                    x_hat = upscale_coarse(dec.coarse, sw.factor)
                outputs[(method, q)] = _score(row, self.x, x_hat, enc.segmentation, sw.eval_segmenter)
                rows.append(row)
            except (SpicError, ValueError) as e:
                logger.warning(f"{self.image_id} {method} q={q}: {e}")
                row.status = STATUS_FAILED
                rows.append(row)
        return rows

    def _baseline_row(self, method: str, codec_id: int, q: int, outputs: dict) -> _Row:
        sw = self.sweep
        x = self.x
        row = _Row(self.image_id, method, q)
        try:
            payload = encode_lossy(x.pixels, q, codec_id)
            x_hat = Image(decode_lossy(payload, x.height, x.width, q, codec_id))
            bpp = float(bits_per_pixel(len(payload), x.width, x.height))
            row.bpp_total = row.bpp_coarse = bpp
            reference = segment(x, sw.eval_segmenter)
            outputs[(method, q)] = _score(row, x, x_hat, reference, sw.eval_segmenter)
        except (SpicError, ValueError) as e:
            logger.warning(f"{self.image_id} {method} q={q}: {e}")
            row.status = STATUS_FAILED
        return row


class RDSweep:
    """Configured sweep; :meth:`run` writes ``results.csv`` into the output directory."""

    def __init__(
        self,
        cfg: SweepConfig,
        diffusion: Optional[GaussianDiffusion] = None,
        sampler: Optional[SamplerConfig] = None,
        segmenter: Optional[SegmenterInterface] = None,
        eval_segmenter: Optional[SegmenterInterface] = None,
        extractor: Optional[FeatureExtractorInterface] = None,
        factor: Optional[int] = None,
    ):
        self.cfg = cfg
        self.diffusion = diffusion
        self.sampler = sampler or settings.sampler
        self.segmenter = segmenter or PrototypeSegmenter()
        self.eval_segmenter = eval_segmenter or PrototypeSegmenter()
        self.extractor = extractor or RandomConvFeatureExtractor(d=cfg.feature_dim, seed=cfg.seed)
        self.factor = factor or settings.downscale_factor
        self.bpg_available = BpgAdapter(settings.bpgenc_binary, settings.bpgdec_binary).available()

    def output_dir(self) -> Path:
        if self.cfg.output_dir is not None:
            return Path(self.cfg.output_dir)
        return settings.runs_dir / f"sweep_{datetime.now():%Y%m%d_%H%M%S_%f}"

    def run(self, manifest: DatasetManifest) -> Path:
        entries = manifest.split(self.cfg.split)
        if not entries:
            raise ValueError(f"no images in split {self.cfg.split!r} of {manifest.root}")
        out_dir = self.output_dir()
        out_dir.mkdir(parents=True, exist_ok=True)

        with log_execution_context(f"rd sweep over {len(entries)} images"):
            jobs = []
            for index, entry in enumerate(entries):
                x, _ = manifest.load(entry)
                jobs.append(_ImageJob(self, index, entry.image_id, x))

            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                results = list(pool.map(lambda job: job.run(), jobs))

            rows = [row for job_rows, _ in results for row in job_rows]
            if not self.bpg_available:
                logger.warning("bpgenc/bpgdec not found; BPG baseline recorded as unavailable")
                rows.append(_Row("", "bpg", None, status=STATUS_UNAVAILABLE))
            self._fill_split_metrics(jobs, results, rows)

            frame = self._frame(rows)
            csv_path = out_dir / "results.csv"
            frame.write_csv(csv_path)
            (out_dir / "sweep_config.json").write_text(
                json.dumps(
                    {
                        "sweep": self.cfg.model_dump(mode="json"),
                        "sampler": self.sampler.model_dump(mode="json"),
                        "factor": self.factor,
                        "segmenter": self.segmenter.name,
                        "eval_segmenter": self.eval_segmenter.name,
                        "feature_extractor": self.extractor.name,
                        "diffusion": self.diffusion is not None,
                        "bpg": self.bpg_available,
                    },
                    indent=2,
                )
            )
        logger.success(f"Sweep results written: {csv_path} ({frame.height} rows)")
        return csv_path

    def _fill_split_metrics(self, jobs: list[_ImageJob], results: list, rows: list[_Row]) -> None:
        """Dataset mIoU and FID per (method, quality), written onto every successful row."""
        groups: dict[tuple[str, int], list[tuple[Image, _Output]]] = defaultdict(list)
        for job, (_, outputs) in zip(jobs, results):
            for key, out in outputs.items():
                groups[key].append((job.x, out))
        mious, fids = {}, {}
        for key, items in groups.items():
            acc = ConfusionAccumulator(items[0][1].reference.n_classes)
            for _, out in items:
                acc = accumulate(acc, out.reference, out.predicted)
            mious[key] = acc.miou()
            if len(items) >= 2:
                originals = [x for x, _ in items]
                fids[key] = fid_from_images(originals, [out.recon for _, out in items], self.extractor)
        for row in rows:
            if row.status == STATUS_OK and row.quality is not None:
                row.miou_dataset = mious.get((row.method, row.quality))
                row.fid_batch = fids.get((row.method, row.quality))

    @staticmethod
    def _frame(rows: list[_Row]) -> pl.DataFrame:
        data = {col: [getattr(r, col) for r in rows] for col in RESULT_COLUMNS}
        frame = pl.DataFrame(data, schema=RESULT_SCHEMA)
        order = {m: i for i, m in enumerate(METHOD_ORDER)}
        return (
            frame.with_row_index('_pos')
            .with_columns(pl.col('method').replace_strict(order, default=len(order), return_dtype=pl.Int64).alias('_m'))
            .sort(['image_id', '_m', '_pos'])
            .drop(['_pos', '_m'])
        )


def rd_sweep(
    manifest: DatasetManifest,
    cfg: SweepConfig,
    diffusion: Optional[GaussianDiffusion] = None,
    sampler: Optional[SamplerConfig] = None,
    segmenter: Optional[SegmenterInterface] = None,
    eval_segmenter: Optional[SegmenterInterface] = None,
    extractor: Optional[FeatureExtractorInterface] = None,
    factor: Optional[int] = None,
) -> Path:
    """
    Run a rate-distortion sweep and write its result table.

    Parameters:
    -----------
    manifest : Ingested dataset; the split named by ``cfg.split`` is swept
    cfg : Quality ladders, codec ids, output directory, seed and worker count
    diffusion : Trained decoder; without it ``spic`` rows are marked unavailable
    sampler : Reverse-process settings (seed is replaced per image and quality)
    segmenter : Segmenter producing the transmitted map (default: prototype)
    eval_segmenter : Segmenter applied to reconstructions for mIoU (default: prototype)
    extractor : Feature extractor for FID (default: seeded random conv net)
    factor : Downscale factor (default from settings)

    Returns:
    --------
    Path to results.csv
    """
    return RDSweep(cfg, diffusion, sampler, segmenter, eval_segmenter, extractor, factor).run(manifest)

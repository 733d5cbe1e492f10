"""纯文本输出：模型对比表与区域描述"""

from typing import Dict, List, Optional, Sequence

from ..domain.data.models import FeatureMeta, Scaler
from ..domain.regions.models import RegionSet
from ..services.evaluation import ExperimentResult, SeedSweep


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> List[str]:
    widths = [len(h) for h in header]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    fmt = "  ".join(f"{{:<{w}}}" if i == 0 else f"{{:>{w}}}" for i, w in enumerate(widths))
    lines = [fmt.format(*header), "  ".join("-" * w for w in widths)]
    lines.extend(fmt.format(*row) for row in rows)
    return lines


def render_comparison(result: ExperimentResult) -> str:
    """
    对比表，每个模型一行：标准化单位与原始单位的 MAE/RMSE。
    """
    lines: List[str] = [f"dataset: {result.dataset}  seed: {result.seed}", ""]
    header = ["model", "MAE", "RMSE", "MAE (orig)", "RMSE (orig)"]
    rows = [
        [r.label, f"{r.mae:.4f}", f"{r.rmse:.4f}", f"{r.mae_original:.4g}", f"{r.rmse_original:.4g}"]
        for r in result.reports
    ]
    lines.extend(_table(header, rows))
    regional = {s: rs for s, rs in result.regionsets.items() if rs.T > 1}
    if regional:
        lines.append("")
        lines.append("subregions:")
        lines.extend(render_regions(regional, result.features, result.scaler).splitlines())
    if result.timings:
        lines.append("")
        lines.append("timings: " + ", ".join(f"{k} {v:.1f}s" for k, v in result.timings.items()))
    return "\n".join(lines)


def render_seed_sweep(sweep: SeedSweep) -> str:
    """多种子汇总：均值 ± 样本标准差"""
    seeds = ", ".join(str(s) for s in sweep.seeds)
    lines: List[str] = [f"dataset: {sweep.dataset}  seeds: {seeds}", ""]
    header = ["model", "MAE", "RMSE", "RMSE (orig)"]
    rows = [
        [
            s.label,
            f"{s.mae_mean:.4f} ± {s.mae_sd:.4f}",
            f"{s.rmse_mean:.4f} ± {s.rmse_sd:.4f}",
            f"{s.rmse_original_mean:.4g} ± {s.rmse_original_sd:.2g}",
        ]
        for s in sweep.summaries
    ]
    lines.extend(_table(header, rows))
    return "\n".join(lines)


def render_regions(
    regionsets: Dict[int, RegionSet],
    features: Sequence[FeatureMeta],
    scaler: Optional[Scaler] = None,
) -> str:
    lines: List[str] = []
    for s in sorted(regionsets):
        rs = regionsets[s]
        trace = " -> ".join(f"{v:.3f}" for v in rs.trace)
        suffix = " (merged)" if rs.merged else ""
        lines.append(f"  {features[s].name}: T={rs.T}{suffix}  objective {trace}")
        if rs.T > 1:
            for t, region in enumerate(rs.regions):
                lines.append(f"    [{t + 1}] {rs.describe(t, features, scaler)}  (n={region.count})")
    return "\n".join(lines)

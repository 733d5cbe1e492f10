"""
命令行入口：synth / fit / detect / effects / evaluate / fetch

每次运行先把解析后的完整配置以 JSON 打印到 stdout，再执行子命令；
失败时在 stderr 输出单行诊断并返回非零退出码。
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd
from loguru import logger

from ..config_loader import RunConfig, load_run_defaults, resolve_threads
from ..domain.blackbox import jacobian
from ..domain.data import apply_scaler, load_csv, write_csv
from ..domain.effects import build_bins, curve_frame, regional_curve
from ..domain.gam import export_shapes
from ..domain.synth import ToySpec, generate_toy
from ..errors import InvalidConfig, RamkitError
from ..infrastructure.logging import setup_logging
from ..infrastructure.storage import (
    load_model,
    load_regionsets,
    save_json,
    save_model,
    save_regionsets,
    write_tables,
)
from ..services.benchmarks import BENCHMARK_CATEGORICAL, BENCHMARK_TARGETS, fetch_benchmark
from ..services.evaluation import run_experiment, run_seeds
from ..services.pipeline import detect_regions, fit_pipeline, load_dataset, prepare_data, stage, train_blackbox
from .render import render_comparison, render_regions, render_seed_sweep

_MLP_FLAGS = ("epochs", "lr", "hidden")


def _csv_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _hidden(value: str) -> List[int]:
    try:
        sizes = [int(item) for item in _csv_list(value)]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--hidden expects comma-separated integers, got {value!r}") from exc
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("--hidden needs at least one positive layer width")
    return sizes


def _seeds(value: str) -> List[int]:
    try:
        seeds = [int(item) for item in _csv_list(value)]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--seeds expects comma-separated integers, got {value!r}") from exc
    if not seeds:
        raise argparse.ArgumentTypeError("--seeds needs at least one seed")
    return seeds


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="全局随机种子，各阶段种子由此派生")
    p.add_argument("--threads", type=int, default=None, help="worker 数上限（默认：RAMKIT_THREADS 或 CPU 核数）")
    p.add_argument("--config", default=None, help="stage defaults JSON (default: config/ramkit.json)")
    p.add_argument("--log-level", default="INFO", help="loguru level for stderr")
    p.add_argument("--log-dir", default=None, help="额外写入按日轮转的日志文件")


def _add_data(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--data", required=required, help="CSV 文件")
    p.add_argument("--target", required=required, help="目标列名")
    p.add_argument("--categorical", type=_csv_list, default=None, help="逗号分隔的类别列名")


def _add_pipeline(p: argparse.ArgumentParser) -> None:
    p.add_argument("--blackbox", choices=("mlp", "toy"), default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None, help="MLP learning rate")
    p.add_argument("--hidden", type=_hidden, default=None, help="hidden layer widths, e.g. 64,64,64")
    p.add_argument("--k-init", type=int, default=None)
    p.add_argument("--min-points", type=int, default=None)
    p.add_argument("--positions", type=int, default=None, help="数值特征候选网格的段数 P（P + 1 个位置）")
    p.add_argument("--max-depth", type=int, default=None, help="最大层数 L")
    p.add_argument("--epsilon", type=float, default=None, help="接受一层所需的相对下降")
    p.add_argument("--min-region", type=int, default=None)
    p.add_argument("--no-merge", action="store_true", help="不做区域合并后处理")
    p.add_argument("--rounds", type=int, default=None, help="boosting rounds")
    p.add_argument("--order", type=int, choices=(1, 2), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ramkit", description="Regionally additive models")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth", help="生成玩具数据 CSV")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("fit", help="训练 RAM 并保存模型 JSON")
    _add_data(p)
    _add_pipeline(p)
    p.add_argument("--model-out", required=True)
    p.add_argument("--regions-out", default=None)
    p.add_argument("--regions-in", default=None, help="复用 detect 保存的区域 JSON，跳过区域检测")
    _add_common(p)

    p = sub.add_parser("detect", help="只做子区域检测，保存区域 JSON")
    _add_data(p)
    _add_pipeline(p)
    p.add_argument("--regions-out", required=True)
    _add_common(p)

    p = sub.add_parser("effects", help="导出形状函数与 DALE 曲线 CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--feature", default=None, help="只导出该特征（默认全部）")
    p.add_argument("--out", required=True, help="输出目录")
    _add_data(p, required=False)
    p.add_argument("--k-init", type=int, default=None)
    p.add_argument("--min-points", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("evaluate", help="DNN / GAM / RAM / GA2M / RA2M 对比")
    _add_data(p)
    _add_pipeline(p)
    p.add_argument("--seeds", type=_seeds, default=None, help="逗号分隔的种子列表，逐个重复实验并汇总均值与标准差")
    p.add_argument("--out", default=None, help="结果 JSON")
    _add_common(p)

    p = sub.add_parser("fetch", help="下载基准数据集并写成 CSV")
    p.add_argument("--dataset", choices=sorted(BENCHMARK_TARGETS), required=True)
    p.add_argument("--out", required=True, help="输出目录")
    _add_common(p)
    return parser


def _check_conflicts(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    if getattr(args, "blackbox", None) == "toy":
        given = [f"--{name}" for name in _MLP_FLAGS if getattr(args, name, None) is not None]
        if given:
            parser.error(f"{', '.join(given)} cannot be combined with --blackbox toy")
    if args.subcommand == "effects" and (args.data is None) != (args.target is None):
        parser.error("--data and --target must be given together")


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """CLI > 环境变量 > config/ramkit.json > 默认值"""
    base = load_run_defaults(Path(args.config) if args.config else None)
    opt = lambda name: getattr(args, name, None)  # noqa: E731

    mlp = base.mlp
    if opt("epochs") is not None:
        mlp = replace(mlp, epochs=args.epochs)
    if opt("lr") is not None:
        mlp = replace(mlp, learning_rate=args.lr)
    if opt("hidden") is not None:
        mlp = replace(mlp, hidden_layers=args.hidden)

    bins = base.bins
    if opt("k_init") is not None:
        bins = replace(bins, k_init=args.k_init)
    if opt("min_points") is not None:
        bins = replace(bins, min_points=args.min_points)

    regions = base.regions
    for flag, key in (("positions", "positions"), ("max_depth", "max_depth"), ("epsilon", "epsilon"), ("min_region", "min_region")):
        if opt(flag) is not None:
            regions = replace(regions, **{key: getattr(args, flag)})
    if opt("no_merge"):
        regions = replace(regions, merge=False)

    boosting = base.boosting
    if opt("rounds") is not None:
        boosting = replace(boosting, rounds=args.rounds)
    if opt("min_region") is not None:
        boosting = replace(boosting, min_region=args.min_region)

    categorical = opt("categorical")
    run = replace(
        base,
        subcommand=args.subcommand,
        data=opt("data"),
        target=opt("target"),
        categorical=list(categorical) if categorical is not None else list(base.categorical),
        seed=args.seed if args.seed is not None else base.seed,
        seeds=list(opt("seeds") or base.seeds),
        threads=resolve_threads(args.threads, base.threads),
        order=opt("order") or base.order,
        blackbox=opt("blackbox") or base.blackbox,
        mlp=mlp,
        bins=bins,
        regions=regions,
        boosting=boosting,
        outputs={
            key: opt(key)
            for key in ("out", "model_out", "regions_out", "regions_in", "model", "feature")
            if opt(key) is not None
        },
    )
    return run.validate()


# ---- 子命令 ----


def _cmd_synth(run: RunConfig, args: argparse.Namespace) -> int:
    ds, _ = generate_toy(ToySpec(n=args.n, seed=run.seed, noise_sd=args.noise))
    path = write_csv(ds, args.out, target="y")
    print(f"wrote {ds.N} rows to {path}")
    return 0


def _cmd_fit(run: RunConfig, args: argparse.Namespace) -> int:
    regionsets = load_regionsets(Path(args.regions_in)) if args.regions_in else None
    fit = fit_pipeline(run, holdout=False, regionsets=regionsets)
    features = fit.data.train.features
    meta = {"data": run.data, "target": run.target, "seed": run.seed, "timings": fit.timings}
    save_model(args.model_out, fit.model, fit.data.scaler, fit.blackbox, extra_meta=meta)
    if args.regions_out:
        save_regionsets(args.regions_out, fit.regionsets, features, fit.data.scaler)
    print(render_regions(fit.regionsets, features, fit.data.scaler))
    n_ext = len(fit.model.shapes)
    print(f"{n_ext} extended features, train RMSE {fit.model.history[-1]:.4f} -> {args.model_out}")
    return 0


def _cmd_detect(run: RunConfig, args: argparse.Namespace) -> int:
    run.validate()
    timings: Dict[str, float] = {}
    with stage("data", timings):
        data = prepare_data(load_dataset(run), run, holdout=False)
    with stage("blackbox", timings):
        blackbox = train_blackbox(run, data)
    with stage("jacobian", timings):
        J = jacobian(blackbox, data.train.X)
    with stage("regions", timings):
        regionsets = detect_regions(run, data.train, J, run.threads or 1)
    save_regionsets(args.regions_out, regionsets, data.train.features, data.scaler)
    print(render_regions(regionsets, data.train.features, data.scaler))
    return 0


def _feature_index(features, name: Optional[str]) -> Optional[int]:
    if name is None:
        return None
    for meta in features:
        if meta.name == name:
            return meta.index
    raise InvalidConfig(f"unknown feature {name!r}")


def _cmd_effects(run: RunConfig, args: argparse.Namespace) -> int:
    bundle = load_model(args.model)
    model, scaler = bundle.model, bundle.scaler
    s_only = _feature_index(model.features, args.feature)
    tables: Dict[str, pd.DataFrame] = {
        name: frame
        for name, frame in export_shapes(model, scaler).items()
        if s_only is None or any(sh.name == name and sh.source == s_only for sh in model.shapes)
    }

    if run.data and bundle.blackbox is not None:
        ds = load_csv(run.data, run.target, run.categorical)
        std = apply_scaler(scaler, ds) if scaler is not None else ds
        J = bundle.blackbox.jacobian(std.X)
        targets = [s_only] if s_only is not None else std.numeric_indices
        for s in targets:
            if std.features[s].is_categorical:
                logger.warning(f"[分箱] {std.features[s].name} is categorical, no DALE curve")
                continue
            tables.update(_dale_tables(std, J, s, model.regionsets.get(s), run, scaler))

    paths = write_tables(Path(args.out), tables)
    for path in paths:
        print(path)
    return 0


def _dale_tables(std, J, s, rs, run: RunConfig, scaler) -> Dict[str, pd.DataFrame]:
    name = std.features[s].name
    xs, grads = std.X[:, s], J[:, s]
    partition = build_bins(xs, run.bins.k_init, run.bins.min_points, grads=grads, feature=s)
    frames = {f"{name}_dale_global": curve_frame(regional_curve(partition, xs, grads))}
    if rs is not None and rs.T > 1:
        for t, region in enumerate(rs.regions):
            mask = region.mask(std.X)
            if mask.any():
                frame = curve_frame(regional_curve(partition, xs, grads, mask))
                frame["region"] = rs.describe(t, std.features, scaler)
                frames[f"{name}_dale_region{t + 1}"] = frame
    if scaler is not None:
        for frame in frames.values():
            frame["knot_original"] = [scaler.value_to_original(s, v) for v in frame["knot"]]
    return frames


def _cmd_evaluate(run: RunConfig, args: argparse.Namespace) -> int:
    include_pairs = run.boosting.max_pairs > 0
    if run.seeds:
        result = run_seeds(run, dataset_id=Path(run.data).stem, include_pairs=include_pairs)
        print(render_seed_sweep(result))
    else:
        result = run_experiment(run, dataset_id=Path(run.data).stem, include_pairs=include_pairs)
        print(render_comparison(result))
    if args.out:
        save_json(Path(args.out), result.to_dict())
    return 0


def _cmd_fetch(run: RunConfig, args: argparse.Namespace) -> int:
    path = fetch_benchmark(args.dataset, Path(args.out))
    categorical = ",".join(BENCHMARK_CATEGORICAL[args.dataset])
    hint = f" --categorical {categorical}" if categorical else ""
    print(f"{path}  (use --target {BENCHMARK_TARGETS[args.dataset]}{hint})")
    return 0


_HANDLERS = {
    "synth": _cmd_synth,
    "fit": _cmd_fit,
    "detect": _cmd_detect,
    "effects": _cmd_effects,
    "evaluate": _cmd_evaluate,
    "fetch": _cmd_fetch,
}


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    解析参数并执行子命令。

    Returns:
        0 成功；1 运行错误（单行诊断输出到 stderr）；参数错误由 argparse 以 2 退出
    """
    parser = build_parser()
    args = parser.parse_args(list(argv) if argv is not None else None)
    _check_conflicts(parser, args)
    setup_logging(args.log_level, args.log_dir)

    try:
        run = build_run_config(args)
        print(json.dumps(run.to_dict(), ensure_ascii=False, sort_keys=True))
        sys.stdout.flush()
        return _HANDLERS[args.subcommand](run, args)
    except (RamkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

"""
evaluate: per-sample metrics of a checkpoint on the stored test split.
"""

import argparse
import logging

from app.commands import add_config_argument, resolve_config
from app.commands.train import default_report_path
from app.errors import TrainingError
from app.schemas import QUANTITIES
from app.storage.checkpoints import read_checkpoint
from app.storage.datasets import read_dataset
from app.storage.reports import read_report, write_report
from app.training.loop import TrainReport, evaluate

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("evaluate", help="evaluate a checkpoint on the test split")
    parser.add_argument("--model", required=True, help="checkpoint file")
    parser.add_argument("--dataset", required=True, help="dataset file the model was trained on")
    parser.add_argument("--report", required=True, help="output evaluation report (JSON)")
    parser.add_argument("--split", default=None, help="train report holding test indices (default <model>.cv.json)")
    parser.add_argument("--subset", choices=["test", "train"], default="test", help="partition to evaluate")
    add_config_argument(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> None:
    config = resolve_config(args)
    params = read_checkpoint(args.model)
    dataset = read_dataset(args.dataset)
    split = read_report(args.split or default_report_path(args.model), TrainReport)

    test = set(split.test_indices)
    if any(i >= len(dataset) for i in test):
        raise TrainingError(f"test indices exceed the dataset size {len(dataset)}")
    if args.subset == "test":
        positions = sorted(test)
    else:
        positions = [i for i in range(len(dataset)) if i not in test]

    report = evaluate(params, dataset.subset(positions), split=args.subset)
    report = report.model_copy(update={"config": config.echo()})
    write_report(args.report, report)

    print(f"{args.subset} samples: {report.n_samples}")
    for name in QUANTITIES:
        metrics = getattr(report, name)
        rel = metrics.relative_l2_stats
        print(
            f"  {name}: relative L2 mean {rel.mean:.4f}% (std {rel.std:.4f}, median {rel.median:.4f}), "
            f"MSE mean {metrics.mse_stats.mean:.6e}"
        )
    print(f"wrote {args.report}")

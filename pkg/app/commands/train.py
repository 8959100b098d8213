"""
train: 80/20 split, k-fold cross-validation and a final fit.
"""

import argparse
import logging

from app.commands import add_config_argument, resolve_config
from app.storage.checkpoints import write_checkpoint
from app.storage.datasets import read_dataset
from app.storage.reports import write_report
from app.training.loop import TrainReport
from app.training.workflow import run_train_pipeline

logger = logging.getLogger(__name__)


def default_report_path(checkpoint: str) -> str:
    return f"{checkpoint}.cv.json"


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="cross-validate and train a model")
    parser.add_argument("--dataset", required=True, help="dataset file")
    parser.add_argument("--out", required=True, help="output checkpoint path")
    parser.add_argument("--folds", type=int, default=None, help="cross-validation folds (default 5)")
    parser.add_argument("--seed", type=int, default=None, help="run seed (default 0)")
    parser.add_argument("--max-epochs", type=int, default=None, help="epoch cap (default 500)")
    parser.add_argument("--workers", type=int, default=None, help="threads for parallel folds")
    parser.add_argument("--report", default=None, help="train report path (default <out>.cv.json)")
    parser.add_argument("--no-cv", action="store_true", help="skip cross-validation")
    add_config_argument(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> None:
    config = resolve_config(
        args,
        {"k_folds": args.folds, "seed": args.seed, "max_epochs": args.max_epochs, "workers": args.workers},
    )
    dataset = read_dataset(args.dataset)
    model_config = config.model_for(dataset.n1, dataset.mesh.n_nodes)

    state = run_train_pipeline(
        dataset,
        config.train_config(),
        model_config,
        run_cv=not args.no_cv,
        workers=config.workers,
    )
    write_checkpoint(args.out, state["params"])

    echo = config.echo()
    cv = state["cv_report"]
    if cv is not None:
        cv = cv.model_copy(update={"config": echo})
    origin = dataset.indices
    report = TrainReport(
        cv=cv,
        test_indices=[origin[p] for p in state["test_positions"]],
        holdout_indices=state["holdout_indices"],
        final_history=state["final_history"],
        config=echo,
    )
    report_path = args.report or default_report_path(args.out)
    write_report(report_path, report)

    if cv is not None:
        print(f"cv: {cv.k_folds}-fold composite MSE (normalized) {cv.mean_val_loss:.6e} +/- {cv.std_val_loss:.6e}")
        for fold in cv.folds:
            print(
                f"  fold {fold.fold + 1}: {fold.best_val_loss:.6e} "
                f"(best epoch {fold.best_epoch}, {fold.epochs_run} epochs, {fold.stop_reason})"
            )
    history = state["final_history"]
    print(
        f"final fit: best epoch {history.best_epoch} of {history.epochs_run} ({history.stop_reason}), "
        f"holdout loss {history.best_val_loss:.6e}"
    )
    print(f"wrote {args.out} and {report_path}")

from core.choices import SweepKind
from core.experiments import run_experiment
from core.management.options import NeurogenCommand
from core.pruning import parse_targets
from core.reports import write_csv, write_json, write_workbook


class Command(NeurogenCommand):
    help = (
        "Runs one experiment: priming (priming saturation), scaling (scaling factor vs grown weights), "
        "priming-connections (priming cycles vs grown weights), prune-baseline, prune-fc20, "
        "or full (size and accuracy of every variant relative to the grown network)."
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("kind", choices=SweepKind.values, help="experiment to run")
        parser.add_argument(
            "--grid", type=float, nargs="+",
            help=(
                "parameter values: max cycles (priming, default 30), scaling factors (scaling, default 0.1..1.5), "
                "priming cycles (priming-connections, default 0..20) or thresholds (prune-*)"
            ),
        )
        parser.add_argument("--scaling-factor", type=float, help="growth scaling factor (default: 1.0)")
        parser.add_argument("--priming-cycles", type=int, help="growth priming cycles (default: 11)")
        parser.add_argument("--max-iterations", type=int, help="cap on growth iterations (default: 5)")
        parser.add_argument("--targets", default="fc", help="prune-* layer targets (default: fc)")
        parser.add_argument("--retrain", action="store_true", help="prune-*: fine-tune after pruning")
        parser.add_argument("--match-weights", type=int, help="prune-fc20: add a point pruned to this size")

    def run(self, **options):
        kind = SweepKind(options["kind"])
        split = self.load_split(options)
        extra = {}
        if kind in (SweepKind.PRUNE_BASELINE, SweepKind.PRUNE_FC20):
            extra = {"targets": parse_targets(options["targets"]), "retrain": options["retrain"]}
            if kind == SweepKind.PRUNE_FC20:
                extra["matched_weights"] = options["match_weights"]
        grid = tuple(options["grid"] or ())
        report = run_experiment(
            kind, split, grid, self.train_config(options), self.growth_config(options), **extra,
        )

        stem = f"experiment_{kind.value.replace('-', '_')}"
        json_path = write_json(self.out_path(options, f"{stem}.json"), report.to_dict())
        csv_path = write_csv(self.out_path(options, f"{stem}.csv"), report.columns, report.rows)
        if options["xlsx"]:
            write_workbook(
                self.out_path(options, f"{stem}.xlsx"), kind.label,
                {"Resultados": (report.columns, report.rows)},
                {"optimum": report.optimum, "reference": report.reference},
            )
        self.stdout.write(self.style.SUCCESS(f"{kind.label}: {len(report.rows)} rows, optimum {report.optimum}"))
        self.stdout.write(f"json: {json_path}\ncsv: {csv_path}")

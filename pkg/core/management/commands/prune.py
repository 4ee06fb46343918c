from core.management.options import NeurogenCommand
from core.network import load, save
from core.pruning import PruneSpec, parse_targets, prune, sweep, threshold_for_weight_count
from core.reports import PRUNE_COLUMNS, record_run, write_json, write_prune_csv, write_workbook


class Command(NeurogenCommand):
    help = "Magnitude-prunes a saved model over a threshold sweep and reports test accuracy per threshold."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("model", help="model file written by train-baseline or grow")
        parser.add_argument(
            "--thresholds", type=float, nargs="+", required=True,
            help="weights with |w| below a threshold are removed; biases are kept",
        )
        parser.add_argument(
            "--targets", default="fc",
            help="layers to prune: fc (dense, sparse and classifier), conv, all, or indices like 2,3 (default: fc)",
        )
        parser.add_argument("--retrain", action="store_true", help="fine-tune each pruned network, masks held")
        parser.add_argument(
            "--match-weights", type=int,
            help="also save the model pruned down to at most this many weights",
        )

    def run(self, **options):
        targets = parse_targets(options["targets"])
        network = load(options["model"])
        split = self.load_split(options)
        config = self.train_config(options)
        results = sweep(
            network, options["thresholds"], split.test, targets,
            retrain_split=split if options["retrain"] else None, train_config=config,
        )
        csv_path = write_prune_csv(self.out_path(options, f"{network.name}_prune.csv"), results)
        payload = {
            "model": str(options["model"]),
            "network": network.name,
            "targets": str(targets),
            "retrained": options["retrain"],
            "original_weights": network.weight_count,
            "results": [r.to_dict() for r in results],
        }
        if options["match_weights"] is not None:
            threshold = threshold_for_weight_count(network, options["match_weights"], targets)
            matched, result = prune(network, PruneSpec(threshold, targets), split.test)
            matched_path = self.out_path(options, f"{network.name}_pruned.ngnet")
            save(matched, matched_path)
            payload["matched"] = result.to_dict()
            self.stdout.write(f"matched model: {matched_path} ({matched.weight_count} weights)")
        write_json(self.out_path(options, f"{network.name}_prune.json"), payload)
        if options["xlsx"]:
            write_workbook(
                self.out_path(options, f"{network.name}_prune.xlsx"), f"{network.name} pruning",
                {"Poda": (PRUNE_COLUMNS, [r.to_dict() for r in results])},
                {"model": str(options["model"]), "original_weights": network.weight_count},
            )
        if options["record"]:
            record_run("prune", network, {**config.to_dict(), "targets": str(targets)}, prune_results=results)

        for r in results:
            accuracy = "-" if r.test_accuracy is None else f"{r.test_accuracy:.2f}%"
            self.stdout.write(f"{r.threshold:g}\t{r.removed_percent:.2f}%\t{r.remaining_weights}\t{accuracy}")
        self.stdout.write(self.style.SUCCESS(f"pruning sweep written to {csv_path}"))

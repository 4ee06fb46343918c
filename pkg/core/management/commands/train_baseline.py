from core.choices import NetworkKind
from core.experiments import train_fresh
from core.management.options import NeurogenCommand
from core.network import build_baseline, save
from core.reports import METRICS_COLUMNS, record_run, write_json, write_metrics_csv, write_workbook


class Command(NeurogenCommand):
    help = (
        "Trains the baseline network (2D conv 6x7x7 stride 2, 3D conv 50x7x7x6 stride 4, "
        "dense FC 100, classifier 10; 61,160 weights) and writes its metrics CSV and model file."
    )

    def run(self, **options):
        split = self.load_split(options)
        config = self.train_config(options)
        result = train_fresh(build_baseline, split, config)

        metrics_path = write_metrics_csv(self.out_path(options, "baseline_metrics.csv"), result.history)
        model_path = self.out_path(options, "baseline.ngnet")
        save(result.network, model_path)
        summary = {
            "network": str(NetworkKind.BASELINE),
            "config": config.to_dict(),
            "stopping_reason": str(result.stopping_reason),
            "peak_cycle": result.peak_cycle,
            "peak_validation": result.peak_validation,
            "test_at_peak": result.test_at_peak,
            "weights": result.network.weight_count,
            "size": result.network.count().to_dict(),
        }
        write_json(self.out_path(options, "baseline_report.json"), summary)
        if options["xlsx"]:
            write_workbook(
                self.out_path(options, "baseline.xlsx"), "baseline",
                {"Ciclos": (METRICS_COLUMNS, [m.to_dict() for m in result.history])},
                {k: v for k, v in summary.items() if k != "size"},
            )
        if options["record"]:
            record_run("train-baseline", result.network, config.to_dict(), result)

        self.stdout.write(self.style.SUCCESS(
            f"baseline: {len(result.history)} cycles ({result.stopping_reason}), "
            f"peak validation {result.peak_validation:.2f}% at cycle {result.peak_cycle}, "
            f"test {_pct(result.test_at_peak)}, {result.network.weight_count} weights"
        ))
        self.stdout.write(f"metrics: {metrics_path}\nmodel: {model_path}")


def _pct(value):
    return "-" if value is None else f"{value:.2f}%"

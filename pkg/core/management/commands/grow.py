from core.choices import Band
from core.growth import ang
from core.management.options import NeurogenCommand
from core.network import save
from core.reports import METRICS_COLUMNS, record_run, write_json, write_metrics_csv, write_workbook


class Command(NeurogenCommand):
    help = (
        "Runs artificial neurogenesis: primes the seed network, grows a sparse layer from "
        "class extremes and trains the grown network. Writes the grown model and a growth report."
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--scaling-factor", type=float,
            help="critical band half-width in standard deviations (default: 1.0, the sweep's chosen factor)",
        )
        parser.add_argument(
            "--priming-cycles", type=int,
            help="seed priming cycles before growth (default: 11, the peak-validation priming count)",
        )
        parser.add_argument(
            "--accuracy-target", type=float, default=0.0,
            help="peak validation accuracy (%%) that ends growth; unmet targets grow again (default: 0, one iteration)",
        )
        parser.add_argument("--max-iterations", type=int, help="cap on growth iterations (default: 5)")
        parser.add_argument(
            "--band", choices=Band.values, default=Band.INSIDE,
            help="inside: outputs within x sigma of the mean are critical; outside: beyond it (default: inside)",
        )

    def run(self, **options):
        split = self.load_split(options)
        train_config = self.train_config(options)
        growth_config = self.growth_config(options, accuracy_target=options["accuracy_target"], band=options["band"])
        network, report = ang(split, growth_config, train_config)

        model_path = self.out_path(options, "grown.ngnet")
        save(network, model_path)
        report_path = write_json(self.out_path(options, "growth_report.json"), report.to_dict())
        last = report.last
        write_metrics_csv(self.out_path(options, "priming_metrics.csv"), report.priming)
        write_metrics_csv(self.out_path(options, "grown_metrics.csv"), last.history)
        if options["xlsx"]:
            extremes = [entry.to_dict() for it in report.iterations for entry in it.critical.entries]
            write_workbook(
                self.out_path(options, "growth.xlsx"), "growth",
                {
                    "Priming": (METRICS_COLUMNS, [m.to_dict() for m in report.priming]),
                    "Ciclos": (METRICS_COLUMNS, [m.to_dict() for m in last.history]),
                    "Extremos": (("class_id", "role", "member_id", "mse", "mu", "sigma", "connections"), extremes),
                },
                {"weights": network.weight_count, "finish": report.finish, "test_at_peak": last.test_at_peak},
            )
        if options["record"]:
            config = {"train": train_config.to_dict(), "growth": growth_config.to_dict(), "seed": train_config.seed}
            record_run("grow", network, config, history=last.history)

        self.stdout.write(self.style.SUCCESS(
            f"grown network: {network.weight_count} weights, {report.grown_connections} grown connections, "
            f"{len(report.iterations)} iteration(s) ({report.finish}), "
            f"test {'-' if last.test_at_peak is None else f'{last.test_at_peak:.2f}%'}"
        ))
        self.stdout.write(f"model: {model_path}\nreport: {report_path}")

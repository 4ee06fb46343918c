"""Option handling shared by the neurogenese management commands.

Every tunable resolves as: explicit flag, then the ``--config`` key=value
file, then ``settings.NEUROGEN``.
"""
import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from dotenv import dotenv_values

from core.errors import ConfigError, NeurogenError
from core.growth import GrowthConfig
from core.mnist import load_mnist
from core.training import TrainConfig

logger = logging.getLogger(__name__)

# option name -> (settings key, cast)
TUNABLES = {
    "data_dir": ("DATA_DIR", str),
    "out_dir": ("OUT_DIR", str),
    "seed": ("SEED", int),
    "learning_rate": ("LEARNING_RATE", float),
    "max_cycles": ("MAX_CYCLES", int),
    "patience": ("PATIENCE", int),
    "priming_cycles": ("PRIMING_CYCLES", int),
    "scaling_factor": ("SCALING_FACTOR", float),
    "max_iterations": ("MAX_ANG_ITERATIONS", int),
    "eval_chunk": ("EVAL_CHUNK", int),
}


class NeurogenCommand(BaseCommand):
    """Base for commands that load data and train; subclasses implement ``run``."""

    def add_arguments(self, parser):
        parser.add_argument("--data-dir", help="directory with the four MNIST IDX files (default: $NEUROGEN_DATA_DIR)")
        parser.add_argument("--out-dir", help="directory for models and reports (default: $NEUROGEN_OUT_DIR or ./out)")
        parser.add_argument(
            "--seed", type=int,
            help="seed of the one generator used for weight init and shuffles (default: 0, $NEUROGEN_SEED)",
        )
        parser.add_argument(
            "--learning-rate", type=float,
            help="per-image SGD step size (default: 0.01; the method fixes none, tune it toward the target accuracies)",
        )
        parser.add_argument(
            "--max-cycles", type=int,
            help="stop after this many training cycles (default: 30, the cycle cap of the ANG stopping criteria)",
        )
        parser.add_argument(
            "--patience", type=int,
            help=(
                "stop after this many cycles without a new validation maximum "
                "(default: 20, the no-improvement window of the ANG stopping criteria)"
            ),
        )
        parser.add_argument("--config", help="key=value file setting any of the options above; flags win")
        parser.add_argument("--record", action="store_true", help="archive the run in the database")
        parser.add_argument("--xlsx", action="store_true", help="also write an .xlsx workbook")

    def handle(self, *args, **options):
        try:
            self.options = self.resolve(options)
            return self.run(**self.options)
        except ConfigError as e:
            raise CommandError(str(e), returncode=2) from e
        except (NeurogenError, OSError) as e:
            raise CommandError(f"{type(e).__name__}: {e}", returncode=1) from e

    def run(self, **options):
        raise NotImplementedError

    def resolve(self, options: dict) -> dict:
        resolved = dict(options)
        from_file = {}
        if options.get("config"):
            path = Path(options["config"])
            if not path.is_file():
                raise ConfigError(f"config file not found: {path}")
            from_file = {key.strip().lower().replace("-", "_"): value for key, value in dotenv_values(path).items()}
        for name, (key, cast) in TUNABLES.items():
            if options.get(name) is not None:
                continue
            if from_file.get(name) not in (None, ""):
                try:
                    resolved[name] = cast(from_file[name])
                except ValueError:
                    raise ConfigError(f"invalid value for {name} in {options['config']}: {from_file[name]!r}") from None
            else:
                resolved[name] = settings.NEUROGEN[key]
        return resolved

    def train_config(self, options) -> TrainConfig:
        return TrainConfig(
            max_cycles=options["max_cycles"],
            patience=options["patience"],
            learning_rate=options["learning_rate"],
            seed=options["seed"],
            eval_chunk=options["eval_chunk"],
        )

    def growth_config(self, options, **overrides) -> GrowthConfig:
        values = {
            "scaling_factor": options["scaling_factor"],
            "priming_cycles": options["priming_cycles"],
            "max_iterations": options["max_iterations"],
        }
        values.update(overrides)
        return GrowthConfig(**values)

    def load_split(self, options):
        if not options["data_dir"]:
            raise ConfigError("no data directory: pass --data-dir or set NEUROGEN_DATA_DIR")
        return load_mnist(options["data_dir"], seed=0, val_count=settings.NEUROGEN["VALIDATION_COUNT"])

    def out_path(self, options, name) -> Path:
        out = Path(options["out_dir"])
        out.mkdir(parents=True, exist_ok=True)
        return out / name

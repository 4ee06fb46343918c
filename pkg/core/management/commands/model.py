import json

from django.core.management.base import BaseCommand, CommandError

from core.errors import NeurogenError
from core.network import load


class Command(BaseCommand):
    help = "Inspects model files. `model info <path>` prints per-layer and total weights and connections as JSON."

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="action", required=True)
        info = subparsers.add_parser("info", help="size report of a model file")
        info.add_argument("path")

    def handle(self, *args, **options):
        try:
            network = load(options["path"])
        except (NeurogenError, OSError) as e:
            raise CommandError(f"{type(e).__name__}: {e}", returncode=1) from e
        self.stdout.write(json.dumps(network.count().to_dict(), indent=2, sort_keys=True))

import json

from django.core.management.base import BaseCommand

from core.models import TrainingRun


class Command(BaseCommand):
    help = "Lists archived runs (stored with --record) as JSON, newest first."

    def add_arguments(self, parser):
        parser.add_argument("--command", dest="run_command", help="only runs of this command, e.g. grow")
        parser.add_argument("--limit", type=int, default=20)

    def handle(self, *args, **options):
        runs = TrainingRun.objects.all()
        if options["run_command"]:
            runs = runs.filter(command=options["run_command"])
        payload = [run.to_dict() for run in runs[: options["limit"]]]
        self.stdout.write(json.dumps(payload, indent=2, sort_keys=True))

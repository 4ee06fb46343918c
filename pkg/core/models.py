from django.db import models

from .choices import NetworkKind, StoppingReason


class TrainingRun(models.Model):
    command = models.CharField(max_length=50, db_index=True)
    network_kind = models.CharField(max_length=20, choices=NetworkKind.choices, default=NetworkKind.CUSTOM)
    seed = models.IntegerField(default=0)
    config = models.JSONField("Configuração", default=dict)
    stopping_reason = models.CharField(max_length=30, choices=StoppingReason.choices, blank=True)
    final_weights = models.PositiveIntegerField()
    peak_validation = models.FloatField(null=True, blank=True)
    test_at_peak = models.FloatField(null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["-created_at"]
        indexes = [
            models.Index(fields=["command"], name="core_traini_command_5b1c2e_idx"),
            models.Index(fields=["network_kind"], name="core_traini_network_8f0a41_idx"),
            models.Index(fields=["created_at"], name="core_traini_created_3d9e77_idx"),
        ]

    def __str__(self):
        return f"{self.command} {self.network_kind} seed={self.seed} - {self.final_weights} weights"

    def to_dict(self) -> dict:
        return {
            "id": self.pk,
            "command": self.command,
            "network": self.network_kind,
            "seed": self.seed,
            "stopping_reason": self.stopping_reason,
            "final_weights": self.final_weights,
            "peak_validation": self.peak_validation,
            "test_at_peak": self.test_at_peak,
            "cycles": self.cycles.count(),
            "prune_points": self.prune_points.count(),
            "created_at": self.created_at.isoformat(),
        }


class CycleRecord(models.Model):
    run = models.ForeignKey(TrainingRun, on_delete=models.CASCADE, related_name="cycles")
    cycle = models.PositiveIntegerField()
    train = models.FloatField()
    validate = models.FloatField()
    test = models.FloatField(null=True, blank=True)
    weights = models.PositiveIntegerField()

    class Meta:
        ordering = ["run", "cycle"]
        constraints = [
            models.UniqueConstraint(fields=["run", "cycle"], name="uniq_run_cycle"),
        ]

    def __str__(self):
        return f"run {self.run_id} cycle {self.cycle}: {self.validate:.2f}%"


class PruneRecord(models.Model):
    run = models.ForeignKey(TrainingRun, on_delete=models.CASCADE, related_name="prune_points")
    threshold = models.FloatField()
    removed_fraction = models.FloatField()
    remaining_weights = models.PositiveIntegerField()
    test_accuracy = models.FloatField(null=True, blank=True)
    retrained = models.BooleanField(default=False)

    class Meta:
        ordering = ["run", "threshold"]
        indexes = [
            models.Index(fields=["run", "threshold"], name="core_prunere_run_id_4c7a90_idx"),
        ]

    def __str__(self):
        return f"run {self.run_id} t={self.threshold:g}: {100 * self.removed_fraction:.2f}% removed"

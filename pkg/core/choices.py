from django.db.models import TextChoices


class NetworkKind(TextChoices):
    BASELINE = "baseline", "Baseline (4 layers)"
    SEED = "seed", "Seed network"
    GROWN = "grown", "ANG grown network"
    FC20 = "fc20", "20 perceptron fully connected"
    CUSTOM = "custom", "Custom"


class StoppingReason(TextChoices):
    MAX_CYCLES = "max_cycles", "Max cycles reached"
    PERFECT_VALIDATION = "perfect_validation", "Validation accuracy reached target"
    PATIENCE = "patience", "Validation did not improve"


class Band(TextChoices):
    INSIDE = "inside", "|o - mean| <= x*sigma"
    OUTSIDE = "outside", "|o - mean| > x*sigma"


class SweepKind(TextChoices):
    PRIMING_SATURATION = "priming", "Seed network priming accuracy"
    SCALING_FACTOR = "scaling", "Scaling factor sweep"
    PRIMING_VS_CONNECTIONS = "priming-connections", "Priming cycles vs critical connections"
    PRUNE_BASELINE = "prune-baseline", "Pruned baseline"
    PRUNE_FC20 = "prune-fc20", "Pruned 20 FC network"
    FULL_COMPARISON = "full", "Network size relative to grown network"


class Activation(TextChoices):
    TANH = "tanh", "tanh"
    IDENTITY = "identity", "identity (classifier logits)"


class PruneTarget(TextChoices):
    FC = "fc", "Fully connected and classifier layers"
    CONV = "conv", "Convolution layers"
    ALL = "all", "Every layer"

"""
Serializers for experiment artifacts and reports.
Field order is the key order of the rendered JSON.
"""

from rest_framework import serializers

from evaluation.serializers import EvalReportSerializer, EvalSummarySerializer
from training.models import TrainConfig


class TrainConfigSerializer(serializers.Serializer):
    """Serializer for the optimizer settings of a run."""

    k_s = serializers.FloatField()
    k_e = serializers.FloatField()
    K = serializers.IntegerField(min_value=1)
    convergence_rtol = serializers.FloatField(min_value=0)
    seed = serializers.IntegerField()
    code_length = serializers.IntegerField(min_value=1)
    regularizer = serializers.CharField()
    workers = serializers.IntegerField(min_value=1)

    def create(self, validated_data):
        return TrainConfig(**validated_data)


class ViewHeaderSerializer(serializers.Serializer):
    """Shape and fixed scalars of one view in a model artifact."""

    view_id = serializers.CharField()
    is_label_view = serializers.BooleanField()
    d = serializers.IntegerField(min_value=1)
    c = serializers.IntegerField(min_value=1)
    alpha = serializers.FloatField()
    beta = serializers.FloatField()
    gamma = serializers.FloatField()
    prescaled = serializers.BooleanField()


class ModelHeaderSerializer(serializers.Serializer):
    """JSON header of a model artifact; the matrices follow it in binary."""

    format_version = serializers.IntegerField()
    code_length = serializers.IntegerField(min_value=1)
    regularizer = serializers.CharField()
    variant = serializers.CharField()
    train_config = TrainConfigSerializer(source='config')
    views = ViewHeaderSerializer(many=True, source='view_entries')
    provenance = serializers.JSONField()

    def validate(self, attrs):
        views = attrs['view_entries']
        if not views:
            raise serializers.ValidationError("a model needs at least one view")
        lengths = {view['c'] for view in views}
        if lengths != {attrs['code_length']}:
            raise serializers.ValidationError(
                f"views disagree with the code length {attrs['code_length']}: {sorted(lengths)}"
            )
        return attrs


class TraceSerializer(serializers.Serializer):
    """Serializer for a training trace; the wall clock time stays in the log."""

    iterations_run = serializers.IntegerField()
    converged = serializers.BooleanField()
    final_objective = serializers.FloatField()
    objective_per_iteration = serializers.ListField(child=serializers.FloatField())
    step_sizes = serializers.ListField(child=serializers.FloatField())


class EvaluationFileSerializer(serializers.Serializer):
    """One evaluation report file: every direction of one model."""

    model = serializers.CharField()
    code_length = serializers.IntegerField()
    variant = serializers.CharField()
    query_split = serializers.CharField()
    directions = EvalReportSerializer(many=True)


class AblationRowSerializer(serializers.Serializer):
    """One ablation run; metrics carry no timings so reports compare byte for byte."""

    parameter = serializers.CharField()
    value = serializers.FloatField()
    seed = serializers.IntegerField()
    code_length = serializers.IntegerField()
    decorrelation = serializers.FloatField()
    embedding_correlation = serializers.FloatField()
    iterations = serializers.IntegerField()
    final_objective = serializers.FloatField()
    delta_map = serializers.ListField(child=serializers.FloatField())
    delta_f1 = serializers.ListField(child=serializers.FloatField())
    reports = EvalSummarySerializer(many=True)


class AblationReportSerializer(serializers.Serializer):
    dataset = serializers.JSONField()
    train_config = TrainConfigSerializer()
    seeds = serializers.ListField(child=serializers.IntegerField())
    rows = AblationRowSerializer(many=True)


class GradientCheckSerializer(serializers.Serializer):
    seed = serializers.IntegerField()
    target = serializers.CharField()
    regularizer = serializers.CharField()
    gamma = serializers.FloatField()
    n = serializers.IntegerField()
    d = serializers.IntegerField()
    c = serializers.IntegerField()
    max_abs_error = serializers.FloatField()
    max_rel_error = serializers.FloatField()
    passed = serializers.BooleanField()


class PropositionCheckSerializer(serializers.Serializer):
    check = serializers.CharField()
    seed = serializers.IntegerField()
    value = serializers.FloatField()
    threshold = serializers.FloatField()
    passed = serializers.BooleanField(allow_null=True)
    informational = serializers.BooleanField()
    detail = serializers.CharField(allow_blank=True)


class GradientCheckTableSerializer(serializers.Serializer):
    passed = serializers.BooleanField()
    failures = serializers.IntegerField()
    rows = GradientCheckSerializer(many=True)


class PropositionCheckTableSerializer(serializers.Serializer):
    passed = serializers.BooleanField()
    failures = serializers.IntegerField()
    rows = PropositionCheckSerializer(many=True)

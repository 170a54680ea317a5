"""
Serializers for evaluation reports.
Field order is the key order of the rendered JSON.
"""

from rest_framework import serializers


class EvalSummarySerializer(serializers.Serializer):
    """Metrics of one retrieval direction, without per-query detail."""

    task = serializers.CharField()
    code_length = serializers.IntegerField()
    map = serializers.FloatField()
    precision = serializers.FloatField()
    recall = serializers.FloatField()
    f1 = serializers.FloatField()
    radius = serializers.IntegerField()
    R = serializers.IntegerField()
    valid_queries = serializers.IntegerField()
    excluded_queries = serializers.IntegerField()


class EvalReportSerializer(EvalSummarySerializer):
    """Full report of one retrieval direction; timings are logged, never written."""

    per_query_ap = serializers.ListField(child=serializers.FloatField())

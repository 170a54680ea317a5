from django.apps import AppConfig


class MultimodalConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "multimodal"
    verbose_name = "Multimodal datasets"

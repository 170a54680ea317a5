from django.apps import AppConfig


class HashingConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "hashing"
    verbose_name = "Hashing model"

from django.apps import AppConfig


class RecoveryConfig(AppConfig):
    name = 'recovery'
    verbose_name = 'Low-rank recovery problems and solver'

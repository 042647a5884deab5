from django.apps import AppConfig


class AdversariesConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'adversaries'
    verbose_name = 'Adversaries'

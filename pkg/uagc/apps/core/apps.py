from django.apps import AppConfig

class CoreConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'uagc.apps.core'
    label = 'core'
    verbose_name = 'Pipeline UAGC'

from django.apps import AppConfig


class ProxiesConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'proxies'

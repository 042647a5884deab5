from django.conf import settings
from django.core.exceptions import ImproperlyConfigured


def lab_setting(name, default):
    """Read a SERVERLAB_* setting, falling back when no settings module is configured."""
    try:
        return getattr(settings, name, default)
    except ImproperlyConfigured:
        return default

"""URL configuration for serverlab; only the admin browses stored experiment records."""

from django.contrib import admin
from django.urls import path

admin.site.site_header = 'serverlab experiments'
admin.site.site_title = 'serverlab'

urlpatterns = [
    path('admin/', admin.site.urls),
]

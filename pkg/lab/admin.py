from django.contrib import admin

from .models import ExperimentRecord


@admin.register(ExperimentRecord)
class ExperimentRecordAdmin(admin.ModelAdmin):
    list_display = ('algorithm', 'params', 'instance', 'online', 'offline', 'offline_kind', 'ratio', 'stop_reason', 'created_at')
    list_filter = ('algorithm', 'offline_kind', 'stop_reason', 'command')
    search_fields = ('algorithm', 'params', 'instance')
    readonly_fields = ('created_at',)
    fieldsets = (
        ('Run', {
            'fields': ('command', 'algorithm', 'params', 'instance', 'stop_reason')
        }),
        ('Costs', {
            'fields': ('online', 'offline', 'offline_kind', 'ratio', 'is_infinite')
        }),
        ('Timestamps', {
            'fields': ('created_at',),
            'classes': ('collapse',)
        }),
    )
    list_per_page = 50

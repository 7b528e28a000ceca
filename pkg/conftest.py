import os

import django


os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'ozone_network.settings')
django.setup()

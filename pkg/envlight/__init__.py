"""
HDR environment-map estimation from the RGBD appearance of objects.

The numerical modules (radiometry, geometry, scene, forward, decompose,
translate, fuse, temporal, metrics) depend only on numpy/scipy and on
``django.conf.settings`` for defaults; the command-line surface is a set of
Django management commands reachable through ``manage.py`` or ``python -m envlight``.
"""

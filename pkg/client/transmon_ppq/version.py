# -*- coding: utf-8 -*-
"""Package declaring transmon_ppq version."""
__version__ = "1.0.0"

import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "kaclab", max_examples=int(os.environ.get("KACLAB_HYPOTHESIS_EXAMPLES", 60)),
    deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("kaclab")

import os

from hypothesis import HealthCheck, settings

# property tests are derandomized: the seed is fixed by the example database-free profile
settings.register_profile("repo", derandomize=True, deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow], database=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))

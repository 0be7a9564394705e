from ._sdd import *  # noqa: F401,F403

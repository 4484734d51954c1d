from .__version import __version__

from .__config__ import *

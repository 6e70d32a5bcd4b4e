from .ops import *
from .utilities import *

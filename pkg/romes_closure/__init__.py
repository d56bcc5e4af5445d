__version__ = '0.1.0'

from romes_closure import errors
from romes_closure import utils
from romes_closure import problems
from romes_closure import models
from romes_closure import losses
from romes_closure import runners

""" Network breakdown bounds for regular multigraph ensembles

Package to bound, simulate and enumerate the probability that random
lambda-regular networks break into pieces when nodes fail independently.


"""

__version__ = "0.1.0"


__all__ = ['bound',
           'cli',
           'combinatorics',
           'data_io',
           'ensemble',
           'faultsim',
           'misc',
           'oracle',
           ]

from . import combinatorics
from . import bound
from . import ensemble
from . import faultsim
from . import oracle
from . import misc
from . import data_io
from . import cli

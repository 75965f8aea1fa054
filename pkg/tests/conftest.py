import os
import sys

# make the independent tick-by-tick oracle importable from any test
sys.path.insert(0, os.path.dirname(__file__))

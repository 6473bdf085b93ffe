import sys

from simplicial_nets.cli import main

sys.exit(main())

import sys

from sepgraph.cli import main

sys.exit(main())

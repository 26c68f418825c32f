import sys

from aitrand.cli import main

sys.exit(main())
